#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "posdwell/hybrid.hpp"
#include "posdwell/model.hpp"

namespace posdwell {

class StepTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counter-based uniform draw in [0, 1) from (seed, stream, k).
double hash_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t k);

/// Random-access dwell-time sequence: T_k depends only on (seed, k).
struct SequenceGen {
  enum class Kind { Exact, UniformRange, MinPlusExp, Arbitrary };
  Kind kind = Kind::Exact;
  double t_min = 1.0;
  double t_max = 1.0;
  /// Rate of the exponential excess over t_min (MinPlusExp).
  double rate = 1.0;
  std::uint64_t seed = 0;

  static SequenceGen exact(double T, std::uint64_t seed = 0);
  static SequenceGen uniform_range(double lo, double hi, std::uint64_t seed = 0);
  /// T + Exp(rate), truncated at 10 T; rate defaults to 1/T.
  static SequenceGen min_plus_exp(double T, std::uint64_t seed = 0, std::optional<double> rate = {});
  /// Uniform on [0.05, 2].
  static SequenceGen arbitrary(std::uint64_t seed = 0);
  /// Default law for a dwell-time class.
  static SequenceGen for_dwell(const DwellTimeSpec& d, std::uint64_t seed = 0);

  /// Dwell time of interval k (k = 0 is the interval ending at the first jump).
  double operator()(long k) const;
  DwellTimeSpec spec() const;
  std::string to_string() const;
};

/// Input channel value; k is the index of the current interval (or of the jump).
using Signal = std::function<double(int channel, double t, long k)>;

struct Inputs {
  Signal wc;
  Signal wd;
};

enum class InputKind { ConstUnit, Sine, UniformRandom, Zero };

std::string to_string(InputKind k);
InputKind input_kind_from_string(const std::string& s);

/// const_unit: 1; sine: (1 + sin t)/2; uniform_random: i.i.d. U(0,1) per instant
/// (piecewise constant per interval for w_c); zero: 0.
Signal make_signal(InputKind kind, std::uint64_t seed = 0, std::uint64_t stream = 0);
/// Same law on both channels, independent streams.
Inputs generate_inputs(InputKind kind, std::uint64_t seed = 0);
/// Scales both channels by a.
Inputs scale_inputs(const Inputs& in, double a);
Inputs add_inputs(const Inputs& a, const Inputs& b);

struct Trajectory {
  int n = 0;
  /// Sample instants; each jump instant appears twice (pre- then post-jump).
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> zc;
  /// kappa(t, 0): jumps applied up to and including this sample.
  std::vector<long> jump_count;
  std::vector<int> modes;
  std::vector<double> jump_times;
  std::vector<Vector> pre_jump;
  std::vector<Vector> post_jump;
  std::vector<Vector> zd;
  std::vector<double> dwell;
  std::vector<int> jump_maps;
  long total_jumps = 0;

  // Running extrema, maintained even when samples are not recorded.
  double sup_zc = 0.0;
  double sup_zd = 0.0;
  double min_state = 0.0;
  double min_output = 0.0;
};

struct SimOptions {
  double horizon = 30.0;
  /// Defaults to min(1e-3, T_min / 50).
  std::optional<double> step;
  /// Seed for mode and jump-map selection.
  std::uint64_t seed = 0;
  int initial_mode = 0;
  bool self_check = true;
  /// Keep only running suprema (estimate_gain).
  bool record = true;
};

double default_step(const SequenceGen& gen);

Trajectory simulate(const HybridModel& m, const SequenceGen& gen, const Inputs& in, const Vector& x0,
                    const SimOptions& opt = {});
/// Open loop (clamped timer for minimum dwell time) or closed loop with ctrl.
Trajectory simulate(const ImpulsiveSystem& sys, const SequenceGen& gen, const Inputs& in,
                    const std::optional<ControllerRealization>& ctrl, const Vector& x0,
                    const SimOptions& opt = {});

struct GainOptions {
  int runs = 100;
  double horizon = 30.0;
  std::optional<double> step;
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// max over runs of max(sup ||z_c||_inf, sup ||z_d||_inf) with x0 = 0 and unit inputs.
double estimate_gain(const HybridModel& m, const SequenceGen& gen, const GainOptions& opt = {});

/// Integrates each column of X' = A(tau) X + E(tau) w 1^T from tau0 to tau1 with RK4
/// (w empty means no input). The step is shrunk so the mesh hits tau1 exactly.
Matrix propagate(const HybridModel& m, int mode, const Matrix& X0, double tau0, double tau1,
                 double step, const Vector& w = {});

void write_trajectory_csv(const Trajectory& tr, const std::string& path);
void write_jumps_csv(const Trajectory& tr, const std::string& path);
std::string format_number(double v);

}  // namespace posdwell

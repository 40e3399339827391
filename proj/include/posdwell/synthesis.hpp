#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "posdwell/analysis.hpp"
#include "posdwell/model.hpp"

namespace posdwell {

class IllPosed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ControllerKind { ArbitraryDT, ConstantDT, RangeDT, RangeDT_FixedKd, MinimumDT, SwitchedMinDT };

std::string to_string(ControllerKind k);
ControllerKind controller_kind_from_string(const std::string& s);

struct SynthesisOptions {
  /// Range dwell-time only: K_d independent of the elapsed dwell time.
  bool fixed_kd = false;
  std::optional<double> margin;
  int boost = 4;
  int max_boost = 10;
  int boost_step = 3;
  /// Certified lower bound on every diagonal entry of X.
  double x_min = 1e-3;
  /// Second LP: allow gamma up to (1 + condition_slack) times the optimum and
  /// maximise a common lower bound on diag X. The min-gamma vertex can pin X near
  /// x_min, which makes K_c = U_c X^-1 stiff.
  bool condition = true;
  double condition_slack = 1e-2;
  std::string dump_lp;
};

/// Gains u_c = U_c(tau) X(tau)^-1 x and u_d = U_d X(theta*)^-1 x(t_k), kept as
/// numerator/denominator data and evaluated on demand.
struct ControllerRealization {
  ControllerKind kind = ControllerKind::ConstantDT;
  /// X[mode][i]: diagonal of X; one mode except for switched systems.
  std::vector<std::vector<Poly>> X;
  /// Uc[mode]: m x n in the timer.
  std::vector<PolyMatrix> Uc;
  /// md x n; polynomial in theta for RangeDT, constant otherwise.
  PolyMatrix Ud;
  /// Diagonal of M for the fixed-K_d variant.
  std::vector<double> M;
  double gamma = 0.0;
  DwellTimeSpec dwell;
  int degree = 0;
  double margin = 0.0;
  double x_min = 0.0;
  int handelman_boost = 0;
  std::vector<HandelmanRecord> handelman;

  int num_modes() const { return static_cast<int>(X.size()); }
  /// Timer interval on which X and U_c are defined.
  double tau_end() const;
};

ControllerRealization synthesize(const ImpulsiveSystem& sys, const DwellTimeSpec& dwell,
                                 int degree = 2, const SynthesisOptions& opt = {});
ControllerRealization synthesize_switched(const SwitchedSystem& sw, double T, int degree = 2,
                                          const SynthesisOptions& opt = {});

/// K_c(tau) = U_c(tau) X(tau)^-1; tau is clamped at T for minimum dwell time.
Matrix realize_gain(const ControllerRealization& c, double tau, int mode = 0);
/// K_d(theta); theta is the dwell time that just elapsed (used by RangeDT only).
Matrix realize_jump_gain(const ControllerRealization& c, double theta);

/// Copositive certificate of the closed loop: zeta = X 1 with the synthesized gamma.
Certificate closed_loop_certificate(const ControllerRealization& c);

std::string controller_to_json(const ControllerRealization& c);
ControllerRealization controller_from_json(const std::string& text);
void save_controller(const ControllerRealization& c, const std::string& path);
ControllerRealization load_controller(const std::string& path);

}  // namespace posdwell

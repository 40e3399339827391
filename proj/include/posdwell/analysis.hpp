#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "posdwell/encoding.hpp"
#include "posdwell/model.hpp"

namespace posdwell {

class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The gridded relaxation is feasible but no Handelman certificate was found.
class RelaxationLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotConstant : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CertificateKind { ArbitraryDT, ConstantDT, MinimumDT, RangeDT, SwitchedMinDT, LtiCorollary };
enum class RangeMode { Direct, MuVariant };

std::string to_string(CertificateKind k);
CertificateKind certificate_kind_from_string(const std::string& s);

/// Strict rows are imposed as <= -margin with margin = factor * data scale.
inline constexpr double kDefaultMarginFactor = 1e-7;

struct AnalysisOptions {
  std::optional<double> margin;
  int boost = 4;
  int max_boost = 10;
  int boost_step = 3;
  /// Close the flow or the jump stability row (margin 0) when that channel is absent.
  bool close_flow = false;
  bool close_jump = false;
  double normalization = 1e6;
  /// Write the last LP solved to this path.
  std::string dump_lp;
};

struct Certificate {
  CertificateKind kind = CertificateKind::ConstantDT;
  double gamma = 0.0;
  /// zeta[mode][state]; one mode for impulsive systems.
  std::vector<std::vector<Poly>> zeta;
  /// mu(theta) for the mu variant of the range conditions.
  std::vector<Poly> mu;
  double margin = 0.0;
  DwellTimeSpec dwell;
  int degree = 0;
  RangeMode range_mode = RangeMode::Direct;
  bool close_flow = false;
  bool close_jump = false;
  int handelman_boost = 0;
  std::vector<HandelmanRecord> handelman;
};

Certificate analyze_arbitrary(const ImpulsiveSystem& sys, const AnalysisOptions& opt = {});
Certificate analyze_constant(const ImpulsiveSystem& sys, double T, int degree,
                             const AnalysisOptions& opt = {});
Certificate analyze_minimum(const ImpulsiveSystem& sys, double T, int degree,
                            const AnalysisOptions& opt = {});
Certificate analyze_range(const ImpulsiveSystem& sys, double t_min, double t_max, int degree,
                          RangeMode mode = RangeMode::Direct, const AnalysisOptions& opt = {});
/// Dispatches on the dwell-time kind.
Certificate analyze(const ImpulsiveSystem& sys, const DwellTimeSpec& dwell, int degree,
                    const AnalysisOptions& opt = {});

Certificate analyze_switched_min(const SwitchedSystem& sw, double T, int degree,
                                 const AnalysisOptions& opt = {});
double analyze_switched_blanchini(const SwitchedSystem& sw, double T, int grid_points,
                                  const AnalysisOptions& opt = {});

enum class LtiNorm { Linf, L1 };
enum class LtiTime { Continuous, Discrete };

struct LtiResult {
  double gamma = 0.0;
  /// xi for the L-infinity conditions, chi for the L1 conditions.
  Vector witness;
};

/// Continuous time uses the flow matrices (A, Ec, Cc, Fc); discrete time uses the
/// jump map (J, Ed, Cd, Fd).
LtiResult analyze_lti(const ImpulsiveSystem& sys, LtiNorm norm, LtiTime time,
                      const AnalysisOptions& opt = {});

/// max row sum of -C A^{-1} E + F.
double lti_linf_gain_closed_form(const Matrix& A, const Matrix& E, const Matrix& C, const Matrix& F);

std::string certificate_to_json(const Certificate& c);
Certificate certificate_from_json(const std::string& text);
void save_certificate(const Certificate& c, const std::string& path);
Certificate load_certificate(const std::string& path);

/// Margin used when the options do not override it.
double default_margin(double data_scale);

}  // namespace posdwell

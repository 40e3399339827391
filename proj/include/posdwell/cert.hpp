#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "posdwell/analysis.hpp"
#include "posdwell/hybrid.hpp"
#include "posdwell/synthesis.hpp"

namespace posdwell {

/// Certificate and system are incompatible (dimensions, modes, dwell kind).
class Mismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Slack tolerance relative to the row scale.
inline constexpr double kVerifySlackTol = 1e-8;

struct FamilySlack {
  /// Smallest scaled slack (slack / row scale) seen in the family.
  double worst = std::numeric_limits<double>::infinity();
  /// Row label and sample point of the worst slack.
  std::string row;
  double at = 0.0;
  int rows = 0;
};

struct VerificationReport {
  bool passed = true;
  std::map<std::string, FamilySlack> families;
  int grid_density = 0;
  /// Worst scaled slack of the discrete (state-transition) rows; NaN if not run.
  double phi_residual = std::numeric_limits<double>::quiet_NaN();
  /// Worst Handelman reconstruction error, or -1 when no records were checked.
  double handelman_error = -1.0;
  bool handelman_ok = true;
  std::vector<std::string> notes;

  double worst_slack() const;
  /// Row of the most violated constraint.
  std::string worst_row() const;
  std::string to_json() const;
  std::string to_table() const;
};

/// Re-evaluates the certificate rows on the given model. Interval rows are sampled
/// at `grid` equidistant points plus both endpoints.
VerificationReport verify(const Certificate& cert, const HybridModel& m, int grid = 1000);
/// Also re-validates the Handelman records stored in the certificate.
VerificationReport verify(const Certificate& cert, const ImpulsiveSystem& sys, int grid = 1000);
VerificationReport verify(const Certificate& cert, const SwitchedSystem& sw, int grid = 1000);
/// Closed-loop check of a synthesized controller.
VerificationReport verify(const ControllerRealization& ctrl, const ImpulsiveSystem& sys, int grid = 1000);
VerificationReport verify(const ControllerRealization& ctrl, const SwitchedSystem& sw, int grid = 1000);

/// Worst reconstruction error of the records; nullopt if any weight is negative.
std::optional<double> check_handelman(const std::vector<HandelmanRecord>& records);

/// Phi(to, from) with the timer at `from` equal to tau_from; the timer restarts at each
/// listed jump instant, and the jump map is evaluated at the elapsed dwell time.
Matrix transition_matrix(const HybridModel& m, double from, double to,
                         const std::vector<double>& jumps = {}, double step = 1e-3,
                         int mode = 0, int jump_map = 0, double tau_from = 0.0);

/// Integral-form (state-transition) conditions with lambda = zeta(0), integrated with RK4.
VerificationReport cross_check_discrete(const Certificate& cert, const HybridModel& m,
                                        double step = 1e-3);
VerificationReport cross_check_discrete(const Certificate& cert, const ImpulsiveSystem& sys,
                                        double step = 1e-3);
VerificationReport cross_check_discrete(const Certificate& cert, const SwitchedSystem& sw,
                                        double step = 1e-3);

}  // namespace posdwell

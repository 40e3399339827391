#pragma once

#include <functional>
#include <optional>

#include "posdwell/model.hpp"
#include "posdwell/synthesis.hpp"

namespace posdwell {

/// Continuous part at one timer value: x' = A x + E w, z = C x + F w.
struct FlowMats {
  Matrix A, E, C, F;
};

/// Jump part: x+ = J x + E w, z_d = C x + F w.
struct JumpMats {
  Matrix J, E, C, F;
};

/// Numerical view of an open- or closed-loop system. Closed loops are rational
/// in the timer, so everything downstream evaluates matrices pointwise.
struct HybridModel {
  int n = 0, pc = 0, qc = 0, pd = 0, qd = 0;
  /// Continuous modes (switched systems); impulsive systems have one.
  int num_modes = 1;
  /// Jump maps of an impulsive system; switched systems jump with the identity.
  int num_jump_maps = 1;
  bool switched = false;
  /// Timer value beyond which the flow is frozen (minimum dwell time).
  std::optional<double> clamp;
  /// Flow matrices do not depend on the timer.
  bool time_invariant = false;
  std::function<FlowMats(int mode, double tau)> flow;
  /// theta is the dwell time of the interval that just ended.
  std::function<JumpMats(int map, double theta)> jump;
};

HybridModel open_loop(const ImpulsiveSystem& sys, std::optional<double> clamp = std::nullopt);
HybridModel open_loop(const SwitchedSystem& sw, std::optional<double> clamp = std::nullopt);
/// A + Bc Kc(tau), J + Bd Kd(theta), with outputs C + D K.
HybridModel closed_loop(const ImpulsiveSystem& sys, const ControllerRealization& ctrl);
HybridModel closed_loop(const SwitchedSystem& sw, const ControllerRealization& ctrl);

/// Open loop with the timer clamp implied by the dwell-time kind.
HybridModel open_loop_for(const ImpulsiveSystem& sys, const DwellTimeSpec& dwell);

}  // namespace posdwell

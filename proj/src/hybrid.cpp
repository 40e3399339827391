#include "posdwell/hybrid.hpp"

#include <algorithm>

namespace posdwell {

namespace {

double frozen(std::optional<double> clamp, double tau) { return clamp ? std::min(tau, *clamp) : tau; }

}  // namespace

HybridModel open_loop(const ImpulsiveSystem& sys, std::optional<double> clamp) {
  sys.validate();
  HybridModel m;
  m.n = sys.n;
  m.pc = sys.pc;
  m.qc = sys.qc;
  m.pd = sys.pd;
  m.qd = sys.qd;
  m.num_jump_maps = static_cast<int>(sys.jumps.size());
  m.clamp = clamp;
  m.time_invariant = sys.is_constant();
  m.flow = [sys, clamp](int, double tau) {
    const FlowAt f = sys.flow(tau, clamp);
    return FlowMats{f.A, f.Ec, f.Cc, f.Fc};
  };
  m.jump = [sys](int map, double) {
    const JumpMap& j = sys.jumps.at(map);
    return JumpMats{j.J, j.Ed, j.Cd, j.Fd};
  };
  return m;
}

HybridModel open_loop(const SwitchedSystem& sw, std::optional<double> clamp) {
  sw.validate();
  HybridModel m;
  m.n = sw.n;
  m.pc = sw.p;
  m.qc = sw.q;
  m.num_modes = sw.num_modes();
  m.num_jump_maps = 1;
  m.switched = true;
  m.clamp = clamp;
  m.time_invariant = sw.max_degree() == 0;
  m.flow = [sw, clamp](int mode, double tau) {
    const Mode& md = sw.modes.at(mode);
    const double t = frozen(clamp, tau);
    return FlowMats{md.A.eval(t), md.E.eval(t), md.C.eval(t), md.F.eval(t)};
  };
  const int n = sw.n;
  m.jump = [n](int, double) {
    return JumpMats{Matrix::Identity(n, n), Matrix::Zero(n, 0), Matrix::Zero(0, n), Matrix::Zero(0, 0)};
  };
  return m;
}

HybridModel open_loop_for(const ImpulsiveSystem& sys, const DwellTimeSpec& dwell) {
  return open_loop(sys, dwell.clamp());
}

HybridModel closed_loop(const ImpulsiveSystem& sys, const ControllerRealization& ctrl) {
  if (ctrl.kind == ControllerKind::SwitchedMinDT)
    throw std::invalid_argument("closed_loop: switched controller on an impulsive system");
  if (ctrl.X.empty() || static_cast<int>(ctrl.X[0].size()) != sys.n || ctrl.Uc[0].rows() != sys.mc ||
      ctrl.Ud.rows() != sys.md)
    throw DimensionMismatch("closed_loop: controller does not match the system");
  HybridModel m = open_loop(sys, ctrl.dwell.clamp());
  m.time_invariant = sys.is_constant() && ctrl.kind == ControllerKind::ArbitraryDT;
  const auto clamp = ctrl.dwell.clamp();
  if (sys.is_constant()) {
    const FlowAt f = sys.flow(0.0);
    m.flow = [f, ctrl](int, double tau) {
      const Matrix K = realize_gain(ctrl, tau);
      return FlowMats{f.A + f.Bc * K, f.Ec, f.Cc + f.Dc * K, f.Fc};
    };
  } else {
    m.flow = [sys, ctrl, clamp](int, double tau) {
      const FlowAt f = sys.flow(tau, clamp);
      const Matrix K = realize_gain(ctrl, tau);
      return FlowMats{f.A + f.Bc * K, f.Ec, f.Cc + f.Dc * K, f.Fc};
    };
  }
  m.jump = [sys, ctrl](int map, double theta) {
    const JumpMap& j = sys.jumps.at(map);
    const Matrix K = realize_jump_gain(ctrl, theta);
    return JumpMats{j.J + j.Bd * K, j.Ed, j.Cd + j.Dd * K, j.Fd};
  };
  return m;
}

HybridModel closed_loop(const SwitchedSystem& sw, const ControllerRealization& ctrl) {
  if (ctrl.kind != ControllerKind::SwitchedMinDT || ctrl.num_modes() != sw.num_modes())
    throw DimensionMismatch("closed_loop: controller does not match the switched system");
  const double T = ctrl.dwell.t_min;
  HybridModel m = open_loop(sw, T);
  m.time_invariant = false;
  m.flow = [sw, ctrl, T](int mode, double tau) {
    const Mode& md = sw.modes.at(mode);
    const double t = std::min(tau, T);
    const Matrix K = realize_gain(ctrl, tau, mode);
    return FlowMats{md.A.eval(t) + md.B.eval(t) * K, md.E.eval(t), md.C.eval(t) + md.D.eval(t) * K,
                    md.F.eval(t)};
  };
  return m;
}

}  // namespace posdwell

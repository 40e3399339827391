#include "posdwell/cert.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "posdwell/sim.hpp"

namespace posdwell {

namespace {

using Kind = CertificateKind;

std::string idx(int i) { return "[" + std::to_string(i) + "]"; }

class Referee {
 public:
  explicit Referee(VerificationReport& r) : r_(r) {}

  // Records the row value >= 0 requirement; scale is the sum of absolute terms.
  void row(const std::string& family, const std::string& label, double value, double scale,
           double at) {
    FamilySlack& f = r_.families[family];
    ++f.rows;
    if (value < f.worst) {
      f.worst = value;
      f.row = label;
      f.at = at;
    }
    if (!std::isfinite(value) || value < -kVerifySlackTol * std::max(1.0, scale)) {
      if (r_.passed) r_.notes.push_back("violated " + label + " at " + format_number(at) +
                                        " (slack " + format_number(value) + ")");
      r_.passed = false;
    }
  }

 private:
  VerificationReport& r_;
};

Vector eval_vec(const std::vector<Poly>& p, double t) {
  Vector v(static_cast<int>(p.size()));
  for (size_t i = 0; i < p.size(); ++i) v[static_cast<int>(i)] = p[i](t);
  return v;
}

Vector deriv_vec(const std::vector<Poly>& p, double t) {
  Vector v(static_cast<int>(p.size()));
  for (size_t i = 0; i < p.size(); ++i) v[static_cast<int>(i)] = p[i].derivative()(t);
  return v;
}

Vector ones_times(const Matrix& M) {
  return M.cols() ? Vector(M.rowwise().sum()) : Vector(Vector::Zero(M.rows()));
}
Vector abs_ones_times(const Matrix& M) {
  return M.cols() ? Vector(M.cwiseAbs().rowwise().sum()) : Vector(Vector::Zero(M.rows()));
}

std::vector<double> grid_points(double a, double b, int grid) {
  if (b <= a) return {a};
  std::vector<double> pts;
  for (int k = 0; k <= grid; ++k) pts.push_back(k == grid ? b : a + (b - a) * k / grid);
  return pts;
}

// -zeta' + A zeta + E 1 <= 0 and C zeta + F 1 <= gamma at one timer value.
void flow_rows(Referee& ref, const FlowMats& f, const Vector& z, const Vector& dz, double gamma,
               double tau, const std::string& tag, const std::string& flow_fam,
               const std::string& out_fam) {
  const Vector Az = f.A * z, e = ones_times(f.E);
  const Vector sA = f.A.cwiseAbs() * z.cwiseAbs(), sE = abs_ones_times(f.E);
  for (int i = 0; i < z.size(); ++i)
    ref.row(flow_fam, flow_fam + tag + idx(i), dz[i] - Az[i] - e[i], sA[i] + std::abs(dz[i]) + sE[i], tau);
  const Vector Cz = f.C * z, fo = ones_times(f.F);
  const Vector sC = f.C.cwiseAbs() * z.cwiseAbs(), sF = abs_ones_times(f.F);
  for (int k = 0; k < Cz.size(); ++k)
    ref.row(out_fam, out_fam + tag + idx(k), gamma - Cz[k] - fo[k], sC[k] + sF[k] + gamma, tau);
}

// J post - zeta(0) + Ed 1 <= 0 and Cd post + Fd 1 <= gamma.
void jump_rows(Referee& ref, const JumpMats& J, const Vector& post, const Vector& z0, double gamma,
               double theta, const std::string& tag) {
  const Vector Jp = J.J * post, e = ones_times(J.E);
  const Vector sJ = J.J.cwiseAbs() * post.cwiseAbs(), sE = abs_ones_times(J.E);
  for (int i = 0; i < post.size(); ++i)
    ref.row("jump", "jump" + tag + idx(i), z0[i] - Jp[i] - e[i], sJ[i] + std::abs(z0[i]) + sE[i], theta);
  const Vector Cp = J.C * post, fo = ones_times(J.F);
  const Vector sC = J.C.cwiseAbs() * post.cwiseAbs(), sF = abs_ones_times(J.F);
  for (int k = 0; k < Cp.size(); ++k)
    ref.row("output_d", "output_d" + tag + idx(k), gamma - Cp[k] - fo[k], sC[k] + sF[k] + gamma, theta);
}

void check_kind(const Certificate& c, const HybridModel& m) {
  if (c.zeta.empty()) throw Mismatch("certificate has no zeta");
  const bool sw = c.kind == Kind::SwitchedMinDT;
  if (sw != m.switched) throw Mismatch("certificate and system disagree on switching");
  if (c.kind == Kind::LtiCorollary) throw Mismatch("LTI certificates carry no timer rows");
  if (static_cast<int>(c.zeta.size()) != (sw ? m.num_modes : 1))
    throw Mismatch("certificate mode count does not match the system");
  for (const auto& z : c.zeta)
    if (static_cast<int>(z.size()) != m.n) throw Mismatch("certificate state dimension mismatch");
  using DK = DwellTimeSpec::Kind;
  const DK want = c.kind == Kind::ArbitraryDT  ? DK::Arbitrary
                  : c.kind == Kind::ConstantDT ? DK::Constant
                  : c.kind == Kind::RangeDT    ? DK::Range
                                               : DK::Minimum;
  if (c.dwell.kind != want) throw Mismatch("certificate kind and dwell-time class disagree");
  if (c.range_mode == RangeMode::MuVariant && static_cast<int>(c.mu.size()) != m.n)
    throw Mismatch("mu has the wrong length");
  if (c.kind == Kind::ArbitraryDT && !m.time_invariant)
    throw Mismatch("arbitrary dwell-time certificate needs a time-invariant system");
}

double tau_end(const Certificate& c) {
  switch (c.kind) {
    case Kind::ArbitraryDT: return 0.0;
    case Kind::RangeDT: return c.dwell.t_max;
    default: return c.dwell.t_min;
  }
}

}  // namespace

double VerificationReport::worst_slack() const {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& [k, f] : families) w = std::min(w, f.worst);
  return w;
}

std::string VerificationReport::worst_row() const {
  std::string row;
  double w = std::numeric_limits<double>::infinity();
  for (const auto& [k, f] : families)
    if (f.worst < w) {
      w = f.worst;
      row = f.row;
    }
  return row;
}

std::string VerificationReport::to_json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed;
  j["grid_density"] = grid_density;
  nlohmann::ordered_json fam = nlohmann::ordered_json::object();
  for (const auto& [k, f] : families)
    fam[k] = {{"worst_slack", f.worst}, {"row", f.row}, {"at", f.at}, {"rows", f.rows}};
  j["worst_slack"] = fam;
  if (std::isnan(phi_residual))
    j["phi_residual"] = nullptr;
  else
    j["phi_residual"] = phi_residual;
  if (handelman_error < 0.0)
    j["handelman_error"] = nullptr;
  else
    j["handelman_error"] = handelman_error;
  j["handelman_ok"] = handelman_ok;
  j["notes"] = notes;
  return j.dump(2) + "\n";
}

std::string VerificationReport::to_table() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %14s  %-28s %10s %6s\n", "family", "worst slack", "row", "at", "rows");
  os << buf;
  for (const auto& [k, f] : families) {
    std::snprintf(buf, sizeof buf, "%-20s %14.6e  %-28s %10s %6d\n", k.c_str(), f.worst, f.row.c_str(),
                  format_number(f.at).c_str(), f.rows);
    os << buf;
  }
  if (!std::isnan(phi_residual)) os << "phi residual: " << format_number(phi_residual) << "\n";
  if (handelman_error >= 0.0)
    os << "handelman: " << (handelman_ok ? "ok" : "FAILED") << " (max error "
       << format_number(handelman_error) << ")\n";
  for (const auto& n : notes) os << n << "\n";
  os << "grid density: " << grid_density << "\n" << (passed ? "PASSED" : "FAILED") << "\n";
  return os.str();
}

std::optional<double> check_handelman(const std::vector<HandelmanRecord>& records) {
  double worst = 0.0;
  for (const auto& r : records) {
    if (!r.cert.weights_nonnegative()) return std::nullopt;
    const double scale = std::max(1.0, r.target.max_abs_coeff());
    worst = std::max(worst, r.cert.reconstruction_error(r.target, r.margin) / scale);
  }
  return worst;
}

VerificationReport verify(const Certificate& c, const HybridModel& m, int grid) {
  if (grid < 1) throw std::invalid_argument("verify: grid must be >= 1");
  check_kind(c, m);
  VerificationReport rep;
  rep.grid_density = grid;
  Referee ref(rep);
  const double g = c.gamma;
  const double T = tau_end(c);
  const bool sw = c.kind == Kind::SwitchedMinDT;
  const bool many = m.num_jump_maps > 1;

  for (int s = 0; s < static_cast<int>(c.zeta.size()); ++s) {
    const auto& zeta = c.zeta[s];
    const std::string ms = sw ? idx(s) : "";
    for (double tau : grid_points(0.0, T, grid)) {
      const Vector z = eval_vec(zeta, tau);
      const Vector dz = c.kind == Kind::ArbitraryDT ? Vector::Zero(m.n) : deriv_vec(zeta, tau);
      flow_rows(ref, m.flow(s, tau), z, dz, g, tau, ms, "flow", "output_c");
      for (int i = 0; i < m.n; ++i) ref.row("zeta_pos", "zeta_pos" + ms + idx(i), z[i], 0.0, tau);
    }
    if (c.kind == Kind::MinimumDT || sw) {
      const Vector z = eval_vec(zeta, T);
      flow_rows(ref, m.flow(s, T), z, Vector::Zero(m.n), g, T, ms, "stationary_flow", "stationary_output");
    }
  }

  if (sw) {
    for (int s = 0; s < m.num_modes; ++s)
      for (int r = 0; r < m.num_modes; ++r) {
        if (s == r) continue;
        const Vector z0 = eval_vec(c.zeta[s], 0.0), zT = eval_vec(c.zeta[r], T);
        for (int i = 0; i < m.n; ++i)
          ref.row("coupling", "coupling" + idx(s) + idx(r) + idx(i), z0[i] - zT[i],
                  std::abs(z0[i]) + std::abs(zT[i]), T);
      }
    return rep;
  }

  const Vector z0 = eval_vec(c.zeta[0], 0.0);
  std::vector<double> thetas;
  switch (c.kind) {
    case Kind::ArbitraryDT: thetas = {0.0}; break;
    case Kind::RangeDT: thetas = grid_points(c.dwell.t_min, c.dwell.t_max, grid); break;
    default: thetas = {T};
  }
  const bool mu = c.kind == Kind::RangeDT && c.range_mode == RangeMode::MuVariant;
  for (int map = 0; map < m.num_jump_maps; ++map)
    for (double th : thetas) {
      const Vector post = mu ? eval_vec(c.mu, th) : eval_vec(c.zeta[0], th);
      jump_rows(ref, m.jump(map, th), post, z0, g, th, many ? idx(map) : "");
    }
  if (mu)
    for (double th : thetas) {
      const Vector a = eval_vec(c.mu, th), z = eval_vec(c.zeta[0], th);
      for (int i = 0; i < m.n; ++i)
        ref.row("mu_bound", "mu_bound" + idx(i), a[i] - z[i], std::abs(a[i]) + std::abs(z[i]), th);
    }
  return rep;
}

VerificationReport verify(const Certificate& c, const ImpulsiveSystem& sys, int grid) {
  if (c.kind == Kind::SwitchedMinDT) throw Mismatch("switched certificate on an impulsive system");
  if (c.kind == Kind::ArbitraryDT && !sys.is_constant())
    throw Mismatch("arbitrary dwell-time certificate needs constant matrices");
  VerificationReport rep = verify(c, open_loop(sys, c.dwell.clamp()), grid);
  if (auto e = check_handelman(c.handelman)) {
    rep.handelman_error = c.handelman.empty() ? -1.0 : *e;
    rep.handelman_ok = *e <= kReconstructionTol;
  } else {
    rep.handelman_ok = false;
  }
  if (!rep.handelman_ok) {
    rep.passed = false;
    rep.notes.push_back("Handelman records fail re-validation");
  }
  return rep;
}

VerificationReport verify(const Certificate& c, const SwitchedSystem& sw, int grid) {
  if (c.kind != Kind::SwitchedMinDT) throw Mismatch("impulsive certificate on a switched system");
  VerificationReport rep = verify(c, open_loop(sw, c.dwell.t_min), grid);
  if (auto e = check_handelman(c.handelman)) {
    rep.handelman_error = c.handelman.empty() ? -1.0 : *e;
    rep.handelman_ok = *e <= kReconstructionTol;
  } else {
    rep.handelman_ok = false;
  }
  if (!rep.handelman_ok) {
    rep.passed = false;
    rep.notes.push_back("Handelman records fail re-validation");
  }
  return rep;
}

VerificationReport verify(const ControllerRealization& ctrl, const ImpulsiveSystem& sys, int grid) {
  Certificate c = closed_loop_certificate(ctrl);
  HybridModel m;
  try {
    m = closed_loop(sys, ctrl);
  } catch (const DimensionMismatch& e) {
    throw Mismatch(e.what());
  }
  return verify(c, m, grid);
}

VerificationReport verify(const ControllerRealization& ctrl, const SwitchedSystem& sw, int grid) {
  Certificate c = closed_loop_certificate(ctrl);
  HybridModel m;
  try {
    m = closed_loop(sw, ctrl);
  } catch (const DimensionMismatch& e) {
    throw Mismatch(e.what());
  }
  return verify(c, m, grid);
}

Matrix transition_matrix(const HybridModel& m, double from, double to, const std::vector<double>& jumps,
                         double step, int mode, int jump_map, double tau_from) {
  if (to < from) throw std::invalid_argument("transition_matrix: requires from <= to");
  Matrix Phi = Matrix::Identity(m.n, m.n);
  double t = from, tau = tau_from;
  std::vector<double> js = jumps;
  std::sort(js.begin(), js.end());
  for (double tj : js) {
    if (tj < from || tj > to) throw std::invalid_argument("transition_matrix: jump outside [from, to]");
    Phi = propagate(m, mode, Phi, tau, tau + (tj - t), step);
    tau += tj - t;
    Phi = m.jump(jump_map, tau).J * Phi;
    t = tj;
    tau = 0.0;
  }
  if (to > t) Phi = propagate(m, mode, Phi, tau, tau + (to - t), step);
  return Phi;
}

// With lambda = zeta(0), r(tau) = Phi(tau,0) lambda + int Phi E 1; the jump and output
// rows are checked on r instead of zeta.
VerificationReport cross_check_discrete(const Certificate& c, const HybridModel& m, double step) {
  check_kind(c, m);
  VerificationReport rep;
  rep.grid_density = 0;
  Referee ref(rep);
  const double g = c.gamma;
  const double T = tau_end(c);
  const Vector ones = Vector::Ones(m.pc);

  // Integrates r on an increasing list of sample times, checking the output row at each.
  auto sweep = [&](int mode, const Vector& lam, const std::vector<double>& samples,
                   const std::string& tag, const std::function<void(double, const Vector&)>& at) {
    Vector r = lam;
    double tau = 0.0;
    for (double s : samples) {
      r = propagate(m, mode, r, tau, s, step, ones);
      tau = s;
      const FlowMats f = m.flow(mode, tau);
      const Vector Cr = f.C * r, fo = ones_times(f.F);
      const Vector sc = f.C.cwiseAbs() * r.cwiseAbs();
      for (int k = 0; k < Cr.size(); ++k)
        ref.row("discrete_output_c", "discrete_output_c" + tag + idx(k), g - Cr[k] - fo[k],
                sc[k] + std::abs(fo[k]) + g, tau);
      at(tau, r);
    }
  };

  if (c.kind == Kind::SwitchedMinDT) {
    std::vector<double> samples = grid_points(0.0, T, 100);
    for (int j = 1; j <= 10; ++j) samples.push_back(T * (1.0 + 0.9 * j));
    for (int r = 0; r < m.num_modes; ++r) {
      const Vector lam = eval_vec(c.zeta[r], 0.0);
      sweep(r, lam, samples, idx(r), [&](double th, const Vector& x) {
        if (th < T) return;
        for (int s = 0; s < m.num_modes; ++s) {
          if (s == r) continue;
          const Vector ls = eval_vec(c.zeta[s], 0.0);
          for (int i = 0; i < m.n; ++i)
            ref.row("discrete_coupling", "discrete_coupling" + idx(r) + idx(s) + idx(i), ls[i] - x[i],
                    std::abs(ls[i]) + std::abs(x[i]), th);
        }
      });
    }
  } else {
    const Vector lam = eval_vec(c.zeta[0], 0.0);
    std::vector<double> samples, thetas;
    switch (c.kind) {
      case Kind::ArbitraryDT:
        samples = grid_points(0.0, 10.0, 100);
        thetas = samples;
        break;
      case Kind::ConstantDT:
        samples = grid_points(0.0, T, 100);
        thetas = {T};
        break;
      case Kind::RangeDT:
        samples = grid_points(0.0, c.dwell.t_min, 20);
        samples.pop_back();
        thetas = grid_points(c.dwell.t_min, c.dwell.t_max, 100);
        samples.insert(samples.end(), thetas.begin(), thetas.end());
        break;
      default:
        samples = grid_points(0.0, T, 100);
        thetas = {T};
        for (int j = 1; j <= 10; ++j) thetas.push_back(T * (1.0 + 0.9 * j));
        samples.insert(samples.end(), thetas.begin() + 1, thetas.end());
    }
    sweep(0, lam, samples, "", [&](double th, const Vector& r) {
      if (std::find(thetas.begin(), thetas.end(), th) == thetas.end()) return;
      for (int map = 0; map < m.num_jump_maps; ++map) {
        const JumpMats J = m.jump(map, th);
        const Vector Jr = J.J * r, e = ones_times(J.E);
        const Vector sJ = J.J.cwiseAbs() * r.cwiseAbs();
        const std::string tag = m.num_jump_maps > 1 ? idx(map) : "";
        for (int i = 0; i < m.n; ++i)
          ref.row("discrete_jump", "discrete_jump" + tag + idx(i), lam[i] - Jr[i] - e[i],
                  sJ[i] + std::abs(lam[i]) + std::abs(e[i]), th);
        const Vector Cr = J.C * r, fo = ones_times(J.F);
        const Vector sC = J.C.cwiseAbs() * r.cwiseAbs();
        for (int k = 0; k < Cr.size(); ++k)
          ref.row("discrete_output_d", "discrete_output_d" + tag + idx(k), g - Cr[k] - fo[k],
                  sC[k] + std::abs(fo[k]) + g, th);
      }
    });
  }
  rep.phi_residual = rep.worst_slack();
  return rep;
}

VerificationReport cross_check_discrete(const Certificate& c, const ImpulsiveSystem& sys, double step) {
  if (c.kind == Kind::SwitchedMinDT) throw Mismatch("switched certificate on an impulsive system");
  return cross_check_discrete(c, open_loop(sys, c.dwell.clamp()), step);
}

VerificationReport cross_check_discrete(const Certificate& c, const SwitchedSystem& sw, double step) {
  if (c.kind != Kind::SwitchedMinDT) throw Mismatch("impulsive certificate on a switched system");
  return cross_check_discrete(c, open_loop(sw, c.dwell.t_min), step);
}

}  // namespace posdwell

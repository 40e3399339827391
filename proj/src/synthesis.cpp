#include "posdwell/synthesis.hpp"

#include <cmath>

#include "escalate.hpp"

namespace posdwell {

std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::ArbitraryDT: return "ArbitraryDT";
    case ControllerKind::ConstantDT: return "ConstantDT";
    case ControllerKind::RangeDT: return "RangeDT";
    case ControllerKind::RangeDT_FixedKd: return "RangeDT_FixedKd";
    case ControllerKind::MinimumDT: return "MinimumDT";
    case ControllerKind::SwitchedMinDT: return "SwitchedMinDT";
  }
  return "?";
}

ControllerKind controller_kind_from_string(const std::string& s) {
  for (auto k : {ControllerKind::ArbitraryDT, ControllerKind::ConstantDT, ControllerKind::RangeDT,
                 ControllerKind::RangeDT_FixedKd, ControllerKind::MinimumDT,
                 ControllerKind::SwitchedMinDT})
    if (to_string(k) == s) return k;
  throw ParseError("unknown controller kind '" + s + "'");
}

double ControllerRealization::tau_end() const {
  switch (dwell.kind) {
    case DwellTimeSpec::Kind::Arbitrary: return 0.0;
    case DwellTimeSpec::Kind::Range: return dwell.t_max;
    default: return dwell.t_min;
  }
}

namespace {

using detail::idx;
using detail::Skip;
using Built = detail::Built<ControllerRealization>;
using BuildFn = detail::BuildFn<ControllerRealization>;

// Sum over l of M(i,l) * U(l,j) where U holds polynomial forms.
PolyForm mul_entry(const PolyMatrix& M, int i, const std::vector<std::vector<PolyForm>>& U, int j) {
  PolyForm acc;
  for (int l = 0; l < M.cols(); ++l)
    if (!M(i, l).is_zero()) acc += M(i, l) * U[l][j];
  return acc;
}

PolyForm mul_entry(const Matrix& M, int i, const std::vector<std::vector<PolyForm>>& U, int j) {
  PolyForm acc;
  for (int l = 0; l < M.cols(); ++l)
    if (M(i, l) != 0.0) acc += M(i, l) * U[l][j];
  return acc;
}

Poly row_sum(const PolyMatrix& M, int i) {
  Poly s;
  for (int j = 0; j < M.cols(); ++j) s = s + M(i, j);
  return s;
}

double row_sum(const Matrix& M, int i) { return M.cols() ? M.row(i).sum() : 0.0; }

PolyForm constant_form(double v) { return PolyForm::from_poly(Poly::constant(v)); }

std::vector<std::vector<PolyForm>> poly_matrix_var(LpBuilder& b, int rows, int cols, int degree,
                                                   const std::string& name, double unit) {
  std::vector<std::vector<PolyForm>> U(rows);
  for (int l = 0; l < rows; ++l)
    for (int j = 0; j < cols; ++j) U[l].push_back(b.poly_var(degree, name + idx(l) + idx(j), unit));
  return U;
}

PolyMatrix eval_matrix(const std::vector<std::vector<PolyForm>>& U, int rows, int cols,
                       const std::vector<double>& x) {
  PolyMatrix out(rows, cols);
  for (int l = 0; l < rows; ++l)
    for (int j = 0; j < cols; ++j) out(l, j) = U[l][j].eval(x);
  return out;
}

constexpr double kXFloorCap = 1e6;

struct Shape {
  ControllerKind kind;
  double tau_end;
  double th_lo, th_hi;
  bool stationary;
  bool theta_ud;  // U_d polynomial in theta
  bool fixed_kd;
};

// Stage one minimises gamma with diag X >= x_min. With a cap, gamma <= cap and the
// common floor of diag X is maximised instead.
LinearForm objective_setup(LpBuilder& b, int gamma, const SynthesisOptions& opt,
                           std::optional<double> cap) {
  if (!cap) {
    b.minimize(gamma);
    return LinearForm::value(opt.x_min);
  }
  b.le(LinearForm::var(gamma), *cap, "gamma_cap");
  const int floor = b.var(opt.x_min, kXFloorCap, "x_floor");
  b.objective(floor, -1.0);
  return LinearForm::var(floor);
}

Built build_impulsive(const ImpulsiveSystem& sys, const Shape& sh, int degree, double margin,
                      const SynthesisOptions& opt, const IntervalEncoding& enc, const Skip& skip,
                      std::optional<double> cap = {}) {
  Built out{LpBuilder(enc), -1, {}};
  LpBuilder& b = out.b;
  const int n = sys.n, mc = sys.mc, md = sys.md;
  out.gamma = b.var(0.0, kInf, "gamma");
  const LinearForm x_floor = objective_setup(b, out.gamma, opt, cap);
  const LinearForm g = LinearForm::var(out.gamma);
  const LinearForm alpha = LinearForm::var(b.var(0.0, kInf, "alpha"));
  const Interval tau_iv{0.0, sh.tau_end};
  const Interval th_iv{sh.th_lo, sh.th_hi};

  std::vector<PolyForm> X;
  for (int i = 0; i < n; ++i) X.push_back(b.poly_var(degree, "X" + idx(i), sh.tau_end));
  const auto Uc = poly_matrix_var(b, mc, n, degree, "Uc", sh.tau_end);
  const auto Ud = poly_matrix_var(b, md, n, sh.theta_ud ? degree : 0, "Ud", sh.th_hi);
  std::vector<LinearForm> M;
  if (sh.fixed_kd)
    for (int i = 0; i < n; ++i) M.push_back(LinearForm::var(b.var(-kInf, kInf, "M" + idx(i))));

  // Diagonal X as a column-indexed matrix of forms for the shared product helper.
  auto diag_entry = [&](const PolyMatrix& A, int i, int j) { return A(i, j) * X[j]; };

  // Closed-loop flow entries (A X + Bc Uc)(i,j) and output entries (Cc X + Dc Uc)(k,j).
  auto flow_entry = [&](int i, int j) { return diag_entry(sys.A, i, j) + mul_entry(sys.Bc, i, Uc, j); };
  auto outc_entry = [&](int k, int j) { return diag_entry(sys.Cc, k, j) + mul_entry(sys.Dc, k, Uc, j); };

  // Post-flow state used by the jump rows, as a form in theta.
  auto post = [&](int j) -> PolyForm {
    if (sh.fixed_kd) return PolyForm::from_form(M[j]);
    if (sh.theta_ud) return X[j];
    return PolyForm::from_form(X[j].at(sh.th_lo));
  };

  if (!skip.count("metzler"))
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        PolyForm e = flow_entry(i, j);
        if (i == j) e += PolyForm::from_form(alpha);
        b.nonneg_on(e, tau_iv, 0.0, "metzler" + idx(i) + idx(j));
      }
  for (int k = 0; k < sys.qc; ++k)
    for (int j = 0; j < n; ++j) b.nonneg_on(outc_entry(k, j), tau_iv, 0.0, "output_c_pos" + idx(k) + idx(j));
  if (!skip.count("x_min"))
    for (int i = 0; i < n; ++i)
      b.nonneg_on(X[i] - PolyForm::from_form(x_floor), tau_iv, 0.0, "x_min" + idx(i));

  if (!skip.count("flow"))
    for (int i = 0; i < n; ++i) {
      PolyForm e = PolyForm::from_poly(row_sum(sys.Ec, i)) - X[i].derivative();
      for (int j = 0; j < n; ++j) e += flow_entry(i, j);
      b.nonneg_on(PolyForm() - e, tau_iv, margin, "flow" + idx(i));
    }
  for (int k = 0; k < sys.qc; ++k) {
    PolyForm e = PolyForm::from_poly(row_sum(sys.Fc, k));
    for (int j = 0; j < n; ++j) e += outc_entry(k, j);
    b.nonneg_on(PolyForm::from_form(g) - e, tau_iv, margin, "output_c" + idx(k));
  }

  const bool many = sys.jumps.size() > 1;
  for (size_t jm = 0; jm < sys.jumps.size(); ++jm) {
    const JumpMap& J = sys.jumps[jm];
    const std::string tag = many ? idx(static_cast<int>(jm)) : "";
    auto jump_entry = [&](int i, int j) { return J.J(i, j) * post(j) + mul_entry(J.Bd, i, Ud, j); };
    auto outd_entry = [&](int k, int j) { return J.Cd(k, j) * post(j) + mul_entry(J.Dd, k, Ud, j); };
    if (!skip.count("jump_pos"))
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          b.nonneg_on(jump_entry(i, j), th_iv, 0.0, "jump_pos" + tag + idx(i) + idx(j));
    for (int k = 0; k < sys.qd; ++k)
      for (int j = 0; j < n; ++j)
        b.nonneg_on(outd_entry(k, j), th_iv, 0.0, "output_d_pos" + tag + idx(k) + idx(j));
    if (!skip.count("jump"))
      for (int i = 0; i < n; ++i) {
        PolyForm e = constant_form(row_sum(J.Ed, i)) - PolyForm::from_form(X[i].at(0.0));
        for (int j = 0; j < n; ++j) e += jump_entry(i, j);
        b.nonneg_on(PolyForm() - e, th_iv, margin, "jump" + tag + idx(i));
      }
    for (int k = 0; k < sys.qd; ++k) {
      PolyForm e = constant_form(row_sum(J.Fd, k));
      for (int j = 0; j < n; ++j) e += outd_entry(k, j);
      b.nonneg_on(PolyForm::from_form(g) - e, th_iv, margin, "output_d" + tag + idx(k));
    }
  }
  if (sh.fixed_kd && !skip.count("mu_bound"))
    for (int i = 0; i < n; ++i)
      b.nonneg_on(PolyForm::from_form(M[i]) - X[i], th_iv, 0.0, "mu_bound" + idx(i));

  if (sh.stationary) {
    const double T = sh.tau_end;
    if (!skip.count("stationary_flow"))
      for (int i = 0; i < n; ++i) {
        PolyForm e = PolyForm::from_poly(row_sum(sys.Ec, i));
        for (int j = 0; j < n; ++j) e += flow_entry(i, j);
        b.le(e.at(T), -margin, "stationary_flow" + idx(i));
      }
    for (int k = 0; k < sys.qc; ++k) {
      PolyForm e = PolyForm::from_poly(row_sum(sys.Fc, k));
      for (int j = 0; j < n; ++j) e += outc_entry(k, j);
      b.le(e.at(T) - g, -margin, "stationary_output" + idx(k));
    }
  }

  out.finish = [=](const std::vector<double>& x) {
    ControllerRealization c;
    c.kind = sh.kind;
    c.degree = degree;
    c.margin = margin;
    c.x_min = opt.x_min;
    c.X.emplace_back();
    for (const auto& f : X) c.X[0].push_back(f.eval(x));
    c.Uc.push_back(eval_matrix(Uc, mc, n, x));
    c.Ud = eval_matrix(Ud, md, n, x);
    for (const auto& m : M) c.M.push_back(m.eval(x));
    return c;
  };
  return out;
}

using CapBuildFn = std::function<Built(const IntervalEncoding&, std::optional<double>)>;

// Re-solves at the order stage one needed; keeps stage one if the second LP fails.
void recondition(detail::Solved<ControllerRealization>& s, const CapBuildFn& build,
                 const SynthesisOptions& opt) {
  if (!opt.condition) return;
  IntervalEncoding enc;
  enc.boost = s.boost;
  const double cap = s.gamma * (1.0 + opt.condition_slack) + 1e-12;
  Built built = build(enc, cap);
  LpSolution sol;
  try {
    sol = lp_solve(built.b.lp());
  } catch (const NumericalFailure&) {
    return;
  }
  if (sol.status != LpStatus::Optimal) return;
  detail::dump_lp(opt.dump_lp, built.b.lp());
  s.result = built.finish(sol.x);
  s.gamma = sol.x[built.gamma];
  s.handelman = built.b.extract(sol.x);
}

ControllerRealization finish(detail::Solved<ControllerRealization> s, const DwellTimeSpec& d) {
  s.result.gamma = s.gamma;
  s.result.handelman = std::move(s.handelman);
  s.result.handelman_boost = s.boost;
  s.result.dwell = d;
  return s.result;
}

}  // namespace

ControllerRealization synthesize(const ImpulsiveSystem& sys, const DwellTimeSpec& dwell,
                                 int degree, const SynthesisOptions& opt) {
  sys.validate();
  dwell.validate();
  if (degree < 0) throw std::invalid_argument("synthesize: degree must be nonnegative");
  if (opt.fixed_kd && dwell.kind != DwellTimeSpec::Kind::Range)
    throw std::invalid_argument("synthesize: fixed_kd applies to range dwell-time only");
  Shape sh{};
  std::string theorem;
  switch (dwell.kind) {
    case DwellTimeSpec::Kind::Arbitrary:
      if (!sys.is_constant())
        throw NotConstant("synthesize: arbitrary dwell-time requires constant matrices");
      sh = {ControllerKind::ArbitraryDT, 0.0, 0.0, 0.0, false, false, false};
      degree = 0;
      theorem = "arbitrary dwell-time synthesis conditions";
      break;
    case DwellTimeSpec::Kind::Constant:
      sh = {ControllerKind::ConstantDT, dwell.t_min, dwell.t_min, dwell.t_min, false, false, false};
      theorem = "constant dwell-time synthesis conditions";
      break;
    case DwellTimeSpec::Kind::Minimum:
      sh = {ControllerKind::MinimumDT, dwell.t_min, dwell.t_min, dwell.t_min, true, false, false};
      theorem = "minimum dwell-time synthesis conditions";
      break;
    case DwellTimeSpec::Kind::Range:
      sh = {opt.fixed_kd ? ControllerKind::RangeDT_FixedKd : ControllerKind::RangeDT,
            dwell.t_max, dwell.t_min, dwell.t_max, false, !opt.fixed_kd, opt.fixed_kd};
      theorem = "range dwell-time synthesis conditions";
      break;
  }
  const double margin = opt.margin.value_or(default_margin(sys.data_scale()));
  BuildFn build = [&](const IntervalEncoding& enc, const Skip& skip) {
    return build_impulsive(sys, sh, degree, margin, opt, enc, skip);
  };
  std::vector<std::string> fams = {"flow", "jump", "metzler", "jump_pos", "x_min"};
  if (sh.stationary) fams.push_back("stationary_flow");
  if (sh.fixed_kd) fams.push_back("mu_bound");
  auto solved = detail::solve_escalating(build, opt.boost, opt.max_boost, opt.boost_step, opt.dump_lp,
                                         theorem, fams);
  recondition(solved,
              [&](const IntervalEncoding& enc, std::optional<double> cap) {
                return build_impulsive(sys, sh, degree, margin, opt, enc, {}, cap);
              },
              opt);
  return finish(std::move(solved), dwell);
}

ControllerRealization synthesize_switched(const SwitchedSystem& sw, double T, int degree,
                                          const SynthesisOptions& opt) {
  sw.validate();
  if (sw.num_modes() < 2)
    throw std::invalid_argument("synthesize_switched: needs at least two modes; use synthesize");
  if (!(T > 0.0) || !std::isfinite(T))
    throw std::invalid_argument("synthesize_switched: dwell time must be positive");
  if (degree < 0) throw std::invalid_argument("synthesize_switched: degree must be nonnegative");
  const int N = sw.num_modes(), n = sw.n, m = sw.m;
  const double margin = opt.margin.value_or(default_margin(sw.data_scale()));

  auto build_capped = [&](const IntervalEncoding& enc, const Skip& skip, std::optional<double> cap) {
    Built out{LpBuilder(enc), -1, {}};
    LpBuilder& b = out.b;
    out.gamma = b.var(0.0, kInf, "gamma");
    const LinearForm x_floor = objective_setup(b, out.gamma, opt, cap);
    const LinearForm g = LinearForm::var(out.gamma);
    const LinearForm alpha = LinearForm::var(b.var(0.0, kInf, "alpha"));
    const Interval iv{0.0, T};
    std::vector<std::vector<PolyForm>> X(N);
    std::vector<std::vector<std::vector<PolyForm>>> U(N);
    for (int s = 0; s < N; ++s) {
      for (int i = 0; i < n; ++i) X[s].push_back(b.poly_var(degree, "X" + idx(s) + idx(i), T));
      U[s] = poly_matrix_var(b, m, n, degree, "U" + idx(s), T);
    }
    for (int s = 0; s < N; ++s) {
      const Mode& md = sw.modes[s];
      const std::string ms = idx(s);
      auto flow_entry = [&](int i, int j) { return md.A(i, j) * X[s][j] + mul_entry(md.B, i, U[s], j); };
      auto out_entry = [&](int k, int j) { return md.C(k, j) * X[s][j] + mul_entry(md.D, k, U[s], j); };
      if (!skip.count("metzler"))
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            PolyForm e = flow_entry(i, j);
            if (i == j) e += PolyForm::from_form(alpha);
            b.nonneg_on(e, iv, 0.0, "metzler" + ms + idx(i) + idx(j));
          }
      for (int k = 0; k < sw.q; ++k)
        for (int j = 0; j < n; ++j) b.nonneg_on(out_entry(k, j), iv, 0.0, "output_pos" + ms + idx(k) + idx(j));
      if (!skip.count("x_min"))
        for (int i = 0; i < n; ++i)
          b.nonneg_on(X[s][i] - PolyForm::from_form(x_floor), iv, 0.0, "x_min" + ms + idx(i));
      for (int i = 0; i < n; ++i) {
        PolyForm e = PolyForm::from_poly(row_sum(md.E, i));
        for (int j = 0; j < n; ++j) e += flow_entry(i, j);
        if (!skip.count("flow"))
          b.nonneg_on(X[s][i].derivative() - e, iv, margin, "flow" + ms + idx(i));
        if (!skip.count("stationary_flow")) b.le(e.at(T), -margin, "stationary_flow" + ms + idx(i));
      }
      for (int k = 0; k < sw.q; ++k) {
        PolyForm e = PolyForm::from_poly(row_sum(md.F, k));
        for (int j = 0; j < n; ++j) e += out_entry(k, j);
        b.nonneg_on(PolyForm::from_form(g) - e, iv, margin, "output_c" + ms + idx(k));
        b.le(e.at(T) - g, -margin, "stationary_output" + ms + idx(k));
      }
    }
    if (!skip.count("coupling"))
      for (int s = 0; s < N; ++s)
        for (int r = 0; r < N; ++r) {
          if (r == s) continue;
          for (int i = 0; i < n; ++i)
            b.le(X[s][i].at(T) - X[r][i].at(0.0), 0.0, "coupling" + idx(s) + idx(r) + idx(i));
        }
    out.finish = [=](const std::vector<double>& x) {
      ControllerRealization c;
      c.kind = ControllerKind::SwitchedMinDT;
      c.degree = degree;
      c.margin = margin;
      c.x_min = opt.x_min;
      for (int s = 0; s < N; ++s) {
        c.X.emplace_back();
        for (const auto& f : X[s]) c.X[s].push_back(f.eval(x));
        c.Uc.push_back(eval_matrix(U[s], m, n, x));
      }
      c.Ud = PolyMatrix(0, n);
      return c;
    };
    return out;
  };
  BuildFn build = [&](const IntervalEncoding& enc, const Skip& skip) { return build_capped(enc, skip, {}); };
  auto solved = detail::solve_escalating(build, opt.boost, opt.max_boost, opt.boost_step, opt.dump_lp,
                                         "switched minimum dwell-time synthesis conditions",
                                         {"flow", "stationary_flow", "coupling", "metzler", "x_min"});
  recondition(solved,
              [&](const IntervalEncoding& enc, std::optional<double> cap) { return build_capped(enc, {}, cap); },
              opt);
  return finish(std::move(solved), DwellTimeSpec::minimum(T));
}

namespace {

double clamp_tau(const ControllerRealization& c, double tau) {
  if (tau < 0.0) throw InvalidDomain("realize_gain: negative timer");
  switch (c.dwell.kind) {
    case DwellTimeSpec::Kind::Arbitrary: return 0.0;
    case DwellTimeSpec::Kind::Minimum: return std::min(tau, c.dwell.t_min);
    default: {
      const double end = c.tau_end();
      if (tau > end * (1.0 + 1e-9) + 1e-12)
        throw InvalidDomain("realize_gain: timer " + std::to_string(tau) + " beyond " +
                            std::to_string(end));
      return std::min(tau, end);
    }
  }
}

Vector x_inverse(const std::vector<Poly>& X, double t) {
  Vector v(static_cast<int>(X.size()));
  for (size_t i = 0; i < X.size(); ++i) {
    const double xi = X[i](t);
    if (!(xi > 0.0)) throw IllPosed("controller: X" + std::to_string(i) + " is not positive at " + std::to_string(t));
    v[static_cast<int>(i)] = 1.0 / xi;
  }
  return v;
}

}  // namespace

Matrix realize_gain(const ControllerRealization& c, double tau, int mode) {
  if (mode < 0 || mode >= c.num_modes()) throw std::out_of_range("realize_gain: mode");
  const double t = clamp_tau(c, tau);
  return c.Uc[mode].eval(t) * x_inverse(c.X[mode], t).asDiagonal();
}

Matrix realize_jump_gain(const ControllerRealization& c, double theta) {
  if (c.X.empty()) throw std::logic_error("realize_jump_gain: empty controller");
  const int n = static_cast<int>(c.X[0].size());
  if (c.Ud.rows() == 0) return Matrix::Zero(0, n);
  switch (c.kind) {
    case ControllerKind::RangeDT: {
      const double th = std::clamp(theta, c.dwell.t_min, c.dwell.t_max);
      return c.Ud.eval(th) * x_inverse(c.X[0], th).asDiagonal();
    }
    case ControllerKind::RangeDT_FixedKd: {
      Vector inv(n);
      for (int i = 0; i < n; ++i) {
        if (!(c.M[i] > 0.0)) throw IllPosed("controller: M is not positive");
        inv[i] = 1.0 / c.M[i];
      }
      return c.Ud.eval(0.0) * inv.asDiagonal();
    }
    case ControllerKind::ArbitraryDT:
      return c.Ud.eval(0.0) * x_inverse(c.X[0], 0.0).asDiagonal();
    default:
      return c.Ud.eval(0.0) * x_inverse(c.X[0], c.dwell.t_min).asDiagonal();
  }
}

Certificate closed_loop_certificate(const ControllerRealization& c) {
  Certificate cert;
  cert.gamma = c.gamma;
  cert.dwell = c.dwell;
  cert.degree = c.degree;
  cert.margin = c.margin;
  cert.zeta = c.X;
  switch (c.kind) {
    case ControllerKind::ArbitraryDT: cert.kind = CertificateKind::ArbitraryDT; break;
    case ControllerKind::ConstantDT: cert.kind = CertificateKind::ConstantDT; break;
    case ControllerKind::MinimumDT: cert.kind = CertificateKind::MinimumDT; break;
    case ControllerKind::SwitchedMinDT: cert.kind = CertificateKind::SwitchedMinDT; break;
    case ControllerKind::RangeDT: cert.kind = CertificateKind::RangeDT; break;
    case ControllerKind::RangeDT_FixedKd:
      cert.kind = CertificateKind::RangeDT;
      cert.range_mode = RangeMode::MuVariant;
      for (double m : c.M) cert.mu.push_back(Poly::constant(m));
      break;
  }
  return cert;
}

}  // namespace posdwell

#include "posdwell/analysis.hpp"

#include "escalate.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>

namespace posdwell {

double default_margin(double data_scale) { return kDefaultMarginFactor * data_scale; }

std::string to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::ArbitraryDT: return "ArbitraryDT";
    case CertificateKind::ConstantDT: return "ConstantDT";
    case CertificateKind::MinimumDT: return "MinimumDT";
    case CertificateKind::RangeDT: return "RangeDT";
    case CertificateKind::SwitchedMinDT: return "SwitchedMinDT";
    case CertificateKind::LtiCorollary: return "LtiCorollary";
  }
  return "?";
}

CertificateKind certificate_kind_from_string(const std::string& s) {
  for (auto k : {CertificateKind::ArbitraryDT, CertificateKind::ConstantDT,
                 CertificateKind::MinimumDT, CertificateKind::RangeDT,
                 CertificateKind::SwitchedMinDT, CertificateKind::LtiCorollary})
    if (to_string(k) == s) return k;
  throw ParseError("unknown certificate kind '" + s + "'");
}

namespace {

using detail::idx;
using detail::Skip;
using Built = detail::Built<Certificate>;
using BuildFn = detail::BuildFn<Certificate>;

Certificate solve_escalating(const BuildFn& build, const AnalysisOptions& opt,
                             const std::string& theorem,
                             const std::vector<std::string>& families) {
  auto s = detail::solve_escalating(build, opt.boost, opt.max_boost, opt.boost_step, opt.dump_lp,
                                    theorem, families);
  s.result.gamma = s.gamma;
  s.result.handelman = std::move(s.handelman);
  s.result.handelman_boost = s.boost;
  return s.result;
}

// ---------------------------------------------------------------------------
// Impulsive-system encodings

struct ImpulsiveShape {
  CertificateKind kind;
  double tau_end;
  double th_lo, th_hi;
  bool stationary;
  bool mu;
};

PolyForm row_mul(const PolyMatrix& M, int i, const std::vector<PolyForm>& v) {
  PolyForm acc;
  for (int j = 0; j < M.cols(); ++j)
    if (!M(i, j).is_zero()) acc += M(i, j) * v[j];
  return acc;
}

PolyForm row_mul(const Matrix& M, int i, const std::vector<PolyForm>& v) {
  PolyForm acc;
  for (int j = 0; j < M.cols(); ++j)
    if (M(i, j) != 0.0) acc += M(i, j) * v[j];
  return acc;
}

LinearForm row_mul_at(const Matrix& M, int i, const std::vector<LinearForm>& v) {
  LinearForm acc;
  for (int j = 0; j < M.cols(); ++j)
    if (M(i, j) != 0.0) acc += M(i, j) * v[j];
  return acc;
}

Poly row_sum(const PolyMatrix& M, int i) {
  Poly s;
  for (int j = 0; j < M.cols(); ++j) s = s + M(i, j);
  return s;
}

double row_sum(const Matrix& M, int i) { return M.cols() ? M.row(i).sum() : 0.0; }

Built build_impulsive(const ImpulsiveSystem& sys, const ImpulsiveShape& sh, int degree,
                      double margin, const AnalysisOptions& opt, const IntervalEncoding& enc,
                      const Skip& skip) {
  Built out{LpBuilder(enc), -1, {}};
  LpBuilder& b = out.b;
  const int n = sys.n;
  out.gamma = b.var(0.0, kInf, "gamma");
  b.minimize(out.gamma);
  const LinearForm g = LinearForm::var(out.gamma);
  std::vector<PolyForm> zeta;
  for (int i = 0; i < n; ++i) zeta.push_back(b.poly_var(degree, "zeta" + idx(i), sh.tau_end));
  std::vector<PolyForm> mu;
  if (sh.mu)
    for (int i = 0; i < n; ++i) mu.push_back(b.poly_var(degree, "mu" + idx(i), sh.th_hi));

  const double m_flow = opt.close_flow ? 0.0 : margin;
  const double m_jump = opt.close_jump ? 0.0 : margin;
  const Interval tau_iv{0.0, sh.tau_end};
  const Interval th_iv{sh.th_lo, sh.th_hi};

  // -zeta' + A zeta + Ec 1 <= -m on the timer interval
  if (!skip.count("flow"))
    for (int i = 0; i < n; ++i) {
      PolyForm e = row_mul(sys.A, i, zeta) - zeta[i].derivative() +
                   PolyForm::from_poly(row_sum(sys.Ec, i));
      b.nonneg_on(PolyForm() - e, tau_iv, m_flow, "flow" + idx(i));
    }
  // Cc zeta + Fc 1 - gamma <= -m
  for (int k = 0; k < sys.qc; ++k) {
    PolyForm e = row_mul(sys.Cc, k, zeta) + PolyForm::from_poly(row_sum(sys.Fc, k));
    b.nonneg_on(PolyForm::from_form(g) - e, tau_iv, margin, "output_c" + idx(k));
  }
  std::vector<LinearForm> z0;
  for (int i = 0; i < n; ++i) z0.push_back(zeta[i].at(0.0));
  const bool many = sys.jumps.size() > 1;
  for (size_t jm = 0; jm < sys.jumps.size(); ++jm) {
    const auto& J = sys.jumps[jm];
    const std::string tag = many ? idx(static_cast<int>(jm)) : "";
    const std::vector<PolyForm>& post = sh.mu ? mu : zeta;
    if (!skip.count("jump"))
      for (int i = 0; i < n; ++i) {
        PolyForm e = row_mul(J.J, i, post) - PolyForm::from_form(z0[i]) +
                     PolyForm::from_poly(Poly::constant(row_sum(J.Ed, i)));
        b.nonneg_on(PolyForm() - e, th_iv, m_jump, "jump" + tag + idx(i));
      }
    for (int k = 0; k < sys.qd; ++k) {
      PolyForm e = row_mul(J.Cd, k, post) + PolyForm::from_poly(Poly::constant(row_sum(J.Fd, k)));
      b.nonneg_on(PolyForm::from_form(g) - e, th_iv, margin, "output_d" + tag + idx(k));
    }
  }
  if (sh.mu && !skip.count("mu_bound"))
    for (int i = 0; i < n; ++i) b.nonneg_on(mu[i] - zeta[i], th_iv, 0.0, "mu_bound" + idx(i));

  if (sh.stationary) {
    const double T = sh.tau_end;
    const Matrix AT = sys.A.eval(T), CT = sys.Cc.eval(T);
    std::vector<LinearForm> zT;
    for (int i = 0; i < n; ++i) zT.push_back(zeta[i].at(T));
    if (!skip.count("stationary_flow"))
      for (int i = 0; i < n; ++i)
        b.le(row_mul_at(AT, i, zT) + LinearForm::value(row_sum(sys.Ec, i)(T)), -m_flow,
             "stationary_flow" + idx(i));
    for (int k = 0; k < sys.qc; ++k)
      b.le(row_mul_at(CT, k, zT) + LinearForm::value(row_sum(sys.Fc, k)(T)) - g, -margin,
           "stationary_output" + idx(k));
  }
  for (int i = 0; i < n; ++i) {
    b.ge(z0[i], margin, "zeta0" + idx(i));
    b.le(z0[i], opt.normalization, "zeta0_cap" + idx(i));
  }

  out.finish = [=](const std::vector<double>& x) {
    Certificate c;
    c.kind = sh.kind;
    c.margin = margin;
    c.degree = degree;
    c.close_flow = opt.close_flow;
    c.close_jump = opt.close_jump;
    c.range_mode = sh.mu ? RangeMode::MuVariant : RangeMode::Direct;
    c.zeta.emplace_back();
    for (const auto& z : zeta) c.zeta[0].push_back(z.eval(x));
    for (const auto& v : mu) c.mu.push_back(v.eval(x));
    return c;
  };
  return out;
}

Certificate run_impulsive(const ImpulsiveSystem& sys, const ImpulsiveShape& sh, int degree,
                          const AnalysisOptions& opt, const std::string& theorem) {
  sys.validate();
  if (degree < 0) throw std::invalid_argument(theorem + ": degree must be nonnegative");
  const double margin = opt.margin.value_or(default_margin(sys.data_scale()));
  BuildFn build = [&](const IntervalEncoding& enc, const Skip& skip) {
    return build_impulsive(sys, sh, degree, margin, opt, enc, skip);
  };
  std::vector<std::string> fams = {"flow", "jump"};
  if (sh.stationary) fams.push_back("stationary_flow");
  if (sh.mu) fams.push_back("mu_bound");
  return solve_escalating(build, opt, theorem, fams);
}

void require_positive_time(double T, const std::string& what) {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument(what + ": dwell time must be positive");
}

}  // namespace

Certificate analyze_arbitrary(const ImpulsiveSystem& sys, const AnalysisOptions& opt) {
  sys.validate();
  if (!sys.is_constant()) throw NotConstant("analyze_arbitrary: system matrices must be constant");
  const double margin = opt.margin.value_or(default_margin(sys.data_scale()));
  const int n = sys.n;
  const FlowAt f = sys.flow(0.0);
  BuildFn build = [&](const IntervalEncoding& enc, const Skip& skip) {
    Built out{LpBuilder(enc), -1, {}};
    LpBuilder& b = out.b;
    out.gamma = b.var(0.0, kInf, "gamma");
    b.minimize(out.gamma);
    const LinearForm g = LinearForm::var(out.gamma);
    std::vector<LinearForm> lam;
    for (int i = 0; i < n; ++i) lam.push_back(LinearForm::var(b.var(-kInf, kInf, "lambda" + idx(i))));
    const double m_flow = opt.close_flow ? 0.0 : margin;
    const double m_jump = opt.close_jump ? 0.0 : margin;
    if (!skip.count("flow"))
      for (int i = 0; i < n; ++i)
        b.le(row_mul_at(f.A, i, lam) + LinearForm::value(row_sum(f.Ec, i)), -m_flow, "flow" + idx(i));
    for (int k = 0; k < sys.qc; ++k)
      b.le(row_mul_at(f.Cc, k, lam) + LinearForm::value(row_sum(f.Fc, k)) - g, -margin,
           "output_c" + idx(k));
    const bool many = sys.jumps.size() > 1;
    for (size_t jm = 0; jm < sys.jumps.size(); ++jm) {
      const auto& J = sys.jumps[jm];
      const std::string tag = many ? idx(static_cast<int>(jm)) : "";
      const Matrix JmI = J.J - Matrix::Identity(n, n);
      if (!skip.count("jump"))
        for (int i = 0; i < n; ++i)
          b.le(row_mul_at(JmI, i, lam) + LinearForm::value(row_sum(J.Ed, i)), -m_jump,
               "jump" + tag + idx(i));
      for (int k = 0; k < sys.qd; ++k)
        b.le(row_mul_at(J.Cd, k, lam) + LinearForm::value(row_sum(J.Fd, k)) - g, -margin,
             "output_d" + tag + idx(k));
    }
    for (int i = 0; i < n; ++i) {
      b.ge(lam[i], margin, "zeta0" + idx(i));
      b.le(lam[i], opt.normalization, "zeta0_cap" + idx(i));
    }
    out.finish = [=](const std::vector<double>& x) {
      Certificate c;
      c.kind = CertificateKind::ArbitraryDT;
      c.margin = margin;
      c.degree = 0;
      c.close_flow = opt.close_flow;
      c.close_jump = opt.close_jump;
      c.zeta.emplace_back();
      for (const auto& l : lam) c.zeta[0].push_back(Poly::constant(l.eval(x)));
      return c;
    };
    return out;
  };
  Certificate c = solve_escalating(build, opt, "arbitrary dwell-time conditions", {"flow", "jump"});
  c.dwell = DwellTimeSpec::arbitrary();
  return c;
}

Certificate analyze_constant(const ImpulsiveSystem& sys, double T, int degree,
                             const AnalysisOptions& opt) {
  require_positive_time(T, "analyze_constant");
  Certificate c = run_impulsive(sys, {CertificateKind::ConstantDT, T, T, T, false, false}, degree,
                                opt, "constant dwell-time conditions");
  c.dwell = DwellTimeSpec::constant(T);
  return c;
}

Certificate analyze_minimum(const ImpulsiveSystem& sys, double T, int degree,
                            const AnalysisOptions& opt) {
  require_positive_time(T, "analyze_minimum");
  Certificate c = run_impulsive(sys, {CertificateKind::MinimumDT, T, T, T, true, false}, degree,
                                opt, "minimum dwell-time conditions");
  c.dwell = DwellTimeSpec::minimum(T);
  return c;
}

Certificate analyze_range(const ImpulsiveSystem& sys, double t_min, double t_max, int degree,
                          RangeMode mode, const AnalysisOptions& opt) {
  require_positive_time(t_min, "analyze_range");
  if (!(t_min <= t_max) || !std::isfinite(t_max))
    throw std::invalid_argument("analyze_range: requires Tmin <= Tmax < inf");
  Certificate c = run_impulsive(
      sys, {CertificateKind::RangeDT, t_max, t_min, t_max, false, mode == RangeMode::MuVariant},
      degree, opt, "range dwell-time conditions");
  c.dwell = DwellTimeSpec::range(t_min, t_max);
  return c;
}

Certificate analyze(const ImpulsiveSystem& sys, const DwellTimeSpec& d, int degree,
                    const AnalysisOptions& opt) {
  d.validate();
  switch (d.kind) {
    case DwellTimeSpec::Kind::Arbitrary: return analyze_arbitrary(sys, opt);
    case DwellTimeSpec::Kind::Constant: return analyze_constant(sys, d.t_min, degree, opt);
    case DwellTimeSpec::Kind::Minimum: return analyze_minimum(sys, d.t_min, degree, opt);
    case DwellTimeSpec::Kind::Range: return analyze_range(sys, d.t_min, d.t_max, degree, RangeMode::Direct, opt);
  }
  throw std::logic_error("analyze: unknown dwell kind");
}

Certificate analyze_switched_min(const SwitchedSystem& sw, double T, int degree,
                                 const AnalysisOptions& opt) {
  sw.validate();
  if (sw.num_modes() < 2) throw std::invalid_argument("analyze_switched_min: needs at least two modes");
  require_positive_time(T, "analyze_switched_min");
  const double margin = opt.margin.value_or(default_margin(sw.data_scale()));
  const int n = sw.n, N = sw.num_modes();
  BuildFn build = [&](const IntervalEncoding& enc, const Skip& skip) {
    Built out{LpBuilder(enc), -1, {}};
    LpBuilder& b = out.b;
    out.gamma = b.var(0.0, kInf, "gamma");
    b.minimize(out.gamma);
    const LinearForm g = LinearForm::var(out.gamma);
    const Interval iv{0.0, T};
    std::vector<std::vector<PolyForm>> zeta(N);
    for (int s = 0; s < N; ++s)
      for (int i = 0; i < n; ++i) zeta[s].push_back(b.poly_var(degree, "zeta" + idx(s) + idx(i), T));
    for (int s = 0; s < N; ++s) {
      const Mode& md = sw.modes[s];
      const std::string ms = idx(s);
      if (!skip.count("flow"))
        for (int i = 0; i < n; ++i) {
          PolyForm e = row_mul(md.A, i, zeta[s]) - zeta[s][i].derivative() +
                       PolyForm::from_poly(row_sum(md.E, i));
          b.nonneg_on(PolyForm() - e, iv, margin, "flow" + ms + idx(i));
        }
      for (int k = 0; k < sw.q; ++k) {
        PolyForm e = row_mul(md.C, k, zeta[s]) + PolyForm::from_poly(row_sum(md.F, k));
        b.nonneg_on(PolyForm::from_form(g) - e, iv, margin, "output_c" + ms + idx(k));
      }
      const Matrix AT = md.A.eval(T), CT = md.C.eval(T);
      std::vector<LinearForm> zT;
      for (int i = 0; i < n; ++i) zT.push_back(zeta[s][i].at(T));
      if (!skip.count("stationary_flow"))
        for (int i = 0; i < n; ++i)
          b.le(row_mul_at(AT, i, zT) + LinearForm::value(row_sum(md.E, i)(T)), -margin,
               "stationary_flow" + ms + idx(i));
      for (int k = 0; k < sw.q; ++k)
        b.le(row_mul_at(CT, k, zT) + LinearForm::value(row_sum(md.F, k)(T)) - g, -margin,
             "stationary_output" + ms + idx(k));
      for (int i = 0; i < n; ++i) {
        b.ge(zeta[s][i].at(0.0), margin, "zeta0" + ms + idx(i));
        b.le(zeta[s][i].at(0.0), opt.normalization, "zeta0_cap" + ms + idx(i));
      }
    }
    if (!skip.count("coupling"))
      for (int s = 0; s < N; ++s)
        for (int r = 0; r < N; ++r) {
          if (s == r) continue;
          for (int i = 0; i < n; ++i)
            b.le(zeta[r][i].at(T) - zeta[s][i].at(0.0), 0.0, "coupling" + idx(s) + idx(r) + idx(i));
        }
    out.finish = [=](const std::vector<double>& x) {
      Certificate c;
      c.kind = CertificateKind::SwitchedMinDT;
      c.margin = margin;
      c.degree = degree;
      for (const auto& mode : zeta) {
        c.zeta.emplace_back();
        for (const auto& z : mode) c.zeta.back().push_back(z.eval(x));
      }
      return c;
    };
    return out;
  };
  Certificate c = solve_escalating(build, opt, "switched minimum dwell-time conditions",
                                   {"flow", "stationary_flow", "coupling"});
  c.dwell = DwellTimeSpec::minimum(T);
  return c;
}

double analyze_switched_blanchini(const SwitchedSystem& sw, double T, int grid_points,
                                  const AnalysisOptions& opt) {
  sw.validate();
  if (sw.max_degree() > 0) throw NotConstant("analyze_switched_blanchini: modes must be constant");
  if (grid_points < 2) throw std::invalid_argument("analyze_switched_blanchini: grid_points >= 2");
  require_positive_time(T, "analyze_switched_blanchini");
  const int n = sw.n, N = sw.num_modes();
  const double margin = opt.margin.value_or(default_margin(sw.data_scale()));
  LpBuilder b;
  const int gv = b.var(0.0, kInf, "gamma");
  b.minimize(gv);
  const LinearForm g = LinearForm::var(gv);
  std::vector<std::vector<LinearForm>> lam(N);
  for (int s = 0; s < N; ++s)
    for (int i = 0; i < n; ++i) lam[s].push_back(LinearForm::var(b.var(-kInf, kInf, "lambda" + idx(s) + idx(i))));

  // exp([[A, e],[0, 0]] t) = [[e^{At}, int_0^t e^{As} e ds],[0, 1]]
  auto flow_map = [&](const Matrix& A, const Vector& e, double t, Matrix& Phi, Vector& integral) {
    Matrix M = Matrix::Zero(n + 1, n + 1);
    M.topLeftCorner(n, n) = A * t;
    M.topRightCorner(n, 1) = e * t;
    const Matrix X = M.exp();
    Phi = X.topLeftCorner(n, n);
    integral = X.topRightCorner(n, 1);
  };
  for (int s = 0; s < N; ++s) {
    const Matrix A = sw.modes[s].A.eval(0.0), C = sw.modes[s].C.eval(0.0);
    const Matrix E = sw.modes[s].E.eval(0.0), F = sw.modes[s].F.eval(0.0);
    const Vector e = E.rowwise().sum();
    const Vector fvec = F.cols() ? Vector(F.rowwise().sum()) : Vector::Zero(sw.q);
    for (int i = 0; i < n; ++i)
      b.le(row_mul_at(A, i, lam[s]) + LinearForm::value(e[i]), -margin, "flow" + idx(s) + idx(i));
    Matrix PhiT;
    Vector intT;
    flow_map(A, e, T, PhiT, intT);
    for (int r = 0; r < N; ++r) {
      if (r == s) continue;
      for (int i = 0; i < n; ++i)
        b.le(row_mul_at(PhiT, i, lam[r]) - lam[s][i] + LinearForm::value(intT[i]), -margin,
             "transition" + idx(s) + idx(r) + idx(i));
      for (int k = 0; k < grid_points; ++k) {
        const double tau = T * k / (grid_points - 1);
        const Matrix Phi = (A * tau).exp();
        const Matrix CP = C * Phi;
        for (int o = 0; o < sw.q; ++o) {
          // C [lam_s + Phi (lam_r - lam_s)] + F 1 - gamma
          LinearForm row = LinearForm::value(fvec[o]) - g;
          for (int j = 0; j < n; ++j) {
            row += (C(o, j) - CP(o, j)) * lam[s][j];
            row += CP(o, j) * lam[r][j];
          }
          b.le(row, -margin, "output_c" + idx(s) + idx(r) + idx(k));
        }
      }
    }
  }
  detail::dump_lp(opt.dump_lp, b.lp());
  const LpSolution sol = lp_solve(b.lp());
  if (sol.status != LpStatus::Optimal)
    throw Infeasible("comparison conditions for switched systems: infeasible");
  return sol.x[gv];
}

LtiResult analyze_lti(const ImpulsiveSystem& sys, LtiNorm norm, LtiTime time,
                      const AnalysisOptions& opt) {
  sys.validate();
  Matrix A, E, C, F;
  if (time == LtiTime::Continuous) {
    if (!sys.is_constant()) throw NotConstant("analyze_lti: flow matrices must be constant");
    const FlowAt f = sys.flow(0.0);
    A = f.A, E = f.Ec, C = f.Cc, F = f.Fc;
  } else {
    const auto& j = sys.jumps.at(0);
    A = j.J - Matrix::Identity(sys.n, sys.n), E = j.Ed, C = j.Cd, F = j.Fd;
  }
  const int n = sys.n;
  // These LPs are tiny and exact, so a smaller margin keeps the bias on gamma negligible.
  const double margin = opt.margin.value_or(1e-2 * default_margin(sys.data_scale()));
  LpBuilder b;
  const int gv = b.var(0.0, kInf, "gamma");
  b.minimize(gv);
  const LinearForm g = LinearForm::var(gv);
  std::vector<LinearForm> v;
  for (int i = 0; i < n; ++i) v.push_back(LinearForm::var(b.var(margin, opt.normalization, "v" + idx(i))));
  if (norm == LtiNorm::Linf) {
    // A xi + E 1 < 0, C xi + F 1 - gamma 1 < 0
    for (int i = 0; i < n; ++i)
      b.le(row_mul_at(A, i, v) + LinearForm::value(row_sum(E, i)), -margin, "flow" + idx(i));
    for (int k = 0; k < C.rows(); ++k)
      b.le(row_mul_at(C, k, v) + LinearForm::value(row_sum(F, k)) - g, -margin, "output" + idx(k));
  } else {
    // chi' A + 1' C < 0, chi' E + 1' F - gamma 1' < 0
    const Matrix At = A.transpose(), Et = E.transpose();
    for (int i = 0; i < n; ++i)
      b.le(row_mul_at(At, i, v) + LinearForm::value(C.rows() ? C.col(i).sum() : 0.0), -margin,
           "flow" + idx(i));
    for (int k = 0; k < E.cols(); ++k)
      b.le(row_mul_at(Et, k, v) + LinearForm::value(F.rows() ? F.col(k).sum() : 0.0) - g, -margin,
           "output" + idx(k));
  }
  detail::dump_lp(opt.dump_lp, b.lp());
  const LpSolution sol = lp_solve(b.lp());
  if (sol.status != LpStatus::Optimal) throw Infeasible("LTI conditions: infeasible (not stable)");
  LtiResult r;
  r.gamma = sol.x[gv];
  r.witness = Vector(n);
  for (int i = 0; i < n; ++i) r.witness[i] = v[i].eval(sol.x);
  return r;
}

double lti_linf_gain_closed_form(const Matrix& A, const Matrix& E, const Matrix& C, const Matrix& F) {
  const Matrix G = -C * A.partialPivLu().solve(E) + F;
  return G.rowwise().sum().maxCoeff();
}

}  // namespace posdwell

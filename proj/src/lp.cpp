#include "posdwell/lp.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace posdwell {

int LinearProgram::add_variable(double lower, double upper, std::string name) {
  lower_.push_back(lower);
  upper_.push_back(upper);
  obj_.push_back(0.0);
  names_.push_back(std::move(name));
  return num_vars() - 1;
}

void LinearProgram::set_objective(int var, double coef) { obj_.at(var) = coef; }

void LinearProgram::add_row(std::vector<std::pair<int, double>> terms, Relation rel, double rhs,
                            std::string label) {
  for (const auto& [j, a] : terms) {
    if (j < 0 || j >= num_vars()) throw std::out_of_range("LinearProgram: variable index");
    (void)a;
  }
  rows_.push_back({std::move(terms), rel, rhs, std::move(label)});
}

void LinearProgram::add_le(std::vector<std::pair<int, double>> terms, double rhs,
                           std::string label) {
  add_row(std::move(terms), Relation::LessEqual, rhs, std::move(label));
}

void LinearProgram::add_ge(std::vector<std::pair<int, double>> terms, double rhs,
                           std::string label) {
  for (auto& t : terms) t.second = -t.second;
  add_row(std::move(terms), Relation::LessEqual, -rhs, std::move(label));
}

void LinearProgram::add_eq(std::vector<std::pair<int, double>> terms, double rhs,
                           std::string label) {
  add_row(std::move(terms), Relation::Equal, rhs, std::move(label));
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_vars(); ++j) {
    worst = std::max(worst, lower_[j] - x[j]);
    worst = std::max(worst, x[j] - upper_[j]);
  }
  for (const auto& r : rows_) {
    double lhs = 0.0;
    for (const auto& [j, a] : r.terms) lhs += a * x[j];
    const double v = lhs - r.rhs;
    worst = std::max(worst, r.rel == Relation::Equal ? std::abs(v) : v);
  }
  return worst;
}

std::string LinearProgram::to_lp_format() const {
  std::ostringstream os;
  os.precision(17);
  auto var = [&](int j) { return "x" + std::to_string(j); };
  auto term = [&](double a, int j) {
    std::ostringstream t;
    t.precision(17);
    t << (a < 0 ? " - " : " + ") << std::abs(a) << " " << var(j);
    return t.str();
  };
  os << "\\ " << num_vars() << " variables, " << num_rows() << " rows\n";
  for (int j = 0; j < num_vars(); ++j)
    if (!names_[j].empty()) os << "\\ " << var(j) << " = " << names_[j] << "\n";
  os << "Minimize\n obj:";
  bool any = false;
  for (int j = 0; j < num_vars(); ++j)
    if (obj_[j] != 0.0) {
      os << term(obj_[j], j);
      any = true;
    }
  if (!any) os << " 0 " << (num_vars() ? var(0) : std::string("x0"));
  os << "\nSubject To\n";
  for (size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    os << " r" << i << ":";
    if (r.terms.empty()) os << " 0 x0";
    for (const auto& [j, a] : r.terms) os << term(a, j);
    os << (r.rel == Relation::Equal ? " = " : " <= ") << r.rhs << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < num_vars(); ++j) {
    const bool lo = std::isfinite(lower_[j]), hi = std::isfinite(upper_[j]);
    if (!lo && !hi)
      os << " " << var(j) << " free\n";
    else if (lo && hi)
      os << " " << lower_[j] << " <= " << var(j) << " <= " << upper_[j] << "\n";
    else if (lo)
      os << " " << var(j) << " >= " << lower_[j] << "\n";
    else
      os << " -inf <= " << var(j) << " <= " << upper_[j] << "\n";
  }
  os << "End\n";
  return os.str();
}

namespace {

using SparseCol = std::vector<std::pair<int, double>>;

// Standard form: min c'y, A y = b, y >= 0. Rows with b < 0 are covered by the shared artificial.
struct StandardForm {
  int m = 0;
  std::vector<SparseCol> cols;
  std::vector<double> cost;
  std::vector<bool> artificial;
  std::vector<double> b;
  std::vector<int> initial_basis;
  // x_j = offset_j + sum coef * y_col
  std::vector<double> offset;
  std::vector<std::vector<std::pair<int, double>>> var_map;
  bool trivially_infeasible = false;
  // Inequality rows with negative right-hand side keep their slack basic and share
  // one artificial column, pivoted in at the most violated row before phase one.
  int shared_artificial = -1;
  int shared_row = -1;
  double shared_scale = 1.0;
};

StandardForm to_standard(const LinearProgram& lp) {
  StandardForm sf;
  const int n = lp.num_vars();
  sf.offset.assign(n, 0.0);
  sf.var_map.resize(n);
  struct Pending {
    std::vector<std::pair<int, double>> terms;  // over y columns
    bool eq;
    double rhs;
  };
  std::vector<Pending> rows;
  auto new_col = [&](double c) {
    sf.cols.emplace_back();
    sf.cost.push_back(c);
    sf.artificial.push_back(false);
    return static_cast<int>(sf.cols.size()) - 1;
  };
  for (int j = 0; j < n; ++j) {
    const double l = lp.lower(j), u = lp.upper(j), c = lp.objective()[j];
    if (std::isfinite(l)) {
      const int y = new_col(c);
      sf.offset[j] = l;
      sf.var_map[j] = {{y, 1.0}};
      if (std::isfinite(u)) rows.push_back({{{y, 1.0}}, false, u - l});
    } else if (std::isfinite(u)) {
      const int y = new_col(-c);
      sf.offset[j] = u;
      sf.var_map[j] = {{y, -1.0}};
    } else {
      const int yp = new_col(c);
      const int ym = new_col(-c);
      sf.var_map[j] = {{yp, 1.0}, {ym, -1.0}};
    }
  }
  const int structural = static_cast<int>(sf.cols.size());
  for (const auto& r : lp.rows()) {
    Pending p{{}, r.rel == Relation::Equal, r.rhs};
    for (const auto& [j, a] : r.terms) {
      if (a == 0.0) continue;
      p.rhs -= a * sf.offset[j];
      for (const auto& [y, s] : sf.var_map[j]) p.terms.push_back({y, a * s});
    }
    // merge duplicate columns
    std::sort(p.terms.begin(), p.terms.end());
    std::vector<std::pair<int, double>> merged;
    for (const auto& t : p.terms) {
      if (!merged.empty() && merged.back().first == t.first)
        merged.back().second += t.second;
      else
        merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& t) { return t.second == 0.0; }),
                 merged.end());
    p.terms = std::move(merged);
    rows.push_back(std::move(p));
  }

  std::vector<int> shared;
  for (auto& p : rows) {
    double scale = 0.0;
    for (const auto& t : p.terms) scale = std::max(scale, std::abs(t.second));
    if (scale == 0.0) {
      const bool ok = p.eq ? std::abs(p.rhs) <= 1e-12 : p.rhs >= -1e-12;
      if (!ok) sf.trivially_infeasible = true;
      continue;
    }
    const int i = sf.m++;
    double sign = 1.0 / scale;
    double rhs = p.rhs * sign;
    double slack_coef = sign;
    if (rhs < 0.0 && !p.eq) {
      for (const auto& [y, a] : p.terms) sf.cols[y].push_back({i, a * sign});
      sf.b.push_back(rhs);
      const int s = new_col(0.0);
      sf.cols[s].push_back({i, 1.0});
      sf.initial_basis.push_back(s);
      shared.push_back(i);
      continue;
    }
    if (rhs < 0.0) {
      sign = -sign;
      rhs = -rhs;
      slack_coef = -slack_coef;
    }
    for (const auto& [y, a] : p.terms) sf.cols[y].push_back({i, a * sign});
    sf.b.push_back(rhs);
    int basic = -1;
    if (!p.eq) {
      const int s = new_col(0.0);
      const double sc = slack_coef > 0 ? 1.0 : -1.0;
      sf.cols[s].push_back({i, sc});
      if (sc > 0) basic = s;
    }
    if (basic < 0) {
      basic = new_col(0.0);
      sf.artificial[basic] = true;
      sf.cols[basic].push_back({i, 1.0});
    }
    sf.initial_basis.push_back(basic);
  }
  if (!shared.empty()) {
    const int a = new_col(0.0);
    sf.artificial[a] = true;
    sf.shared_artificial = a;
    sf.shared_row = shared.front();
    for (int i : shared) {
      sf.cols[a].push_back({i, -1.0});
      if (sf.b[i] < sf.b[sf.shared_row]) sf.shared_row = i;
      sf.shared_scale = std::max(sf.shared_scale, 1.0 + std::abs(sf.b[i]));
    }
  }
  // Column equilibration of the structural part; slacks keep their unit entries.
  std::vector<double> cscale(structural, 1.0);
  for (int y = 0; y < structural; ++y) {
    double mx = 0.0;
    for (const auto& [i, a] : sf.cols[y]) mx = std::max(mx, std::abs(a));
    if (mx == 0.0) continue;
    cscale[y] = mx;
    for (auto& e : sf.cols[y]) e.second /= mx;
    sf.cost[y] /= mx;
  }
  for (auto& vm : sf.var_map)
    for (auto& [y, c] : vm) c /= cscale[y];
  return sf;
}

class Simplex {
 public:
  Simplex(const StandardForm& sf, const SimplexOptions& o) : sf_(sf), o_(o) {
    m_ = sf.m;
    N_ = static_cast<int>(sf.cols.size());
    basis_ = sf.initial_basis;
    pos_.assign(N_, -1);
    for (int i = 0; i < m_; ++i) pos_[basis_[i]] = i;
    b_ = Eigen::Map<const Eigen::VectorXd>(sf.b.data(), m_);
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    xb_ = b_;
    if (sf.shared_artificial >= 0) {
      Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_);
      for (const auto& [i, a] : sf.cols[sf.shared_artificial]) alpha[i] = a;
      const int r = sf.shared_row;
      const double theta = xb_[r] / alpha[r];
      xb_.noalias() -= theta * alpha;
      xb_[r] = theta;
      pivot(r, sf.shared_artificial, alpha);
    }
  }

  enum class Result { Optimal, Unbounded, IterationLimit, Lost };

  Result run(const std::vector<double>& cost, bool allow_artificial) {
    int degenerate = 0;
    bool bland = false;
    int since_refactor = 0;
    Eigen::VectorXd cb(m_), y(m_), alpha(m_);
    while (true) {
      if (iterations_ >= o_.max_iterations) return Result::IterationLimit;
      if (since_refactor >= o_.refactor_every) {
        refactor();
        since_refactor = 0;
        if (repaired_ && primal_infeasible()) return Result::Lost;
      }
      for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
      y.noalias() = binv_.transpose() * cb;

      int q = -1;
      double best = -o_.optimality_tol;
      for (int j = 0; j < N_; ++j) {
        if (pos_[j] >= 0) continue;
        if (sf_.artificial[j] && !allow_artificial) continue;
        double d = cost[j];
        for (const auto& [i, a] : sf_.cols[j]) d -= y[i] * a;
        if (bland) {
          if (d < -o_.optimality_tol) {
            q = j;
            break;
          }
        } else if (d < best) {
          best = d;
          q = j;
        }
      }
      if (q < 0) {
        if (since_refactor == 0) return Result::Optimal;
        // Confirm optimality against a fresh factorisation before stopping.
        refactor();
        since_refactor = 0;
        if (repaired_ && primal_infeasible()) return Result::Lost;
        continue;
      }

      alpha.setZero();
      for (const auto& [i, a] : sf_.cols[q]) alpha.noalias() += a * binv_.col(i);

      int r = ratio_test(alpha, bland, allow_artificial);
      if (r < 0) return Result::Unbounded;

      const double theta = std::max(0.0, xb_[r] / alpha[r]);
      xb_.noalias() -= theta * alpha;
      xb_[r] = theta;
      pivot(r, q, alpha);
      ++iterations_;
      ++since_refactor;

      if (theta <= 1e-12) {
        if (++degenerate > 50) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
    }
  }

  // Pivot basic artificials out wherever a structural column can replace them.
  void expel_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (!sf_.artificial[basis_[r]]) continue;
      int best_j = -1;
      double best_v = 1e-9;
      for (int j = 0; j < N_; ++j) {
        if (pos_[j] >= 0 || sf_.artificial[j]) continue;
        double v = 0.0;
        for (const auto& [i, a] : sf_.cols[j]) v += binv_(r, i) * a;
        if (std::abs(v) > best_v) {
          best_v = std::abs(v);
          best_j = j;
        }
      }
      if (best_j < 0) continue;
      Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_);
      for (const auto& [i, a] : sf_.cols[best_j]) alpha.noalias() += a * binv_.col(i);
      const double theta = xb_[r] / alpha[r];
      xb_.noalias() -= theta * alpha;
      xb_[r] = theta;
      pivot(r, best_j, alpha);
    }
    refactor();
  }

  void refactor() {
    if (sparse_inverse()) {
      xb_.noalias() = binv_ * b_;
      return;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_matrix());
    if (!lu.isInvertible()) {
      repair_basis();
      lu.compute(basis_matrix());
      if (!lu.isInvertible()) throw NumericalFailure("simplex: singular basis");
    }
    binv_ = lu.inverse();
    xb_.noalias() = binv_ * b_;
  }

  // Most basic columns are unit slacks, so a sparse factorisation is far cheaper
  // than a dense one. Returns false when the result is not trustworthy.
  bool sparse_inverse() {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < m_; ++i)
      for (const auto& [row, a] : sf_.cols[basis_[i]]) t.emplace_back(row, i, a);
    Eigen::SparseMatrix<double> B(m_, m_);
    B.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(B);
    if (lu.info() != Eigen::Success) return false;
    Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(m_, m_));
    if (lu.info() != Eigen::Success || !inv.allFinite()) return false;
    Eigen::MatrixXd resid = B * inv;
    resid.diagonal().array() -= 1.0;
    if (resid.cwiseAbs().rowwise().sum().maxCoeff() > 1e-9) return false;
    binv_ = std::move(inv);
    return true;
  }

  // Basic variables outside [0, inf) after a repair; the caller restarts phase one.
  bool primal_infeasible() const {
    for (int i = 0; i < m_; ++i)
      if (xb_[i] < -1e3 * o_.feasibility_tol) return true;
    return false;
  }
  bool repaired() const { return repaired_; }
  void clear_repaired() { repaired_ = false; }

  Eigen::MatrixXd basis_matrix() const {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (const auto& [row, a] : sf_.cols[basis_[i]]) B(row, i) = a;
    return B;
  }

  // Swap dependent basic columns for the unit columns of the rows they fail to span.
  void repair_basis() {
    const Eigen::MatrixXd B = basis_matrix();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    std::vector<int> keep(rank), drop;
    for (int k = 0; k < m_; ++k) {
      const int col = qr.colsPermutation().indices()[k];
      if (k < rank) keep[k] = col; else drop.push_back(col);
    }
    Eigen::MatrixXd K(m_, rank);
    for (int k = 0; k < rank; ++k) K.col(k) = B.col(keep[k]);
    Eigen::HouseholderQR<Eigen::MatrixXd> kq(K);
    const Eigen::MatrixXd Q = kq.householderQ() * Eigen::MatrixXd::Identity(m_, m_);
    const Eigen::MatrixXd comp = Q.rightCols(m_ - rank).transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pick(comp);
    for (size_t k = 0; k < drop.size(); ++k) {
      const int row = pick.colsPermutation().indices()[k];
      const int unit = sf_.initial_basis[row];
      const int slot = drop[k];
      if (pos_[unit] >= 0) continue;
      pos_[basis_[slot]] = -1;
      basis_[slot] = unit;
      pos_[unit] = slot;
    }
    repaired_ = true;
  }

  std::vector<double> values() const {
    std::vector<double> y(N_, 0.0);
    for (int i = 0; i < m_; ++i) y[basis_[i]] = std::max(0.0, xb_[i]);
    return y;
  }

  // Largest basic artificial relative to the right-hand side of its own row.
  double artificial_excess() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (!sf_.artificial[j]) continue;
      const double scale =
          j == sf_.shared_artificial ? sf_.shared_scale : 1.0 + std::abs(b_[sf_.cols[j].front().first]);
      s = std::max(s, std::max(0.0, xb_[i]) / scale);
    }
    return s;
  }

  int iterations() const { return iterations_; }

 private:
  int ratio_test(const Eigen::VectorXd& alpha, bool bland, bool allow_artificial) const {
    // Basic artificials in phase two are pinned at zero.
    auto pinned = [&](int i) { return !allow_artificial && sf_.artificial[basis_[i]]; };
    const double tol = o_.pivot_tol * std::max(1.0, alpha.size() ? alpha.cwiseAbs().maxCoeff() : 0.0);
    if (bland) {
      int r = -1;
      double best = kInf;
      for (int i = 0; i < m_; ++i) {
        if (pinned(i) && std::abs(alpha[i]) > tol) return i;
        if (alpha[i] <= tol) continue;
        const double ratio = std::max(0.0, xb_[i]) / alpha[i];
        if (ratio < best - 1e-15 ||
            (ratio <= best + 1e-15 && r >= 0 && basis_[i] < basis_[r] && alpha[i] >= alpha[r])) {
          best = ratio;
          r = i;
        }
      }
      return r;
    }
    double theta_max = kInf;
    for (int i = 0; i < m_; ++i) {
      if (pinned(i) && std::abs(alpha[i]) > tol) {
        theta_max = 0.0;
        continue;
      }
      if (alpha[i] > tol)
        theta_max = std::min(theta_max, (xb_[i] + o_.feasibility_tol) / alpha[i]);
    }
    if (!std::isfinite(theta_max)) return -1;
    int r = -1;
    double best_alpha = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double mag = pinned(i) ? std::abs(alpha[i]) : alpha[i];
      if (mag <= tol) continue;
      const double ratio = pinned(i) ? 0.0 : xb_[i] / alpha[i];
      if (ratio <= theta_max && mag > best_alpha) {
        best_alpha = mag;
        r = i;
      }
    }
    return r;
  }

  void pivot(int r, int q, const Eigen::VectorXd& alpha) {
    const Eigen::RowVectorXd pivot_row = binv_.row(r) / alpha[r];
    Eigen::VectorXd eta = alpha;
    eta[r] = 0.0;
    binv_.noalias() -= eta * pivot_row;
    binv_.row(r) = pivot_row;
    pos_[basis_[r]] = -1;
    basis_[r] = q;
    pos_[q] = r;
  }

  const StandardForm& sf_;
  SimplexOptions o_;
  int m_ = 0, N_ = 0;
  std::vector<int> basis_, pos_;
  Eigen::VectorXd b_, xb_;
  Eigen::MatrixXd binv_;
  int iterations_ = 0;
  bool repaired_ = false;
};

std::optional<LpSolution> attempt(const LinearProgram& lp, const StandardForm& sf,
                                 const SimplexOptions& opts) {
  LpSolution sol;
  sol.x.assign(lp.num_vars(), 0.0);

  Simplex sx(sf, opts);
  std::vector<double> phase1(sf.cols.size(), 0.0);
  bool any_art = false;
  for (size_t j = 0; j < sf.cols.size(); ++j)
    if (sf.artificial[j]) {
      phase1[j] = 1.0;
      any_art = true;
    }
  if (any_art) {
    auto res = sx.run(phase1, true);
    if (res == Simplex::Result::Lost) return std::nullopt;
    if (res == Simplex::Result::IterationLimit)
      throw NumericalFailure("simplex: iteration limit in phase one");
    if (sx.artificial_excess() > 1e-9) {
      sol.status = LpStatus::Infeasible;
      sol.iterations = sx.iterations();
      return sol;
    }
    sx.expel_artificials();
  }
  auto res = sx.run(sf.cost, false);
  if (res == Simplex::Result::Lost) return std::nullopt;
  sol.iterations = sx.iterations();
  if (res == Simplex::Result::IterationLimit)
    throw NumericalFailure("simplex: iteration limit in phase two");
  if (res == Simplex::Result::Unbounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  const auto y = sx.values();
  for (int j = 0; j < lp.num_vars(); ++j) {
    double v = sf.offset[j];
    for (const auto& [col, s] : sf.var_map[j]) v += s * y[col];
    sol.x[j] = v;
  }
  sol.objective_value = 0.0;
  for (int j = 0; j < lp.num_vars(); ++j) sol.objective_value += lp.objective()[j] * sol.x[j];
  const double viol = lp.max_violation(sol.x);
  if (viol > kLpFeasibilityTol)
    throw NumericalFailure("simplex: final point violates constraints by " + std::to_string(viol));
  sol.status = LpStatus::Optimal;
  return sol;
}

}  // namespace

LpSolution lp_solve(const LinearProgram& lp, const SimplexOptions& opts) {
  const StandardForm sf = to_standard(lp);
  if (sf.trivially_infeasible) {
    LpSolution sol;
    sol.x.assign(lp.num_vars(), 0.0);
    return sol;
  }
  // A basis repair can leave the iterate infeasible; retry with safer pivoting.
  SimplexOptions o = opts;
  for (int tries = 0; tries < 3; ++tries) {
    if (auto sol = attempt(lp, sf, o)) return *sol;
    o.pivot_tol *= 100.0;
    o.refactor_every = std::max(8, o.refactor_every / 4);
  }
  throw NumericalFailure("simplex: singular basis");
}

std::optional<double> lp_bisect_feasibility(const std::function<LinearProgram(double)>& builder,
                                            double lo, double hi, double tol) {
  auto feasible = [&](double g) { return lp_solve(builder(g)).status != LpStatus::Infeasible; };
  if (!feasible(hi)) return std::nullopt;
  if (feasible(lo)) return lo;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace posdwell

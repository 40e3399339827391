#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace posdwell {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal };

struct LpRow {
  std::vector<std::pair<int, double>> terms;
  Relation rel = Relation::LessEqual;
  double rhs = 0.0;
  std::string label;
};

/// Minimisation problem over rows of the form a.x <= b or a.x = b.
class LinearProgram {
 public:
  int add_variable(double lower = -kInf, double upper = kInf, std::string name = {});
  void set_objective(int var, double coef);

  void add_le(std::vector<std::pair<int, double>> terms, double rhs, std::string label = {});
  /// Stored negated as a <= row.
  void add_ge(std::vector<std::pair<int, double>> terms, double rhs, std::string label = {});
  void add_eq(std::vector<std::pair<int, double>> terms, double rhs, std::string label = {});

  int num_vars() const { return static_cast<int>(lower_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const std::vector<LpRow>& rows() const { return rows_; }
  const std::vector<double>& objective() const { return obj_; }
  double lower(int j) const { return lower_[j]; }
  double upper(int j) const { return upper_[j]; }
  const std::string& name(int j) const { return names_[j]; }

  /// Largest violation of rows and bounds at x.
  double max_violation(const std::vector<double>& x) const;
  /// CPLEX-style LP text.
  std::string to_lp_format() const;

 private:
  void add_row(std::vector<std::pair<int, double>> terms, Relation rel, double rhs,
               std::string label);
  std::vector<double> obj_;
  std::vector<double> lower_, upper_;
  std::vector<std::string> names_;
  std::vector<LpRow> rows_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective_value = 0.0;
  int iterations = 0;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 64;
  int max_iterations = 200000;
};

inline constexpr double kLpFeasibilityTol = 1e-7;

LpSolution lp_solve(const LinearProgram& lp, const SimplexOptions& opts = {});

/// Smallest gamma in [lo, hi] (to tol) for which builder(gamma) is feasible.
std::optional<double> lp_bisect_feasibility(const std::function<LinearProgram(double)>& builder,
                                            double lo, double hi, double tol);

}  // namespace posdwell

#pragma once

#include <map>
#include <string>
#include <vector>

#include "posdwell/lp.hpp"
#include "posdwell/poly.hpp"

namespace posdwell {

/// constant + sum_j terms[j] * x_j
struct LinearForm {
  double constant = 0.0;
  std::map<int, double> terms;

  static LinearForm var(int j, double c = 1.0);
  static LinearForm value(double c);

  LinearForm& operator+=(const LinearForm& o);
  LinearForm& operator-=(const LinearForm& o);
  LinearForm& operator*=(double s);
  friend LinearForm operator+(LinearForm a, const LinearForm& b) { return a += b; }
  friend LinearForm operator-(LinearForm a, const LinearForm& b) { return a -= b; }
  friend LinearForm operator*(double s, LinearForm a) { return a *= s; }

  double eval(const std::vector<double>& x) const;
};

/// Polynomial in one variable whose coefficients are linear forms in LP variables.
/// The coefficient vector keeps its formal length, so degree bookkeeping does not
/// depend on the values the solver picks.
class PolyForm {
 public:
  PolyForm() : c_(1) {}
  explicit PolyForm(std::vector<LinearForm> c);
  static PolyForm from_poly(const Poly& p);
  static PolyForm from_form(const LinearForm& f) { return PolyForm({f}); }

  int formal_degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<LinearForm>& coeffs() const { return c_; }
  const LinearForm& coeff(int k) const { return c_[k]; }

  PolyForm derivative() const;
  LinearForm at(double t) const;
  PolyForm compose_affine(double a, double h) const;
  Poly eval(const std::vector<double>& x) const;

  PolyForm& operator+=(const PolyForm& o);
  PolyForm& operator-=(const PolyForm& o);
  friend PolyForm operator+(PolyForm a, const PolyForm& b) { return a += b; }
  friend PolyForm operator-(PolyForm a, const PolyForm& b) { return a -= b; }
  friend PolyForm operator*(const Poly& p, const PolyForm& f);
  friend PolyForm operator*(double s, PolyForm f);

 private:
  std::vector<LinearForm> c_;
};

/// Certificate of one interval row, as extracted from a solved LP.
struct HandelmanRecord {
  std::string label;
  HandelmanCertificate cert;
  /// Polynomial shown nonnegative; the identity certifies target - margin.
  Poly target;
  double margin = 0.0;
};

/// How interval rows are imposed: Handelman identities or samples on a grid.
struct IntervalEncoding {
  enum class Kind { Handelman, Grid };
  Kind kind = Kind::Handelman;
  int boost = 4;
  int grid_points = 201;
};

class LpBuilder {
 public:
  explicit LpBuilder(IntervalEncoding enc = {}) : enc_(enc) {}

  int var(double lo = -kInf, double hi = kInf, const std::string& name = {});
  /// Polynomial of the given degree with fresh coefficient variables.
  /// Polynomial with free coefficients in (t / unit)^k.
  PolyForm poly_var(int degree, const std::string& name, double unit = 1.0);

  void le(const LinearForm& f, double bound, const std::string& label);
  void ge(const LinearForm& f, double bound, const std::string& label);
  void eq(const LinearForm& f, double value, const std::string& label);

  /// p(t) >= margin for all t in iv. Degenerate intervals become one point row.
  void nonneg_on(const PolyForm& p, Interval iv, double margin, const std::string& label);

  void minimize(int var) { lp_.set_objective(var, 1.0); }
  void objective(int var, double coef) { lp_.set_objective(var, coef); }
  const LinearProgram& lp() const { return lp_; }
  const IntervalEncoding& encoding() const { return enc_; }

  std::vector<HandelmanRecord> extract(const std::vector<double>& x) const;

 private:
  struct Slot {
    std::string label;
    PolyForm target;
    Interval iv;
    int order;
    double margin;
    std::vector<LinearForm> rows;
  };
  LinearProgram lp_;
  IntervalEncoding enc_;
  std::vector<Slot> slots_;
};

}  // namespace posdwell

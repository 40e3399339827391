#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace posdwell {

/// Univariate polynomial with coefficients in ascending degree.
/// Trailing zero coefficients are stripped after every operation, so the
/// zero polynomial has an empty coefficient vector.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<double> coeffs);

  static Poly constant(double c);
  static Poly monomial(int k, double c = 1.0);

  const std::vector<double>& coeffs() const { return c_; }
  /// Degree of the polynomial; the zero polynomial reports 0.
  int degree() const { return c_.empty() ? 0 : static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  double coeff(int k) const { return k < static_cast<int>(c_.size()) && k >= 0 ? c_[k] : 0.0; }
  double max_abs_coeff() const;

  double operator()(double t) const;
  Poly derivative() const;
  /// Returns q(s) = p(a + h s).
  Poly compose_affine(double a, double h) const;

  friend Poly operator+(const Poly& p, const Poly& q);
  friend Poly operator-(const Poly& p, const Poly& q);
  friend Poly operator*(const Poly& p, const Poly& q);
  friend Poly operator*(double s, const Poly& p);
  friend bool operator==(const Poly& p, const Poly& q) { return p.c_ == q.c_; }

 private:
  void canonicalize();
  std::vector<double> c_;
};

double poly_eval(const Poly& p, double t);
Poly poly_add(const Poly& p, const Poly& q);
Poly poly_sub(const Poly& p, const Poly& q);
Poly poly_mul(const Poly& p, const Poly& q);
Poly poly_derivative(const Poly& p);
Poly poly_scale(const Poly& p, double s);

struct Interval {
  double a = 0.0;
  double b = 1.0;
  double width() const { return b - a; }
};

class InvalidInterval : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Nonnegative combination of (tau-a)^i (b-tau)^j, i + j <= order.
struct HandelmanCertificate {
  Interval interval;
  int order = 0;
  std::map<std::pair<int, int>, double> weights;

  /// Expands the weighted products back into a polynomial in tau.
  Poly reconstruct() const;
  /// Largest coefficient mismatch against target - margin, measured on the
  /// unit-interval parametrisation tau = a + (b-a) s.
  double reconstruction_error(const Poly& target, double margin) const;
  bool weights_nonnegative() const;
};

/// Tolerance used for reconstruction checks of Handelman identities.
inline constexpr double kReconstructionTol = 1e-9;

/// Searches for a certificate of p - margin >= 0 on the interval at a fixed order.
std::optional<HandelmanCertificate> certify_nonneg(const Poly& p, Interval iv, int order,
                                                   double margin = 0.0);

/// Tries orders degree(p)+4 through degree(p)+10.
std::optional<HandelmanCertificate> certify_nonneg_auto(const Poly& p, Interval iv,
                                                        double margin = 0.0);

struct Witness {
  double tau;
  double value;
};

/// Grid search for a point where p is negative. Returns the grid minimiser.
std::optional<Witness> falsify_nonneg(const Poly& p, Interval iv, int grid_points);

/// Coefficients of s^k in s^i (1-s)^(D-i), indexed [i][k].
std::vector<std::vector<double>> bernstein_products(int order);
/// Matrix mapping monomial coefficients q_k to degree-D Bernstein coefficients:
/// b_i = sum_{k<=i} C(i,k)/C(D,k) q_k.
std::vector<std::vector<double>> bernstein_from_monomial(int order);
double binomial(int n, int k);

}  // namespace posdwell

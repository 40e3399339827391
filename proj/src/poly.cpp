#include "posdwell/poly.hpp"

#include <algorithm>
#include <cmath>

namespace posdwell {

Poly::Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) { canonicalize(); }

Poly Poly::constant(double c) { return Poly({c}); }

Poly Poly::monomial(int k, double c) {
  std::vector<double> v(static_cast<size_t>(k) + 1, 0.0);
  v[k] = c;
  return Poly(std::move(v));
}

void Poly::canonicalize() {
  while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

double Poly::max_abs_coeff() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

double Poly::operator()(double t) const {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * t + *it;
  return acc;
}

Poly Poly::derivative() const {
  if (c_.size() <= 1) return Poly();
  std::vector<double> d(c_.size() - 1);
  for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
  return Poly(std::move(d));
}

Poly Poly::compose_affine(double a, double h) const {
  // Horner in polynomial arithmetic: p(a + h s).
  Poly lin({a, h});
  Poly acc;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * lin + Poly::constant(*it);
  return acc;
}

Poly operator+(const Poly& p, const Poly& q) {
  std::vector<double> r(std::max(p.c_.size(), q.c_.size()), 0.0);
  for (size_t k = 0; k < p.c_.size(); ++k) r[k] += p.c_[k];
  for (size_t k = 0; k < q.c_.size(); ++k) r[k] += q.c_[k];
  return Poly(std::move(r));
}

Poly operator-(const Poly& p, const Poly& q) { return p + (-1.0) * q; }

Poly operator*(const Poly& p, const Poly& q) {
  if (p.c_.empty() || q.c_.empty()) return Poly();
  std::vector<double> r(p.c_.size() + q.c_.size() - 1, 0.0);
  for (size_t i = 0; i < p.c_.size(); ++i)
    for (size_t j = 0; j < q.c_.size(); ++j) r[i + j] += p.c_[i] * q.c_[j];
  return Poly(std::move(r));
}

Poly operator*(double s, const Poly& p) {
  std::vector<double> r(p.c_);
  for (double& v : r) v *= s;
  return Poly(std::move(r));
}

double poly_eval(const Poly& p, double t) { return p(t); }
Poly poly_add(const Poly& p, const Poly& q) { return p + q; }
Poly poly_sub(const Poly& p, const Poly& q) { return p - q; }
Poly poly_mul(const Poly& p, const Poly& q) { return p * q; }
Poly poly_derivative(const Poly& p) { return p.derivative(); }
Poly poly_scale(const Poly& p, double s) { return s * p; }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<std::vector<double>> bernstein_from_monomial(int order) {
  std::vector<std::vector<double>> m(order + 1, std::vector<double>(order + 1, 0.0));
  for (int i = 0; i <= order; ++i)
    for (int k = 0; k <= i; ++k) m[i][k] = binomial(i, k) / binomial(order, k);
  return m;
}

std::vector<std::vector<double>> bernstein_products(int order) {
  std::vector<std::vector<double>> out(order + 1, std::vector<double>(order + 1, 0.0));
  for (int i = 0; i <= order; ++i) {
    const int j = order - i;
    // s^i (1-s)^j = sum_l C(j,l) (-1)^l s^(i+l)
    for (int l = 0; l <= j; ++l) out[i][i + l] = binomial(j, l) * ((l % 2) ? -1.0 : 1.0);
  }
  return out;
}

Poly HandelmanCertificate::reconstruct() const {
  const Poly left({-interval.a, 1.0});
  const Poly right({interval.b, -1.0});
  Poly acc;
  for (const auto& [ij, c] : weights) {
    if (c == 0.0) continue;
    Poly term = Poly::constant(c);
    for (int k = 0; k < ij.first; ++k) term = term * left;
    for (int k = 0; k < ij.second; ++k) term = term * right;
    acc = acc + term;
  }
  return acc;
}

double HandelmanCertificate::reconstruction_error(const Poly& target, double margin) const {
  const double h = interval.width();
  // Compare in s on [0,1]: (tau-a)^i (b-tau)^j = h^(i+j) s^i (1-s)^j.
  Poly lhs;
  for (const auto& [ij, c] : weights) {
    if (c == 0.0) continue;
    Poly term = Poly::constant(c * std::pow(h, ij.first + ij.second));
    for (int k = 0; k < ij.first; ++k) term = term * Poly({0.0, 1.0});
    for (int k = 0; k < ij.second; ++k) term = term * Poly({1.0, -1.0});
    lhs = lhs + term;
  }
  const Poly rhs = (target - Poly::constant(margin)).compose_affine(interval.a, h);
  const Poly diff = lhs - rhs;
  return diff.max_abs_coeff();
}

bool HandelmanCertificate::weights_nonnegative() const {
  return std::all_of(weights.begin(), weights.end(),
                     [](const auto& kv) { return kv.second >= 0.0; });
}

std::optional<HandelmanCertificate> certify_nonneg(const Poly& p, Interval iv, int order,
                                                   double margin) {
  if (!(iv.a < iv.b)) throw InvalidInterval("certify_nonneg: interval must satisfy a < b");
  if (order < p.degree()) throw std::invalid_argument("certify_nonneg: order below degree");
  if (margin < 0.0) throw std::invalid_argument("certify_nonneg: negative margin");

  // With i + j = D the weights are C(D,i) times the Bernstein coefficients of
  // p - margin on [a,b], so the LP has exactly one candidate point.
  const double h = iv.width();
  const Poly q = (p - Poly::constant(margin)).compose_affine(iv.a, h);
  const auto to_bern = bernstein_from_monomial(order);
  std::vector<double> w(order + 1, 0.0);
  for (int i = 0; i <= order; ++i) {
    double b = 0.0;
    for (int k = 0; k <= i; ++k) b += to_bern[i][k] * q.coeff(k);
    w[i] = binomial(order, i) * b;
  }
  const double scale = 1.0 + q.max_abs_coeff();
  HandelmanCertificate cert{iv, order, {}};
  for (int i = 0; i <= order; ++i) {
    double wi = w[i];
    if (wi < 0.0) {
      if (wi < -1e-13 * scale) return std::nullopt;
      wi = 0.0;
    }
    cert.weights[{i, order - i}] = wi / std::pow(h, order);
  }
  if (cert.reconstruction_error(p, margin) > kReconstructionTol) return std::nullopt;
  return cert;
}

std::optional<HandelmanCertificate> certify_nonneg_auto(const Poly& p, Interval iv,
                                                        double margin) {
  for (int boost = 4; boost <= 10; ++boost) {
    if (auto c = certify_nonneg(p, iv, p.degree() + boost, margin)) return c;
  }
  return std::nullopt;
}

std::optional<Witness> falsify_nonneg(const Poly& p, Interval iv, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("falsify_nonneg: need at least 2 points");
  Witness best{iv.a, p(iv.a)};
  for (int k = 1; k < grid_points; ++k) {
    const double t = iv.a + (iv.b - iv.a) * k / (grid_points - 1);
    const double v = p(t);
    if (v < best.value) best = {t, v};
  }
  if (best.value < 0.0) return best;
  return std::nullopt;
}

}  // namespace posdwell

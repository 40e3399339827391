#include "posdwell/encoding.hpp"

#include <algorithm>
#include <cmath>

namespace posdwell {

LinearForm LinearForm::var(int j, double c) {
  LinearForm f;
  f.terms[j] = c;
  return f;
}

LinearForm LinearForm::value(double c) {
  LinearForm f;
  f.constant = c;
  return f;
}

LinearForm& LinearForm::operator+=(const LinearForm& o) {
  constant += o.constant;
  for (const auto& [j, a] : o.terms) terms[j] += a;
  return *this;
}

LinearForm& LinearForm::operator-=(const LinearForm& o) {
  constant -= o.constant;
  for (const auto& [j, a] : o.terms) terms[j] -= a;
  return *this;
}

LinearForm& LinearForm::operator*=(double s) {
  constant *= s;
  for (auto& [j, a] : terms) a *= s;
  return *this;
}

double LinearForm::eval(const std::vector<double>& x) const {
  double v = constant;
  for (const auto& [j, a] : terms) v += a * x[j];
  return v;
}

PolyForm::PolyForm(std::vector<LinearForm> c) : c_(std::move(c)) {
  if (c_.empty()) c_.resize(1);
}

PolyForm PolyForm::from_poly(const Poly& p) {
  std::vector<LinearForm> c;
  for (double v : p.coeffs()) c.push_back(LinearForm::value(v));
  return PolyForm(std::move(c));
}

PolyForm PolyForm::derivative() const {
  if (c_.size() <= 1) return PolyForm();
  std::vector<LinearForm> d;
  for (size_t k = 1; k < c_.size(); ++k) d.push_back(static_cast<double>(k) * c_[k]);
  return PolyForm(std::move(d));
}

LinearForm PolyForm::at(double t) const {
  LinearForm acc;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
    acc *= t;
    acc += *it;
  }
  return acc;
}

PolyForm PolyForm::compose_affine(double a, double h) const {
  const Poly lin({a, h});
  PolyForm acc;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = lin * acc + PolyForm::from_form(*it);
  // keep the formal length
  std::vector<LinearForm> c = acc.c_;
  c.resize(c_.size());
  return PolyForm(std::move(c));
}

Poly PolyForm::eval(const std::vector<double>& x) const {
  std::vector<double> c;
  for (const auto& f : c_) c.push_back(f.eval(x));
  return Poly(std::move(c));
}

PolyForm& PolyForm::operator+=(const PolyForm& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
  for (size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

PolyForm& PolyForm::operator-=(const PolyForm& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
  for (size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

PolyForm operator*(const Poly& p, const PolyForm& f) {
  const auto& pc = p.coeffs();
  const size_t np = std::max<size_t>(pc.size(), 1);
  std::vector<LinearForm> r(np + f.c_.size() - 1);
  for (size_t i = 0; i < pc.size(); ++i) {
    if (pc[i] == 0.0) continue;
    for (size_t j = 0; j < f.c_.size(); ++j) r[i + j] += pc[i] * f.c_[j];
  }
  return PolyForm(std::move(r));
}

PolyForm operator*(double s, PolyForm f) {
  for (auto& c : f.c_) c *= s;
  return f;
}

int LpBuilder::var(double lo, double hi, const std::string& name) {
  return lp_.add_variable(lo, hi, name);
}

PolyForm LpBuilder::poly_var(int degree, const std::string& name, double unit) {
  if (!(unit > 0.0)) unit = 1.0;
  std::vector<LinearForm> c;
  for (int k = 0; k <= degree; ++k)
    c.push_back(std::pow(unit, -k) *
                LinearForm::var(var(-kInf, kInf, name + "_" + std::to_string(k))));
  return PolyForm(std::move(c));
}

namespace {

std::vector<std::pair<int, double>> terms_of(const LinearForm& f) {
  std::vector<std::pair<int, double>> t;
  for (const auto& [j, a] : f.terms)
    if (a != 0.0) t.push_back({j, a});
  return t;
}

}  // namespace

void LpBuilder::le(const LinearForm& f, double bound, const std::string& label) {
  lp_.add_le(terms_of(f), bound - f.constant, label);
}

void LpBuilder::ge(const LinearForm& f, double bound, const std::string& label) {
  lp_.add_ge(terms_of(f), bound - f.constant, label);
}

void LpBuilder::eq(const LinearForm& f, double value, const std::string& label) {
  lp_.add_eq(terms_of(f), value - f.constant, label);
}

void LpBuilder::nonneg_on(const PolyForm& p, Interval iv, double margin, const std::string& label) {
  if (iv.b <= iv.a) {
    ge(p.at(iv.a), margin, label);
    return;
  }
  if (enc_.kind == IntervalEncoding::Kind::Grid) {
    const int g = std::max(2, enc_.grid_points);
    for (int k = 0; k < g; ++k) {
      const double t = iv.a + (iv.b - iv.a) * k / (g - 1);
      ge(p.at(t), margin, label);
    }
    return;
  }
  const int order = p.formal_degree() + enc_.boost;
  const PolyForm q = p.compose_affine(iv.a, iv.width());
  const auto to_bern = bernstein_from_monomial(order);
  // Bernstein coefficient i of q - margin must be nonnegative; the Handelman
  // weight of s^i (1-s)^(D-i) is C(D,i) times that coefficient.
  Slot slot{label, p, iv, order, margin, {}};
  for (int i = 0; i <= order; ++i) {
    LinearForm row;
    for (int k = 0; k <= std::min(i, q.formal_degree()); ++k)
      if (to_bern[i][k] != 0.0) row += to_bern[i][k] * q.coeff(k);
    slot.rows.push_back(row);
    ge(row, margin, label);
  }
  slots_.push_back(std::move(slot));
}

std::vector<HandelmanRecord> LpBuilder::extract(const std::vector<double>& x) const {
  std::vector<HandelmanRecord> out;
  for (const auto& s : slots_) {
    HandelmanRecord rec;
    rec.label = s.label;
    rec.target = s.target.eval(x);
    rec.margin = s.margin;
    rec.cert.interval = s.iv;
    rec.cert.order = s.order;
    const double scale = std::pow(s.iv.width(), s.order);
    for (int i = 0; i <= s.order; ++i) {
      const double beta = std::max(0.0, s.rows[i].eval(x) - s.margin);
      rec.cert.weights[{i, s.order - i}] = binomial(s.order, i) * beta / scale;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace posdwell

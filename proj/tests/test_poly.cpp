#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "posdwell/lp.hpp"
#include "posdwell/poly.hpp"

using namespace posdwell;
using Catch::Approx;

namespace {

Poly random_poly(std::mt19937_64& rng, int max_degree) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> d(0, max_degree);
  std::vector<double> c(d(rng) + 1);
  for (auto& x : c) x = u(rng);
  return Poly(c);
}

double grid_min(const Poly& p, Interval iv, int points) {
  double m = INFINITY;
  for (int k = 0; k < points; ++k) m = std::min(m, p(iv.a + iv.width() * k / (points - 1)));
  return m;
}

// Feasibility of p = sum c_ij tau^i (1-tau)^j over all i + j <= D, c >= 0. Both sides
// have degree <= D, so the identity is imposed at D + 1 Chebyshev nodes instead of
// by coefficient matching.
bool full_handelman_feasible(const Poly& p, int D) {
  LinearProgram lp;
  std::vector<double> nodes(D + 1);
  for (int m = 0; m <= D; ++m) nodes[m] = 0.5 - 0.5 * std::cos(M_PI * (2 * m + 1) / (2.0 * (D + 1)));
  std::vector<std::vector<std::pair<int, double>>> rows(D + 1);
  for (int i = 0; i <= D; ++i)
    for (int j = 0; i + j <= D; ++j) {
      int v = lp.add_variable(0.0);
      for (int m = 0; m <= D; ++m) rows[m].push_back({v, std::pow(nodes[m], i) * std::pow(1 - nodes[m], j)});
    }
  for (int m = 0; m <= D; ++m) lp.add_eq(rows[m], p(nodes[m]));
  return lp_solve(lp).status == LpStatus::Optimal;
}

}  // namespace

TEST_CASE("poly_eval examples") {
  CHECK(poly_eval(Poly({1, 2, 3}), 0.0) == 1.0);
  CHECK(poly_eval(Poly({0, 1}), 7.5) == 7.5);
  CHECK(poly_eval(Poly({1, -1, 0.25}), 2.0) == Approx(0.0).margin(1e-15));
}

TEST_CASE("poly arithmetic examples") {
  CHECK(poly_mul(Poly({0, 1}), Poly({0, 1})).coeffs() == std::vector<double>{0, 0, 1});
  CHECK(poly_derivative(Poly({1, 2, 3})).coeffs() == std::vector<double>{2, 6});
  Poly p({0.5, -2, 3, 1});
  CHECK(poly_add(p, poly_scale(p, -1)).is_zero());
  CHECK(Poly({1, 2, 0, 0}).coeffs().size() == 2);
  CHECK(Poly({0, 0}).is_zero());
}

TEST_CASE("poly arithmetic consistency on random pairs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ut(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    Poly p = random_poly(rng, 6), q = random_poly(rng, 6);
    Poly pq = poly_mul(p, q), s = poly_add(p, q), d = poly_sub(p, q);
    for (int k = 0; k < 10; ++k) {
      double t = ut(rng), a = p(t), b = q(t);
      CHECK(std::abs(pq(t) - a * b) <= 1e-10 * (1 + std::abs(a * b)));
      CHECK(std::abs(s(t) - (a + b)) <= 1e-12 * (1 + std::abs(a) + std::abs(b)));
      CHECK(std::abs(d(t) - (a - b)) <= 1e-12 * (1 + std::abs(a) + std::abs(b)));
    }
  }
}

TEST_CASE("derivative matches central differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(-2.0, 2.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    Poly p = random_poly(rng, 6), dp = poly_derivative(p);
    for (int k = 0; k < 5; ++k) {
      double t = ut(rng);
      CHECK(std::abs((p(t + h) - p(t - h)) / (2 * h) - dp(t)) <= 1e-6);
    }
  }
}

TEST_CASE("compose_affine agrees with evaluation") {
  Poly p({0.3, -1, 2, 0.5});
  Poly q = p.compose_affine(0.5, 2.0);
  for (double s : {-1.0, 0.0, 0.25, 1.0}) CHECK(q(s) == Approx(p(0.5 + 2 * s)).epsilon(1e-13));
}

TEST_CASE("certify_nonneg examples") {
  auto c = certify_nonneg(Poly({1}), {0, 1}, 0);
  REQUIRE(c);
  CHECK(c->weights.at({0, 0}) == Approx(1.0).epsilon(1e-9));

  auto b = certify_nonneg(Poly({0, 1, -1}), {0, 1}, 2);
  REQUIRE(b);
  for (auto& [ij, w] : b->weights) CHECK(w == Approx(ij == std::pair{1, 1} ? 1.0 : 0.0).margin(1e-9));
  CHECK(b->reconstruction_error(Poly({0, 1, -1}), 0.0) <= kReconstructionTol);

  CHECK_THROWS_AS(certify_nonneg(Poly({1}), {1, 1}, 2), InvalidInterval);
  CHECK_THROWS_AS(certify_nonneg(Poly({1}), {2, 1}, 2), InvalidInterval);
}

TEST_CASE("Handelman order threshold for (tau - 1/2)^2 + 0.01") {
  // Bernstein coefficients of tau^2 - tau + 0.26 at order D have minimum
  // 0.01 - 1/(4D) for odd D and 0.01 - 1/(4(D-1)) for even D, so D = 25 is the
  // first order with a Handelman representation.
  Poly p({0.26, -1, 1});
  auto closed_form_min = [](int D) { return D % 2 ? 0.01 - 0.25 / D : 0.01 - 0.25 / (D - 1); };
  int first = -1;
  for (int D = 2; D <= 40 && first < 0; ++D)
    if (closed_form_min(D) >= 0) first = D;
  CHECK(first == 25);

  // The independent LP is reliable up to order 23; beyond that the basis is too
  // ill-conditioned for double precision.
  for (int D = 2; D <= 23; ++D) {
    INFO("order " << D);
    CHECK_FALSE(full_handelman_feasible(p, D));
    CHECK_FALSE(certify_nonneg(p, {0, 1}, D).has_value());
  }
  CHECK(full_handelman_feasible(p, 27));

  // At orders 25..30 the exact weights exist, but expanding them back into
  // monomials in double precision misses the 1e-9 reconstruction tolerance, so no
  // certificate may be issued.
  for (int D = 24; D <= 30; ++D) {
    auto c = certify_nonneg(p, {0, 1}, D);
    if (c) CHECK(c->reconstruction_error(p, 0.0) <= kReconstructionTol);
  }
  CHECK_FALSE(certify_nonneg_auto(p, {0, 1}).has_value());

  // With a wider gap the same shape certifies at low order.
  auto easy = certify_nonneg(Poly({0.35, -1, 1}), {0, 1}, 8);
  REQUIRE(easy);
  CHECK(easy->reconstruction_error(Poly({0.35, -1, 1}), 0.0) <= kReconstructionTol);
}

TEST_CASE("certificates on a shifted interval reconstruct the target") {
  Poly p({2.0, -3.0, 1.0});  // (tau-1)(tau-2), positive on [2.5, 4]
  auto c = certify_nonneg(p, {2.5, 4.0}, 6, 0.1);
  REQUIRE(c);
  CHECK(c->weights_nonnegative());
  CHECK(c->reconstruction_error(p, 0.1) <= kReconstructionTol);
  Poly r = c->reconstruct();
  for (double t : {2.5, 3.0, 3.7, 4.0}) CHECK(r(t) == Approx(p(t) - 0.1).margin(1e-9));
}

TEST_CASE("falsify_nonneg examples") {
  auto w = falsify_nonneg(Poly({-0.5, 1}), {0, 1}, 1001);
  REQUIRE(w);
  CHECK(w->tau == 0.0);
  CHECK(w->value == Approx(-0.5));
  CHECK_FALSE(falsify_nonneg(Poly({1}), {0, 1}, 1001));
  auto v = falsify_nonneg(Poly({-0.3, 1, -1}), {0, 1}, 1001);
  REQUIRE(v);
  CHECK(v->value < 0);
}

TEST_CASE("Handelman soundness and order monotonicity on random polynomials") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ushift(-0.05, 0.3);
  int certified = 0, refused = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Interval iv{-0.5 + 0.01 * trial, 1.0 + 0.02 * trial};
    Poly q = random_poly(rng, 5);
    Poly p = q + Poly::constant(-grid_min(q, iv, 2001) + ushift(rng));
    for (int D = std::max(1, p.degree()); D <= p.degree() + 8; ++D) {
      auto c = certify_nonneg(p, iv, D);
      if (!c) {
        ++refused;
        continue;
      }
      ++certified;
      CHECK(c->weights_nonnegative());
      CHECK(c->reconstruction_error(p, 0.0) <= kReconstructionTol);
      double slack = 1e-8 * (1 + p.max_abs_coeff());
      auto w = falsify_nonneg(p + Poly::constant(slack), iv, 10000);
      CHECK_FALSE(w.has_value());
      CHECK(certify_nonneg(p, iv, D + 1).has_value());
    }
  }
  CHECK(certified > 50);
  CHECK(refused > 10);
}

TEST_CASE("Bernstein change of basis") {
  auto M = bernstein_from_monomial(4);
  // The constant 1 has all Bernstein coefficients equal to 1.
  for (int i = 0; i <= 4; ++i) CHECK(M[i][0] == Approx(1.0));
  CHECK(binomial(6, 3) == 20.0);
  auto P = bernstein_products(3);
  // s^1 (1-s)^2 = s - 2 s^2 + s^3
  CHECK(P[1] == std::vector<double>{0, 1, -2, 1});
}

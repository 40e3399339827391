#include <catch_amalgamated.hpp>

#include <json.hpp>

#include "posdwell/cert.hpp"
#include "support.hpp"

using namespace posdwell;
using namespace testing_support;

namespace {

HybridModel constant_flow(const Matrix& A, const Matrix& J) {
  HybridModel m;
  m.n = int(A.rows());
  m.time_invariant = true;
  m.flow = [A](int, double) { return FlowMats{A, Matrix::Zero(A.rows(), 0), Matrix(0, A.rows()), Matrix(0, 0)}; };
  m.jump = [J](int, double) { return JumpMats{J, Matrix::Zero(J.rows(), 0), Matrix(0, J.rows()), Matrix(0, 0)}; };
  return m;
}

bool has_failing_family(const VerificationReport& r, const std::string& prefix) {
  for (const auto& [name, f] : r.families)
    if (name.rfind(prefix, 0) == 0 && f.worst < -kVerifySlackTol) return true;
  return false;
}

}  // namespace

TEST_CASE("constant dwell-time certificate verifies with margin") {
  auto ex2 = load_impulsive("ex2");
  auto c = analyze_constant(ex2, 0.3, 4);
  auto r = verify(c, ex2);
  CHECK(r.passed);
  CHECK(r.grid_density == 1000);
  CHECK(r.handelman_ok);
  CHECK(r.handelman_error >= 0.0);
  CHECK(r.handelman_error <= kReconstructionTol);
  // Worst slack is reported relative to the row scale, the margin is absolute.
  CHECK(r.worst_slack() >= 0.0);
  for (const auto& [name, f] : r.families) CHECK(f.rows > 0);

  auto bad = c;
  bad.gamma *= 0.9;
  auto rb = verify(bad, ex2);
  CHECK_FALSE(rb.passed);
  CHECK(rb.worst_row().find("output") != std::string::npos);
  CHECK(has_failing_family(rb, "output"));

  auto js = nlohmann::json::parse(r.to_json());
  CHECK(js["passed"] == true);
  CHECK(r.to_table().find("flow") != std::string::npos);
}

TEST_CASE("hand-built certificate violating the jump row only") {
  auto ex1 = load_impulsive("ex1");
  ex1.jumps[0].J << 1.5, 0, 0, 1.5;  // (J - I) lambda + E_d 1 > 0 for lambda = (1, 2)
  Certificate c;
  c.kind = CertificateKind::ArbitraryDT;
  c.gamma = 100.0;
  c.zeta = {{Poly::constant(1.0), Poly::constant(2.0)}};
  c.dwell = DwellTimeSpec::arbitrary();
  auto r = verify(c, ex1);
  CHECK_FALSE(r.passed);
  REQUIRE(r.families.count("jump"));
  CHECK(r.families.at("jump").worst < 0);
  CHECK(r.families.at("flow").worst > 0);
}

TEST_CASE("mismatched certificates are rejected") {
  auto ex2 = load_impulsive("ex2");
  auto c = analyze_constant(ex2, 0.3, 2);
  CHECK_THROWS_AS(verify(c, lift_switched(load_switched("ex5"))), Mismatch);
  CHECK_THROWS_AS(verify(c, load_switched("ex5")), Mismatch);
  auto wrong_kind = c;
  wrong_kind.kind = CertificateKind::ArbitraryDT;
  CHECK_THROWS_AS(verify(wrong_kind, ex2), Mismatch);
}

TEST_CASE("tampered Handelman weights are caught") {
  auto ex2 = load_impulsive("ex2");
  auto c = analyze_constant(ex2, 0.3, 2);
  REQUIRE_FALSE(c.handelman.empty());
  auto t = c;
  auto& w = t.handelman[0].cert.weights.begin()->second;
  w += 0.5;
  auto r = verify(t, ex2);
  CHECK_FALSE(r.handelman_ok);
  CHECK_FALSE(r.passed);
  auto n = c;
  n.handelman[0].cert.weights.begin()->second = -1.0;
  CHECK_FALSE(check_handelman(n.handelman).has_value());
}

TEST_CASE("transition matrix") {
  Matrix A(2, 2);
  A << 0, 1, 0, 0;
  auto m = constant_flow(A, Matrix::Identity(2, 2));
  Matrix P = transition_matrix(m, 0.3, 1.7);
  Matrix expect = Matrix::Identity(2, 2) + A * 1.4;
  CHECK((P - expect).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(transition_matrix(m, 0.5, 0.5) == Matrix::Identity(2, 2));

  Matrix J(2, 2);
  J << 0.5, 2, -1, 3;
  auto z = constant_flow(Matrix::Zero(2, 2), J);
  CHECK(transition_matrix(z, 0.0, 1.0, {0.5}) == J);
  CHECK(transition_matrix(z, 0.0, 1.0, {0.25, 0.5}) == J * J);
}

TEST_CASE("transition matrix semigroup property on timer-dependent flows") {
  auto ex2 = open_loop(load_impulsive("ex2"));
  auto ex3 = open_loop(load_impulsive("ex3"), 2.0);
  for (const auto* m : {&ex2, &ex3}) {
    for (auto [r, s, t] : {std::tuple{0.0, 0.2, 0.5}, {0.1, 0.35, 0.4}, {0.0, 1.5, 3.0}}) {
      Matrix Pts = transition_matrix(*m, s, t, {}, 1e-3, 0, 0, s);
      Matrix Psr = transition_matrix(*m, r, s, {}, 1e-3, 0, 0, r);
      Matrix Ptr = transition_matrix(*m, r, t, {}, 1e-3, 0, 0, r);
      CHECK((Pts * Psr - Ptr).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("grid density does not change the verdict") {
  auto ex2 = load_impulsive("ex2");
  auto ex1 = load_impulsive("ex1");
  std::vector<std::pair<Certificate, const ImpulsiveSystem*>> certs = {
      {analyze_constant(ex2, 0.5, 4), &ex2},
      {analyze_range(ex2, 0.3, 0.5, 4), &ex2},
      {analyze_minimum(ex1, 1.0, 4), &ex1},
  };
  for (auto& [c, s] : certs) {
    CHECK(verify(c, *s, 1000).passed == verify(c, *s, 10000).passed);
    auto bad = c;
    bad.gamma *= 0.9;
    CHECK(verify(bad, *s, 1000).passed == verify(bad, *s, 10000).passed);
  }
}

TEST_CASE("integral-form conditions hold for analysis certificates") {
  auto ex2 = load_impulsive("ex2");
  auto c = analyze_constant(ex2, 0.3, 4);
  auto d = cross_check_discrete(c, ex2);
  CHECK(d.passed);
  CHECK(d.phi_residual >= 0.0);
  auto bad = c;
  bad.gamma *= 0.9;
  CHECK_FALSE(cross_check_discrete(bad, ex2).passed);

  auto ex1 = load_impulsive("ex1");
  auto m = analyze_minimum(ex1, 1.0, 4);
  auto dm = cross_check_discrete(m, ex1);
  CHECK(dm.passed);
  REQUIRE(dm.families.count("discrete_jump"));
  CHECK(dm.families.at("discrete_jump").rows >= 11 * 2);
  auto mbad = m;
  mbad.gamma *= 0.9;
  CHECK_FALSE(cross_check_discrete(mbad, ex1).passed);

  auto ex5 = load_switched("ex5");
  auto s = analyze_switched_min(ex5, 0.1, 4);
  CHECK(cross_check_discrete(s, ex5).passed);
}

#include <catch_amalgamated.hpp>

#include "posdwell/cert.hpp"
#include "posdwell/sim.hpp"
#include "posdwell/synthesis.hpp"
#include "support.hpp"

using namespace posdwell;
using namespace testing_support;
using Catch::Approx;

namespace {

bool kd_close(const Matrix& K, double a, double b, double tol = 0.05) {
  return K.rows() == 1 && K.cols() == 2 && std::abs(K(0, 0) - a) <= tol && std::abs(K(0, 1) - b) <= tol;
}

void check_closed_loop(const ControllerRealization& k, const ImpulsiveSystem& sys, int runs) {
  auto rep = verify(k, sys);
  INFO(rep.to_table());
  CHECK(rep.passed);
  auto m = closed_loop(sys, k);
  GainOptions o;
  o.runs = runs;
  CHECK(estimate_gain(m, SequenceGen::for_dwell(k.dwell, 1), o) <= k.gamma + 1e-6);
  auto d = cross_check_discrete(closed_loop_certificate(k), m);
  CHECK(d.passed);
}

// Stabilization scenario: x0 = (4, 2), disturbances off after t = 10.
double decay_ratio(const ImpulsiveSystem& sys, const ControllerRealization& k) {
  Inputs in = generate_inputs(InputKind::Sine, 3);
  Signal wc = in.wc, wd = in.wd;
  in.wc = [wc](int c, double t, long j) { return t < 10 ? wc(c, t, j) : 0.0; };
  in.wd = [wd](int c, double t, long j) { return t < 10 ? wd(c, t, j) : 0.0; };
  Vector x0(2);
  x0 << 4, 2;
  SimOptions opt;
  opt.horizon = 20.0;
  auto tr = simulate(sys, SequenceGen::for_dwell(k.dwell, 5), in, k, x0, opt);
  return tr.states.back().cwiseAbs().maxCoeff() / 4.0;
}

}  // namespace

TEST_CASE("constant dwell-time synthesis") {
  auto ex4 = load_impulsive("ex4");
  auto k1 = synthesize(ex4, DwellTimeSpec::constant(0.1), 2);
  CHECK(k1.kind == ControllerKind::ConstantDT);
  CHECK(k1.gamma <= 1.10 * 0.5095);
  Matrix Kd = realize_jump_gain(k1, 0.1);
  INFO(Kd);
  CHECK(kd_close(Kd, -1, 0));
  check_closed_loop(k1, ex4, 20);
  CHECK(decay_ratio(ex4, k1) <= 1e-2);

  for (const auto& x : k1.X[0])
    for (int s = 0; s <= 100; ++s) CHECK(x(0.1 * s / 100) >= k1.x_min - 1e-9);
}

TEST_CASE("range dwell-time synthesis, both variants") {
  auto ex4 = load_impulsive("ex4");
  auto k = synthesize(ex4, DwellTimeSpec::range(0.1, 0.3), 2);
  CHECK(k.kind == ControllerKind::RangeDT);
  CHECK(k.gamma <= 1.10 * 0.69199);
  check_closed_loop(k, ex4, 20);

  SynthesisOptions o;
  o.fixed_kd = true;
  auto f = synthesize(ex4, DwellTimeSpec::range(0.1, 0.3), 2, o);
  CHECK(f.kind == ControllerKind::RangeDT_FixedKd);
  CHECK(f.gamma <= 1.10 * 0.69199);
  CHECK(f.M.size() == 2);
  Matrix K1 = realize_jump_gain(f, 0.1), K3 = realize_jump_gain(f, 0.3);
  CHECK((K1 - K3).cwiseAbs().maxCoeff() <= 1e-12);
  check_closed_loop(f, ex4, 20);
  CHECK(decay_ratio(ex4, f) <= 1e-2);
}

TEST_CASE("minimum dwell-time synthesis on the second stabilization example") {
  auto ex4b = load_impulsive("ex4b");
  auto k = synthesize(ex4b, DwellTimeSpec::minimum(0.2), 2);
  CHECK(k.kind == ControllerKind::MinimumDT);
  CHECK(k.gamma <= 1.10 * 0.84401);
  check_closed_loop(k, ex4b, 20);
  CHECK(decay_ratio(ex4b, k) <= 1e-2);
  // Gains freeze beyond the minimum dwell time.
  CHECK(realize_gain(k, 0.5) == realize_gain(k, 0.2));
}

TEST_CASE("switched synthesis") {
  auto ex4 = load_impulsive("ex4");
  SwitchedSystem sw;
  sw.n = 2;
  sw.m = 1;
  sw.p = 1;
  sw.q = 1;
  // The second state is not actuated, so both modes need it stable on its own.
  Matrix A1 = ex4.A.eval(0);
  A1(1, 1) = -1.0;
  Mode m{PolyMatrix::constant(A1), ex4.Bc, ex4.Ec, ex4.Cc, ex4.Dc, ex4.Fc};
  Mode m2 = m;
  Matrix A2 = A1;
  A2(1, 0) = 0.5;
  m2.A = PolyMatrix::constant(A2);
  sw.modes = {m, m2};
  auto k = synthesize_switched(sw, 0.2, 2);
  CHECK(k.kind == ControllerKind::SwitchedMinDT);
  CHECK(k.num_modes() == 2);
  auto rep = verify(k, sw);
  INFO(rep.to_table());
  CHECK(rep.passed);

  auto cl = closed_loop(sw, k);
  Vector x0(2);
  x0 << 4, 2;
  Inputs zero = generate_inputs(InputKind::Zero);
  SimOptions opt;
  opt.horizon = 20.0;
  auto tr = simulate(cl, SequenceGen::min_plus_exp(0.2, 3), zero, x0, opt);
  CHECK(tr.states.back().cwiseAbs().maxCoeff() <= 1e-2 * 4);
  CHECK(tr.min_state >= -1e-9);
  GainOptions go;
  go.runs = 20;
  CHECK(estimate_gain(cl, SequenceGen::min_plus_exp(0.2, 1), go) <= k.gamma + 1e-6);

  SwitchedSystem one = sw;
  one.modes.resize(1);
  CHECK_THROWS(synthesize_switched(one, 0.2, 2));

  // Unstable row without actuation.
  SwitchedSystem bad = sw;
  Matrix Ab = A2;
  Ab(1, 1) = 1.0;
  bad.modes[1].A = PolyMatrix::constant(Ab);
  CHECK_THROWS_AS(synthesize_switched(bad, 0.2, 2), Infeasible);
}

TEST_CASE("realize_gain") {
  ControllerRealization c;
  c.kind = ControllerKind::ConstantDT;
  c.dwell = DwellTimeSpec::constant(1.0);
  c.X = {{Poly::constant(1.0), Poly::constant(1.0)}};
  PolyMatrix U(2, 2);
  U(0, 0) = Poly({1, 2});
  U(1, 0) = Poly({0, 0, 1});
  U(1, 1) = Poly({-3});
  c.Uc = {U};
  c.Ud = PolyMatrix::constant(Matrix::Zero(1, 2));
  for (double t : {0.0, 0.3, 1.0}) CHECK(realize_gain(c, t) == U.eval(t));

  c.X = {{Poly({1.0224, 0.1}), Poly({0.3593})}};
  Matrix K = realize_gain(c, 0.0);
  CHECK(K(0, 0) == Approx(1.0 / 1.0224));
  CHECK(K(1, 1) == Approx(-3.0 / 0.3593));

  c.X = {{Poly({-1.0}), Poly({1.0})}};
  CHECK_THROWS_AS(realize_gain(c, 0.0), IllPosed);
}

TEST_CASE("controller JSON round trip") {
  auto ex4 = load_impulsive("ex4");
  auto k = synthesize(ex4, DwellTimeSpec::range(0.1, 0.3), 2);
  auto back = controller_from_json(controller_to_json(k));
  CHECK(controller_to_json(back) == controller_to_json(k));
  CHECK(realize_gain(back, 0.17) == realize_gain(k, 0.17));
  CHECK(realize_jump_gain(back, 0.21) == realize_jump_gain(k, 0.21));
}

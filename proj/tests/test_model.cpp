#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "posdwell/model.hpp"
#include "posdwell/sim.hpp"
#include <json.hpp>
#include "support.hpp"

using namespace posdwell;
using testing_support::load_impulsive;
using testing_support::load_switched;

namespace {

Poly random_poly(std::mt19937_64& rng, int degree) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(degree + 1);
  for (auto& x : c) x = u(rng);
  return Poly(c);
}

ImpulsiveSystem random_system(std::mt19937_64& rng, bool control = true) {
  auto s = make_system(3, control, 2, control, 1, 2, 1);
  auto fill = [&](PolyMatrix& M) {
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j) M(i, j) = random_poly(rng, 3);
  };
  fill(s.A); fill(s.Bc); fill(s.Ec); fill(s.Cc); fill(s.Dc); fill(s.Fc);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto& j = s.jumps[0];
  for (Matrix* M : {&j.J, &j.Bd, &j.Ed, &j.Cd, &j.Dd, &j.Fd})
    for (int k = 0; k < M->size(); ++k) M->data()[k] = u(rng) / 3.0;
  return s;
}

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("posdwell_model_" + name)).string();
}

}  // namespace

TEST_CASE("example 1 loads and is positive") {
  auto s = load_impulsive("ex1");
  CHECK(s.n == 2);
  CHECK(s.A.eval(0)(1, 0) == 1.0);
  auto r = check_positive(s, 1.0);
  CHECK(r.positive);
  CHECK(r.violations.empty());
}

TEST_CASE("negative off-diagonal entry is reported") {
  auto s = make_system(2, 0, 1, 0, 1, 1, 1);
  Matrix A(2, 2);
  A << -1, -1, 0, -1;
  s.A = PolyMatrix::constant(A);
  auto r = check_positive(s, 1.0);
  CHECK_FALSE(r.positive);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].matrix == "A");
  CHECK(r.violations[0].row == 0);
  CHECK(r.violations[0].col == 1);
  CHECK_THROWS_AS(check_positive(s, 0.0), InvalidDomain);
}

TEST_CASE("timer-dependent entry negative only late in the interval") {
  auto s = make_system(2, 0, 1, 0, 1, 1, 1);
  s.A(0, 0) = Poly({-1});
  s.A(1, 1) = Poly({-1});
  s.A(0, 1) = Poly({0.5, -1});  // negative for tau > 0.5
  CHECK(check_positive(s, 0.4).positive);
  auto r = check_positive(s, 1.0);
  CHECK_FALSE(r.positive);
  REQUIRE_FALSE(r.violations.empty());
  CHECK(r.violations[0].tau > 0.5);
}

TEST_CASE("jump maps are checked") {
  auto s = load_impulsive("ex1");
  s.jumps[0].Ed(1, 0) = -0.1;
  auto r = check_positive(s, 1.0);
  CHECK_FALSE(r.positive);
  CHECK(r.violations[0].jump == 0);
}

TEST_CASE("lifting a two-mode system") {
  auto sw = load_switched("ex5");
  auto l = lift_switched(sw);
  CHECK(l.n == 4);
  REQUIRE(l.jumps.size() == 2);
  Matrix A = l.A.eval(0);
  Matrix expect = Matrix::Zero(4, 4);
  expect.block(0, 0, 2, 2) << -1, 0, 1, -2;
  expect.block(2, 2, 2, 2) << -1, 1, 1, -6;
  CHECK(A == expect);
  for (const auto& j : l.jumps) {
    CHECK(j.J.rows() == 4);
    CHECK((j.J.array() * (j.J.array() - 1.0)).abs().maxCoeff() == 0.0);
    CHECK(j.J.sum() == 2.0);
    CHECK(j.J.diagonal().sum() == 0.0);
  }
  CHECK(check_positive(l, 0.1).positive);
  CHECK(check_positive(l, 0.1).violations.empty());

  SwitchedSystem one = sw;
  one.modes.resize(1);
  CHECK_THROWS(lift_switched(one));
}

TEST_CASE("adjoint transposes and swaps channels") {
  auto s = load_impulsive("ex1");
  auto a = adjoint(s);
  CHECK(a.backward_time);
  CHECK(a.pc == s.qc);
  CHECK(a.qc == s.pc);
  CHECK(a.A.eval(0) == s.A.eval(0).transpose());
  CHECK(a.Ec.eval(0) == s.Cc.eval(0).transpose());
  CHECK(a.Cc.eval(0) == s.Ec.eval(0).transpose());
  CHECK(a.jumps[0].J == s.jumps[0].J.transpose());
  CHECK(a.jumps[0].Ed == s.jumps[0].Cd.transpose());

  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    auto r = random_system(rng, false);
    auto rr = adjoint(adjoint(r));
    CHECK(system_to_json(rr) == system_to_json(r));
    CHECK_FALSE(rr.backward_time);
  }
  auto l = lift_switched(load_switched("ex5"));
  CHECK_THROWS_AS(adjoint(l), Unsupported);
}

TEST_CASE("serialization round trip is bit exact") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 5; ++k) {
    auto s = random_system(rng);
    auto path = temp_file("rt.json");
    save_system(s, path);
    auto back = std::get<ImpulsiveSystem>(load_system(path));
    CHECK(system_to_json(back) == system_to_json(s));
    for (int i = 0; i < s.n; ++i)
      for (int j = 0; j < s.n; ++j) CHECK(back.A(i, j).coeffs() == s.A(i, j).coeffs());
    CHECK(back.jumps[0].J == s.jumps[0].J);
    std::remove(path.c_str());
  }
  auto sw = load_switched("ex5");
  auto back = std::get<SwitchedSystem>(parse_system(system_to_json(sw)));
  CHECK(system_to_json(back) == system_to_json(sw));
}

TEST_CASE("malformed system files") {
  auto j = nlohmann::json::parse(system_to_json(load_impulsive("ex1")));
  auto nonsquare = j;
  nonsquare["A"].push_back(nonsquare["A"][0]);
  CHECK_THROWS_AS(parse_system(nonsquare.dump()), DimensionMismatch);
  auto wrong_n = j;
  wrong_n["n"] = 3;
  CHECK_THROWS_AS(parse_system(wrong_n.dump()), DimensionMismatch);
  CHECK_THROWS_AS(parse_system("{\"n\": 2,"), ParseError);
  auto missing = j;
  missing.erase("n");
  CHECK_THROWS_AS(parse_system(missing.dump()), ParseError);
  auto wrong_type = j;
  wrong_type["J"][0][0] = "one";
  CHECK_THROWS_AS(parse_system(wrong_type.dump()), ParseError);
  CHECK_THROWS_AS(load_system("/nonexistent/system.json"), ParseError);
}

TEST_CASE("positive systems keep nonnegative trajectories") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  struct Case {
    ImpulsiveSystem sys;
    SequenceGen gen;
  };
  std::vector<Case> cases = {
      {load_impulsive("ex1"), SequenceGen::min_plus_exp(1.0)},
      {load_impulsive("ex2"), SequenceGen::uniform_range(0.3, 0.5)},
      {load_impulsive("ex3"), SequenceGen::exact(2.0)},
      {lift_switched(load_switched("ex5")), SequenceGen::min_plus_exp(0.1)},
  };
  for (auto& c : cases) {
    REQUIRE(check_positive(c.sys, c.gen.t_max > 10 ? 10.0 : c.gen.t_max).positive);
    auto m = open_loop_for(c.sys, c.gen.spec());
    for (int run = 0; run < 50; ++run) {
      Vector x0(c.sys.n);
      for (int i = 0; i < c.sys.n; ++i) x0[i] = u(rng);
      SequenceGen g = c.gen;
      g.seed = run;
      auto kind = run % 3 == 0 ? InputKind::Sine : run % 3 == 1 ? InputKind::UniformRandom : InputKind::Zero;
      SimOptions opt;
      opt.horizon = 5.0;
      opt.seed = run;
      opt.record = false;
      opt.self_check = false;
      auto tr = simulate(m, g, generate_inputs(kind, run), x0, opt);
      CHECK(tr.min_state >= -1e-9);
      CHECK(tr.min_output >= -1e-9);
    }
  }
}

TEST_CASE("dwell-time strings") {
  CHECK(DwellTimeSpec::parse("arbitrary").kind == DwellTimeSpec::Kind::Arbitrary);
  auto c = DwellTimeSpec::parse("constant:0.3");
  CHECK(c.kind == DwellTimeSpec::Kind::Constant);
  CHECK(c.t_min == 0.3);
  auto r = DwellTimeSpec::parse("range:0.1:0.3");
  CHECK(r.t_max == 0.3);
  CHECK(DwellTimeSpec::parse(r.to_string()).t_min == r.t_min);
  CHECK(DwellTimeSpec::minimum(2.0).clamp() == 2.0);
  CHECK_FALSE(DwellTimeSpec::constant(2.0).clamp());
  CHECK(DwellTimeSpec::minimum(2.0).admits(5.0));
  CHECK_FALSE(DwellTimeSpec::range(1, 2).admits(2.5));
  for (std::string bad : {"constant:-1", "range:0.5:0.3", "minimum", "often", "constant:abc"})
    CHECK_THROWS(DwellTimeSpec::parse(bad));
}

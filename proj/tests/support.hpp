#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>

#include "posdwell/model.hpp"

namespace testing_support {

using namespace posdwell;

inline std::string data_path(const std::string& name) {
  return std::string(POSDWELL_DATA_DIR) + "/" + name + ".json";
}

inline ImpulsiveSystem load_impulsive(const std::string& name) {
  return std::get<ImpulsiveSystem>(load_system(data_path(name)));
}

inline SwitchedSystem load_switched(const std::string& name) {
  return std::get<SwitchedSystem>(load_system(data_path(name)));
}

/// Diagonally dominant Metzler A (hence Hurwitz) with nonnegative E, C, F.
inline ImpulsiveSystem random_metzler_lti(std::mt19937_64& rng, int n, int p, int q) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto s = make_system(n, 0, p, 0, 0, q, 0);
  Matrix A(n, n), E(n, p), C(q, n), F(q, p);
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (i != j) off += (A(i, j) = u(rng));
    A(i, i) = -(off + 0.2 + u(rng));
  }
  for (int i = 0; i < E.size(); ++i) E.data()[i] = u(rng);
  for (int i = 0; i < C.size(); ++i) C.data()[i] = u(rng);
  for (int i = 0; i < F.size(); ++i) F.data()[i] = 0.5 * u(rng);
  s.A = PolyMatrix::constant(A);
  s.Ec = PolyMatrix::constant(E);
  s.Cc = PolyMatrix::constant(C);
  s.Fc = PolyMatrix::constant(F);
  s.jumps[0].J = Matrix::Identity(n, n);
  return s;
}

/// Independent dense-solve oracle for the L-infinity gain of a positive LTI system.
inline double linf_oracle(const Matrix& A, const Matrix& E, const Matrix& C, const Matrix& F) {
  Matrix G = -C * A.partialPivLu().solve(E) + F;
  return G.rowwise().sum().maxCoeff();
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

}  // namespace testing_support

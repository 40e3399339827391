#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "posdwell/poly.hpp"

namespace posdwell {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Dense matrix of polynomials in the timer.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(int rows, int cols) : rows_(rows), cols_(cols), e_(size_t(rows) * cols) {}
  static PolyMatrix constant(const Matrix& m);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Poly& operator()(int i, int j) { return e_[size_t(i) * cols_ + j]; }
  const Poly& operator()(int i, int j) const { return e_[size_t(i) * cols_ + j]; }

  Matrix eval(double t) const;
  PolyMatrix transpose() const;
  int max_degree() const;
  bool is_constant() const { return max_degree() == 0; }
  double max_abs_coeff() const;
  bool operator==(const PolyMatrix& o) const = default;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<Poly> e_;
};

struct JumpMap {
  Matrix J, Bd, Ed, Cd, Dd, Fd;
  bool operator==(const JumpMap& o) const;
};

/// Flow matrices evaluated at one timer value.
struct FlowAt {
  Matrix A, Bc, Ec, Cc, Dc, Fc;
};

struct ImpulsiveSystem {
  int n = 0, mc = 0, pc = 0, md = 0, pd = 0, qc = 0, qd = 0;
  PolyMatrix A, Bc, Ec, Cc, Dc, Fc;
  std::vector<JumpMap> jumps;
  /// Set on systems produced by adjoint(): the operator runs backward in time.
  bool backward_time = false;

  /// Throws DimensionMismatch if any matrix disagrees with the dimension tuple.
  void validate() const;
  /// Evaluates the flow matrices, freezing the timer at clamp when given.
  FlowAt flow(double tau, std::optional<double> clamp = std::nullopt) const;
  int max_degree() const;
  bool is_constant() const { return max_degree() == 0; }
  /// Largest absolute coefficient across all matrices (at least 1).
  double data_scale() const;
};

/// Zero-initialised system with the given dimensions and one zero jump map.
ImpulsiveSystem make_system(int n, int mc, int pc, int md, int pd, int qc, int qd);

struct Mode {
  PolyMatrix A, B, E, C, D, F;
};

struct SwitchedSystem {
  int n = 0, m = 0, p = 0, q = 0;
  std::vector<Mode> modes;

  int num_modes() const { return static_cast<int>(modes.size()); }
  void validate() const;
  int max_degree() const;
  double data_scale() const;
};

struct DwellTimeSpec {
  enum class Kind { Arbitrary, Constant, Minimum, Range };
  Kind kind = Kind::Arbitrary;
  double t_min = 0.0;
  double t_max = 0.0;

  static DwellTimeSpec arbitrary() { return {}; }
  static DwellTimeSpec constant(double T) { return {Kind::Constant, T, T}; }
  static DwellTimeSpec minimum(double T) {
    return {Kind::Minimum, T, std::numeric_limits<double>::infinity()};
  }
  static DwellTimeSpec range(double lo, double hi) { return {Kind::Range, lo, hi}; }

  /// Parses `arbitrary`, `constant:<T>`, `minimum:<T>`, `range:<Tmin>:<Tmax>`.
  static DwellTimeSpec parse(const std::string& s);
  std::string to_string() const;
  void validate() const;
  /// Timer value at which matrices freeze (minimum dwell-time only).
  std::optional<double> clamp() const;
  bool admits(double T) const;
};

struct PositivityViolation {
  std::string matrix;
  int row = 0, col = 0;
  int jump = -1;
  double tau = 0.0;
  double value = 0.0;
};

struct PositivityReport {
  bool positive = true;
  std::vector<PositivityViolation> violations;
  /// Entries that are nonnegative on the falsifier grid but carry no certificate.
  std::vector<PositivityViolation> uncertified;
};

class InvalidDomain : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

PositivityReport check_positive(const ImpulsiveSystem& sys, double T);

ImpulsiveSystem lift_switched(const SwitchedSystem& sw);

ImpulsiveSystem adjoint(const ImpulsiveSystem& sys);

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using AnySystem = std::variant<ImpulsiveSystem, SwitchedSystem>;

AnySystem load_system(const std::string& path);
AnySystem parse_system(const std::string& json_text);
void save_system(const ImpulsiveSystem& sys, const std::string& path);
void save_system(const SwitchedSystem& sys, const std::string& path);
std::string system_to_json(const ImpulsiveSystem& sys);
std::string system_to_json(const SwitchedSystem& sys);

}  // namespace posdwell

#include "posdwell/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "json_util.hpp"
#include <sstream>

namespace posdwell {

using json = nlohmann::ordered_json;

PolyMatrix PolyMatrix::constant(const Matrix& m) {
  PolyMatrix pm(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < pm.rows(); ++i)
    for (int j = 0; j < pm.cols(); ++j) pm(i, j) = Poly::constant(m(i, j));
  return pm;
}

Matrix PolyMatrix::eval(double t) const {
  Matrix m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j)(t);
  return m;
}

PolyMatrix PolyMatrix::transpose() const {
  PolyMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

int PolyMatrix::max_degree() const {
  int d = 0;
  for (const auto& p : e_) d = std::max(d, p.degree());
  return d;
}

double PolyMatrix::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& p : e_) m = std::max(m, p.max_abs_coeff());
  return m;
}

bool JumpMap::operator==(const JumpMap& o) const {
  auto same = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(J, o.J) && same(Bd, o.Bd) && same(Ed, o.Ed) && same(Cd, o.Cd) &&
         same(Dd, o.Dd) && same(Fd, o.Fd);
}

namespace {

void expect_dims(const std::string& name, int r, int c, int er, int ec) {
  if (r != er || c != ec) {
    std::ostringstream os;
    os << name << ": expected " << er << "x" << ec << ", got " << r << "x" << c;
    throw DimensionMismatch(os.str());
  }
}

void expect_dims(const std::string& name, const PolyMatrix& m, int er, int ec) {
  expect_dims(name, m.rows(), m.cols(), er, ec);
}

void expect_dims(const std::string& name, const Matrix& m, int er, int ec) {
  expect_dims(name, static_cast<int>(m.rows()), static_cast<int>(m.cols()), er, ec);
}

}  // namespace

void ImpulsiveSystem::validate() const {
  if (n <= 0) throw DimensionMismatch("n must be positive");
  if (mc < 0 || pc < 0 || md < 0 || pd < 0 || qc < 0 || qd < 0)
    throw DimensionMismatch("dimensions must be nonnegative");
  expect_dims("A", A, n, n);
  expect_dims("Bc", Bc, n, mc);
  expect_dims("Ec", Ec, n, pc);
  expect_dims("Cc", Cc, qc, n);
  expect_dims("Dc", Dc, qc, mc);
  expect_dims("Fc", Fc, qc, pc);
  if (jumps.empty()) throw DimensionMismatch("at least one jump map is required");
  for (size_t k = 0; k < jumps.size(); ++k) {
    const auto& j = jumps[k];
    const std::string s = jumps.size() > 1 ? "[" + std::to_string(k) + "]" : "";
    expect_dims("J" + s, j.J, n, n);
    expect_dims("Bd" + s, j.Bd, n, md);
    expect_dims("Ed" + s, j.Ed, n, pd);
    expect_dims("Cd" + s, j.Cd, qd, n);
    expect_dims("Dd" + s, j.Dd, qd, md);
    expect_dims("Fd" + s, j.Fd, qd, pd);
  }
}

FlowAt ImpulsiveSystem::flow(double tau, std::optional<double> clamp) const {
  const double t = clamp ? std::min(tau, *clamp) : tau;
  return {A.eval(t), Bc.eval(t), Ec.eval(t), Cc.eval(t), Dc.eval(t), Fc.eval(t)};
}

int ImpulsiveSystem::max_degree() const {
  return std::max({A.max_degree(), Bc.max_degree(), Ec.max_degree(), Cc.max_degree(),
                   Dc.max_degree(), Fc.max_degree()});
}

double ImpulsiveSystem::data_scale() const {
  double s = std::max({1.0, A.max_abs_coeff(), Bc.max_abs_coeff(), Ec.max_abs_coeff(),
                       Cc.max_abs_coeff(), Dc.max_abs_coeff(), Fc.max_abs_coeff()});
  for (const auto& j : jumps)
    for (const Matrix* m : {&j.J, &j.Bd, &j.Ed, &j.Cd, &j.Dd, &j.Fd})
      if (m->size() > 0) s = std::max(s, m->cwiseAbs().maxCoeff());
  return s;
}

ImpulsiveSystem make_system(int n, int mc, int pc, int md, int pd, int qc, int qd) {
  ImpulsiveSystem s;
  s.n = n, s.mc = mc, s.pc = pc, s.md = md, s.pd = pd, s.qc = qc, s.qd = qd;
  s.A = PolyMatrix(n, n);
  s.Bc = PolyMatrix(n, mc);
  s.Ec = PolyMatrix(n, pc);
  s.Cc = PolyMatrix(qc, n);
  s.Dc = PolyMatrix(qc, mc);
  s.Fc = PolyMatrix(qc, pc);
  s.jumps.push_back({Matrix::Zero(n, n), Matrix::Zero(n, md), Matrix::Zero(n, pd),
                     Matrix::Zero(qd, n), Matrix::Zero(qd, md), Matrix::Zero(qd, pd)});
  return s;
}

void SwitchedSystem::validate() const {
  if (modes.empty()) throw DimensionMismatch("switched system needs at least one mode");
  if (n <= 0) throw DimensionMismatch("n must be positive");
  for (size_t i = 0; i < modes.size(); ++i) {
    const auto& md = modes[i];
    const std::string s = "modes[" + std::to_string(i) + "].";
    expect_dims(s + "A", md.A, n, n);
    expect_dims(s + "B", md.B, n, m);
    expect_dims(s + "E", md.E, n, p);
    expect_dims(s + "C", md.C, q, n);
    expect_dims(s + "D", md.D, q, m);
    expect_dims(s + "F", md.F, q, p);
  }
}

int SwitchedSystem::max_degree() const {
  int d = 0;
  for (const auto& md : modes)
    d = std::max({d, md.A.max_degree(), md.B.max_degree(), md.E.max_degree(),
                  md.C.max_degree(), md.D.max_degree(), md.F.max_degree()});
  return d;
}

double SwitchedSystem::data_scale() const {
  double s = 1.0;
  for (const auto& md : modes)
    s = std::max({s, md.A.max_abs_coeff(), md.B.max_abs_coeff(), md.E.max_abs_coeff(),
                  md.C.max_abs_coeff(), md.D.max_abs_coeff(), md.F.max_abs_coeff()});
  return s;
}

DwellTimeSpec DwellTimeSpec::parse(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  auto num = [&](const std::string& t) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != t.size()) throw ParseError("dwell: not a number: '" + t + "'");
    return v;
  };
  DwellTimeSpec d;
  if (parts.size() == 1 && parts[0] == "arbitrary") {
    d = arbitrary();
  } else if (parts.size() == 2 && parts[0] == "constant") {
    d = constant(num(parts[1]));
  } else if (parts.size() == 2 && parts[0] == "minimum") {
    d = minimum(num(parts[1]));
  } else if (parts.size() == 3 && parts[0] == "range") {
    d = range(num(parts[1]), num(parts[2]));
  } else {
    throw ParseError("dwell: expected arbitrary | constant:<T> | minimum:<T> | "
                     "range:<Tmin>:<Tmax>, got '" + s + "'");
  }
  d.validate();
  return d;
}

std::string DwellTimeSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::Arbitrary: os << "arbitrary"; break;
    case Kind::Constant: os << "constant:" << t_min; break;
    case Kind::Minimum: os << "minimum:" << t_min; break;
    case Kind::Range: os << "range:" << t_min << ":" << t_max; break;
  }
  return os.str();
}

void DwellTimeSpec::validate() const {
  if (kind == Kind::Arbitrary) return;
  if (!(t_min > 0.0) || !std::isfinite(t_min))
    throw ParseError("dwell: time must be positive and finite");
  if (kind == Kind::Range && !(t_min <= t_max && std::isfinite(t_max)))
    throw ParseError("dwell: range requires Tmin <= Tmax < inf");
}

std::optional<double> DwellTimeSpec::clamp() const {
  if (kind == Kind::Minimum) return t_min;
  return std::nullopt;
}

bool DwellTimeSpec::admits(double T) const {
  switch (kind) {
    case Kind::Arbitrary: return T > 0.0;
    case Kind::Constant: return T == t_min;
    case Kind::Minimum: return T >= t_min;
    case Kind::Range: return T >= t_min && T <= t_max;
  }
  return false;
}

PositivityReport check_positive(const ImpulsiveSystem& sys, double T) {
  if (!(T > 0.0)) throw InvalidDomain("check_positive: domain end must be positive");
  sys.validate();
  PositivityReport rep;
  const Interval iv{0.0, T};
  auto check_poly = [&](const std::string& name, const Poly& p, int i, int j) {
    if (p.degree() == 0) {
      if (p.coeff(0) < 0.0) rep.violations.push_back({name, i, j, -1, 0.0, p.coeff(0)});
      return;
    }
    if (certify_nonneg_auto(p, iv, 0.0)) return;
    if (auto w = falsify_nonneg(p, iv, 10000))
      rep.violations.push_back({name, i, j, -1, w->tau, w->value});
    else
      rep.uncertified.push_back({name, i, j, -1, 0.0, 0.0});
  };
  auto check_pm = [&](const std::string& name, const PolyMatrix& m, bool skip_diag) {
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j)
        if (!(skip_diag && i == j)) check_poly(name, m(i, j), i, j);
  };
  check_pm("A", sys.A, true);
  check_pm("Ec", sys.Ec, false);
  check_pm("Cc", sys.Cc, false);
  check_pm("Fc", sys.Fc, false);
  for (size_t k = 0; k < sys.jumps.size(); ++k) {
    const auto& jm = sys.jumps[k];
    const std::pair<const char*, const Matrix*> mats[] = {
        {"J", &jm.J}, {"Ed", &jm.Ed}, {"Cd", &jm.Cd}, {"Fd", &jm.Fd}};
    for (const auto& [name, m] : mats)
      for (int i = 0; i < m->rows(); ++i)
        for (int j = 0; j < m->cols(); ++j)
          if ((*m)(i, j) < 0.0)
            rep.violations.push_back({name, i, j, static_cast<int>(k), 0.0, (*m)(i, j)});
  }
  rep.positive = rep.violations.empty();
  return rep;
}

ImpulsiveSystem lift_switched(const SwitchedSystem& sw) {
  sw.validate();
  const int N = sw.num_modes();
  if (N < 2) throw std::invalid_argument("lift_switched: needs at least two modes");
  const int n = sw.n;
  ImpulsiveSystem s = make_system(N * n, N * sw.m, sw.p, 0, 0, N * sw.q, 0);
  for (int k = 0; k < N; ++k) {
    const auto& md = sw.modes[k];
    auto put = [](PolyMatrix& dst, const PolyMatrix& src, int r0, int c0) {
      for (int i = 0; i < src.rows(); ++i)
        for (int j = 0; j < src.cols(); ++j) dst(r0 + i, c0 + j) = src(i, j);
    };
    put(s.A, md.A, k * n, k * n);
    put(s.Bc, md.B, k * n, k * sw.m);
    put(s.Ec, md.E, k * n, 0);
    put(s.Cc, md.C, k * sw.q, k * n);
    put(s.Dc, md.D, k * sw.q, k * sw.m);
    put(s.Fc, md.F, k * sw.q, 0);
  }
  s.jumps.clear();
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      JumpMap jm{Matrix::Zero(N * n, N * n), Matrix::Zero(N * n, 0), Matrix::Zero(N * n, 0),
                 Matrix::Zero(0, N * n),     Matrix::Zero(0, 0),     Matrix::Zero(0, 0)};
      jm.J.block(i * n, j * n, n, n).setIdentity();
      s.jumps.push_back(std::move(jm));
    }
  return s;
}

ImpulsiveSystem adjoint(const ImpulsiveSystem& sys) {
  sys.validate();
  if (sys.jumps.size() != 1) throw Unsupported("adjoint: only single-jump-map systems");
  if (sys.mc != 0 || sys.md != 0)
    throw Unsupported("adjoint: control channels are not part of the adjoint realisation");
  ImpulsiveSystem a = make_system(sys.n, 0, sys.qc, 0, sys.qd, sys.pc, sys.pd);
  a.A = sys.A.transpose();
  a.Ec = sys.Cc.transpose();
  a.Cc = sys.Ec.transpose();
  a.Fc = sys.Fc.transpose();
  const auto& j = sys.jumps[0];
  a.jumps[0].J = j.J.transpose();
  a.jumps[0].Ed = j.Cd.transpose();
  a.jumps[0].Cd = j.Ed.transpose();
  a.jumps[0].Fd = j.Fd.transpose();
  a.backward_time = !sys.backward_time;
  return a;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

std::string where(const std::string& field) { return "field '" + field + "'"; }

Poly poly_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return Poly::constant(j.get<double>());
  if (!j.is_array()) throw ParseError(where(field) + ": expected coefficient array");
  std::vector<double> c;
  for (const auto& v : j) {
    if (!v.is_number()) throw ParseError(where(field) + ": coefficient is not a number");
    c.push_back(v.get<double>());
  }
  return Poly(std::move(c));
}

json poly_to_json(const Poly& p) {
  json a = json::array();
  for (double c : p.coeffs()) a.push_back(c);
  return a;
}

PolyMatrix polymatrix_from_json(const json& obj, const std::string& field, int r, int c) {
  if (!obj.contains(field)) return PolyMatrix(r, c);
  const json& j = obj.at(field);
  if (!j.is_array()) throw ParseError(where(field) + ": expected 2-D array");
  if ((r == 0 || c == 0) && std::all_of(j.begin(), j.end(), [](const json& row) {
        return row.is_array() && row.empty();
      }))
    return PolyMatrix(r, c);
  if (static_cast<int>(j.size()) != r)
    throw DimensionMismatch(field + ": expected " + std::to_string(r) + " rows, got " +
                            std::to_string(j.size()));
  PolyMatrix m(r, c);
  for (int i = 0; i < r; ++i) {
    const json& row = j[i];
    if (!row.is_array()) throw ParseError(where(field) + " row " + std::to_string(i) + ": expected array");
    if (static_cast<int>(row.size()) != c)
      throw DimensionMismatch(field + " row " + std::to_string(i) + ": expected " +
                              std::to_string(c) + " columns, got " + std::to_string(row.size()));
    for (int k = 0; k < c; ++k)
      m(i, k) = poly_from_json(row[k], field + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  return m;
}

Matrix matrix_from_json(const json& obj, const std::string& field, int r, int c) {
  if (!obj.contains(field)) return Matrix::Zero(r, c);
  const json& j = obj.at(field);
  if (!j.is_array()) throw ParseError(where(field) + ": expected 2-D array");
  if ((r == 0 || c == 0) && std::all_of(j.begin(), j.end(), [](const json& row) {
        return row.is_array() && row.empty();
      }))
    return Matrix::Zero(r, c);
  if (static_cast<int>(j.size()) != r)
    throw DimensionMismatch(field + ": expected " + std::to_string(r) + " rows, got " +
                            std::to_string(j.size()));
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != c)
      throw DimensionMismatch(field + " row " + std::to_string(i) + ": expected " +
                              std::to_string(c) + " columns");
    for (int k = 0; k < c; ++k) {
      if (!row[k].is_number()) throw ParseError(where(field) + ": entry is not a number");
      m(i, k) = row[k].get<double>();
    }
  }
  return m;
}

json polymatrix_to_json(const PolyMatrix& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(poly_to_json(m(i, j)));
    a.push_back(row);
  }
  return a;
}

json matrix_to_json(const Matrix& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

int dim(const json& obj, const char* key, bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw ParseError(std::string("missing required field '") + key + "'");
    return 0;
  }
  if (!obj.at(key).is_number_integer())
    throw ParseError(where(key) + ": expected integer");
  return obj.at(key).get<int>();
}

JumpMap jump_from_json(const json& o, const ImpulsiveSystem& s) {
  return {matrix_from_json(o, "J", s.n, s.n),   matrix_from_json(o, "Bd", s.n, s.md),
          matrix_from_json(o, "Ed", s.n, s.pd), matrix_from_json(o, "Cd", s.qd, s.n),
          matrix_from_json(o, "Dd", s.qd, s.md), matrix_from_json(o, "Fd", s.qd, s.pd)};
}

void jump_to_json(json& o, const JumpMap& j) {
  o["J"] = matrix_to_json(j.J);
  o["Bd"] = matrix_to_json(j.Bd);
  o["Ed"] = matrix_to_json(j.Ed);
  o["Cd"] = matrix_to_json(j.Cd);
  o["Dd"] = matrix_to_json(j.Dd);
  o["Fd"] = matrix_to_json(j.Fd);
}

AnySystem system_from_json(const json& o) {
  if (!o.is_object()) throw ParseError("system file: top level must be an object");
  if (o.contains("modes")) {
    SwitchedSystem sw;
    sw.n = dim(o, "n", true);
    sw.m = dim(o, "m");
    sw.p = dim(o, "p");
    sw.q = dim(o, "q");
    if (!o.at("modes").is_array()) throw ParseError(where("modes") + ": expected array");
    for (const auto& mj : o.at("modes")) {
      Mode md;
      md.A = polymatrix_from_json(mj, "A", sw.n, sw.n);
      md.B = polymatrix_from_json(mj, "B", sw.n, sw.m);
      md.E = polymatrix_from_json(mj, "E", sw.n, sw.p);
      md.C = polymatrix_from_json(mj, "C", sw.q, sw.n);
      md.D = polymatrix_from_json(mj, "D", sw.q, sw.m);
      md.F = polymatrix_from_json(mj, "F", sw.q, sw.p);
      sw.modes.push_back(std::move(md));
    }
    sw.validate();
    return sw;
  }
  ImpulsiveSystem s;
  s.n = dim(o, "n", true);
  s.mc = dim(o, "mc");
  s.pc = dim(o, "pc");
  s.md = dim(o, "md");
  s.pd = dim(o, "pd");
  s.qc = dim(o, "qc");
  s.qd = dim(o, "qd");
  if (s.n <= 0) throw DimensionMismatch("n must be positive");
  s.A = polymatrix_from_json(o, "A", s.n, s.n);
  s.Bc = polymatrix_from_json(o, "Bc", s.n, s.mc);
  s.Ec = polymatrix_from_json(o, "Ec", s.n, s.pc);
  s.Cc = polymatrix_from_json(o, "Cc", s.qc, s.n);
  s.Dc = polymatrix_from_json(o, "Dc", s.qc, s.mc);
  s.Fc = polymatrix_from_json(o, "Fc", s.qc, s.pc);
  s.jumps.push_back(jump_from_json(o, s));
  if (o.contains("extra_jumps")) {
    if (!o.at("extra_jumps").is_array()) throw ParseError(where("extra_jumps") + ": expected array");
    for (const auto& jj : o.at("extra_jumps")) s.jumps.push_back(jump_from_json(jj, s));
  }
  if (o.contains("backward_time")) s.backward_time = o.at("backward_time").get<bool>();
  s.validate();
  return s;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

}  // namespace detail

using namespace detail;

AnySystem parse_system(const std::string& text) {
  json o;
  try {
    o = json::parse(text);
  } catch (const json::parse_error& e) {
    const size_t pos = std::min(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n');
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
  try {
    return system_from_json(o);
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

namespace detail {

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

AnySystem load_system(const std::string& path) { return parse_system(read_text(path)); }

std::string system_to_json(const ImpulsiveSystem& s) {
  json o;
  o["n"] = s.n;
  o["mc"] = s.mc;
  o["pc"] = s.pc;
  o["md"] = s.md;
  o["pd"] = s.pd;
  o["qc"] = s.qc;
  o["qd"] = s.qd;
  o["A"] = polymatrix_to_json(s.A);
  o["Bc"] = polymatrix_to_json(s.Bc);
  o["Ec"] = polymatrix_to_json(s.Ec);
  o["Cc"] = polymatrix_to_json(s.Cc);
  o["Dc"] = polymatrix_to_json(s.Dc);
  o["Fc"] = polymatrix_to_json(s.Fc);
  jump_to_json(o, s.jumps.at(0));
  if (s.jumps.size() > 1) {
    json extra = json::array();
    for (size_t k = 1; k < s.jumps.size(); ++k) {
      json jj;
      jump_to_json(jj, s.jumps[k]);
      extra.push_back(jj);
    }
    o["extra_jumps"] = extra;
  }
  if (s.backward_time) o["backward_time"] = true;
  return dump(o);
}

std::string system_to_json(const SwitchedSystem& sw) {
  json o;
  o["n"] = sw.n;
  o["m"] = sw.m;
  o["p"] = sw.p;
  o["q"] = sw.q;
  json modes = json::array();
  for (const auto& md : sw.modes) {
    json mj;
    mj["A"] = polymatrix_to_json(md.A);
    mj["B"] = polymatrix_to_json(md.B);
    mj["E"] = polymatrix_to_json(md.E);
    mj["C"] = polymatrix_to_json(md.C);
    mj["D"] = polymatrix_to_json(md.D);
    mj["F"] = polymatrix_to_json(md.F);
    modes.push_back(mj);
  }
  o["modes"] = modes;
  return dump(o);
}

void save_system(const ImpulsiveSystem& sys, const std::string& path) {
  write_text(path, system_to_json(sys));
}

void save_system(const SwitchedSystem& sys, const std::string& path) {
  write_text(path, system_to_json(sys));
}

}  // namespace posdwell

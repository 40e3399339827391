#include "posdwell/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

namespace posdwell {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
double min_entry(const Vector& v) { return v.size() ? v.minCoeff() : 0.0; }

Vector sample(const Signal& s, int channels, double t, long k) {
  Vector w(channels);
  for (int c = 0; c < channels; ++c) w[c] = s(c, t, k);
  return w;
}

// Flow matrices at the three RK4 stage abscissae of one step.
struct Stages {
  FlowMats f0, fh, f1;
};

Vector rhs(const FlowMats& f, const Vector& x, const Vector& w) {
  Vector d = f.A * x;
  if (w.size() && f.E.cols()) d += f.E * w;
  return d;
}

Vector rk4(const Stages& s, const Vector& x, double h, const Vector& w0, const Vector& wh,
           const Vector& w1) {
  const Vector k1 = rhs(s.f0, x, w0);
  const Vector k2 = rhs(s.fh, x + 0.5 * h * k1, wh);
  const Vector k3 = rhs(s.fh, x + 0.5 * h * k2, wh);
  const Vector k4 = rhs(s.f1, x + h * k3, w1);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Caches the flow of a time-invariant model per mode.
class FlowEval {
 public:
  explicit FlowEval(const HybridModel& m) : m_(m), cache_(m.num_modes) {}
  FlowMats operator()(int mode, double tau) {
    if (!m_.time_invariant) return m_.flow(mode, tau);
    auto& c = cache_[mode];
    if (!c) c = m_.flow(mode, 0.0);
    return *c;
  }
  Stages stages(int mode, double tau, double h) {
    if (m_.time_invariant) {
      const FlowMats f = (*this)(mode, 0.0);
      return {f, f, f};
    }
    return {(*this)(mode, tau), (*this)(mode, tau + 0.5 * h), (*this)(mode, tau + h)};
  }

 private:
  const HybridModel& m_;
  std::vector<std::optional<FlowMats>> cache_;
};

}  // namespace

double hash_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ stream) + k);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Dwell-time sequences

SequenceGen SequenceGen::exact(double T, std::uint64_t seed) {
  if (!(T > 0.0)) throw std::invalid_argument("SequenceGen: dwell time must be positive");
  return {Kind::Exact, T, T, 0.0, seed};
}

SequenceGen SequenceGen::uniform_range(double lo, double hi, std::uint64_t seed) {
  if (!(lo > 0.0) || !(lo <= hi)) throw std::invalid_argument("SequenceGen: need 0 < Tmin <= Tmax");
  return {Kind::UniformRange, lo, hi, 0.0, seed};
}

SequenceGen SequenceGen::min_plus_exp(double T, std::uint64_t seed, std::optional<double> rate) {
  if (!(T > 0.0)) throw std::invalid_argument("SequenceGen: dwell time must be positive");
  const double r = rate.value_or(1.0 / T);
  if (!(r > 0.0)) throw std::invalid_argument("SequenceGen: rate must be positive");
  return {Kind::MinPlusExp, T, 10.0 * T, r, seed};
}

SequenceGen SequenceGen::arbitrary(std::uint64_t seed) { return {Kind::Arbitrary, 0.05, 2.0, 0.0, seed}; }

SequenceGen SequenceGen::for_dwell(const DwellTimeSpec& d, std::uint64_t seed) {
  d.validate();
  switch (d.kind) {
    case DwellTimeSpec::Kind::Arbitrary: return arbitrary(seed);
    case DwellTimeSpec::Kind::Constant: return exact(d.t_min, seed);
    case DwellTimeSpec::Kind::Minimum: return min_plus_exp(d.t_min, seed);
    case DwellTimeSpec::Kind::Range: return uniform_range(d.t_min, d.t_max, seed);
  }
  throw std::logic_error("SequenceGen: unknown dwell kind");
}

double SequenceGen::operator()(long k) const {
  const double u = hash_uniform(seed, 1, static_cast<std::uint64_t>(k));
  switch (kind) {
    case Kind::Exact: return t_min;
    case Kind::UniformRange:
    case Kind::Arbitrary: return t_min + (t_max - t_min) * u;
    case Kind::MinPlusExp: return std::min(t_min - std::log1p(-u) / rate, t_max);
  }
  return t_min;
}

DwellTimeSpec SequenceGen::spec() const {
  switch (kind) {
    case Kind::Exact: return DwellTimeSpec::constant(t_min);
    case Kind::UniformRange: return DwellTimeSpec::range(t_min, t_max);
    case Kind::MinPlusExp: return DwellTimeSpec::minimum(t_min);
    case Kind::Arbitrary: return DwellTimeSpec::arbitrary();
  }
  return {};
}

std::string SequenceGen::to_string() const {
  switch (kind) {
    case Kind::Exact: return "exact:" + format_number(t_min);
    case Kind::UniformRange: return "uniform_range:" + format_number(t_min) + ":" + format_number(t_max);
    case Kind::MinPlusExp: return "min_plus_exp:" + format_number(t_min) + ":" + format_number(rate);
    case Kind::Arbitrary: return "arbitrary:" + format_number(t_min) + ":" + format_number(t_max);
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Inputs

std::string to_string(InputKind k) {
  switch (k) {
    case InputKind::ConstUnit: return "const_unit";
    case InputKind::Sine: return "sine";
    case InputKind::UniformRandom: return "uniform_random";
    case InputKind::Zero: return "zero";
  }
  return "?";
}

InputKind input_kind_from_string(const std::string& s) {
  for (auto k : {InputKind::ConstUnit, InputKind::Sine, InputKind::UniformRandom, InputKind::Zero})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown input kind '" + s + "'");
}

Signal make_signal(InputKind kind, std::uint64_t seed, std::uint64_t stream) {
  switch (kind) {
    case InputKind::ConstUnit: return [](int, double, long) { return 1.0; };
    case InputKind::Sine: return [](int, double t, long) { return 0.5 * (1.0 + std::sin(t)); };
    case InputKind::Zero: return [](int, double, long) { return 0.0; };
    case InputKind::UniformRandom:
      return [seed, stream](int ch, double, long k) {
        return hash_uniform(seed, 16 + 64 * stream + static_cast<std::uint64_t>(ch),
                            static_cast<std::uint64_t>(k));
      };
  }
  throw std::logic_error("make_signal: unknown kind");
}

Inputs generate_inputs(InputKind kind, std::uint64_t seed) {
  return {make_signal(kind, seed, 0), make_signal(kind, seed, 1)};
}

Inputs scale_inputs(const Inputs& in, double a) {
  return {[s = in.wc, a](int c, double t, long k) { return a * s(c, t, k); },
          [s = in.wd, a](int c, double t, long k) { return a * s(c, t, k); }};
}

Inputs add_inputs(const Inputs& x, const Inputs& y) {
  return {[a = x.wc, b = y.wc](int c, double t, long k) { return a(c, t, k) + b(c, t, k); },
          [a = x.wd, b = y.wd](int c, double t, long k) { return a(c, t, k) + b(c, t, k); }};
}

// ---------------------------------------------------------------------------
// Simulation

double default_step(const SequenceGen& gen) { return std::min(1e-3, gen.t_min / 50.0); }

Trajectory simulate(const HybridModel& m, const SequenceGen& gen, const Inputs& in, const Vector& x0,
                    const SimOptions& opt) {
  if (x0.size() != m.n) throw DimensionMismatch("simulate: x0 has the wrong length");
  if (!(opt.horizon > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
  const double h = opt.step.value_or(default_step(gen));
  if (!(h > 0.0)) throw std::invalid_argument("simulate: step must be positive");
  if (opt.initial_mode < 0 || opt.initial_mode >= m.num_modes)
    throw std::invalid_argument("simulate: initial mode out of range");

  FlowEval flow(m);
  Trajectory tr;
  tr.n = m.n;
  tr.min_state = min_entry(x0);
  tr.min_output = std::numeric_limits<double>::infinity();

  Vector x = x0;
  int mode = opt.initial_mode;
  long kappa = 0;
  double t = 0.0;

  // f and w are the flow matrices and continuous input at the sample.
  auto record = [&](double time, const FlowMats& f, const Vector& w) {
    Vector z = f.C * x;
    if (f.F.cols()) z += f.F * w;
    tr.sup_zc = std::max(tr.sup_zc, inf_norm(z));
    tr.min_state = std::min(tr.min_state, min_entry(x));
    if (z.size()) tr.min_output = std::min(tr.min_output, min_entry(z));
    if (!opt.record) return;
    tr.times.push_back(time);
    tr.states.push_back(x);
    tr.zc.push_back(std::move(z));
    tr.jump_count.push_back(kappa);
    tr.modes.push_back(mode);
  };

  FlowMats f0 = flow(mode, 0.0);
  Vector w0 = sample(in.wc, m.pc, 0.0, 0);
  record(0.0, f0, w0);
  for (long k = 0; t < opt.horizon; ++k) {
    const double Tk = gen(k);
    if (!(Tk > 0.0)) throw std::logic_error("simulate: nonpositive dwell time");
    const double t_jump = t + Tk;
    const bool jumps = t_jump <= opt.horizon;
    const double span = (jumps ? t_jump : opt.horizon) - t;
    const long nsub = std::max(1L, static_cast<long>(std::ceil(span / h - 1e-9)));
    const double hh = span / static_cast<double>(nsub);

    for (long s = 0; s < nsub; ++s) {
      const bool last = s + 1 == nsub;
      const double tau = hh * static_cast<double>(s);
      const double tau1 = last ? span : tau + hh;
      const double ts = t + tau;
      Stages st{f0, flow(mode, tau + 0.5 * hh), flow(mode, tau1)};
      const Vector wh = sample(in.wc, m.pc, ts + 0.5 * hh, k), w1 = sample(in.wc, m.pc, t + tau1, k);
      const Vector next = rk4(st, x, hh, w0, wh, w1);
      if (opt.self_check && k == 0 && (s == 0 || last)) {
        const Stages a = flow.stages(mode, tau, 0.5 * hh);
        const Stages b = flow.stages(mode, tau + 0.5 * hh, 0.5 * hh);
        const Vector wq = sample(in.wc, m.pc, ts + 0.25 * hh, k),
                     w3q = sample(in.wc, m.pc, ts + 0.75 * hh, k);
        const Vector half = rk4(b, rk4(a, x, 0.5 * hh, w0, wq, wh), 0.5 * hh, wh, w3q, w1);
        const double scale = std::max({inf_norm(half), inf_norm(x), 1e-300});
        if (inf_norm(half - next) > 1e-4 * scale)
          throw StepTooLarge("simulate: step " + format_number(hh) +
                             " fails the half-step check; reduce --step");
      }
      x = next;
      f0 = std::move(st.f1);
      w0 = w1;
      record(t + tau1, f0, w0);
    }
    t += span;
    if (!jumps) break;
    t = t_jump;

    const int map = m.num_jump_maps > 1
                        ? std::min(m.num_jump_maps - 1,
                                   static_cast<int>(hash_uniform(opt.seed, 3, k) * m.num_jump_maps))
                        : 0;
    const JumpMats J = m.jump(map, Tk);
    const Vector wd = sample(in.wd, m.pd, t, k);
    Vector zd = J.C * x;
    if (J.F.cols()) zd += J.F * wd;
    Vector post = J.J * x;
    if (J.E.cols()) post += J.E * wd;
    tr.sup_zd = std::max(tr.sup_zd, inf_norm(zd));
    if (zd.size()) tr.min_output = std::min(tr.min_output, min_entry(zd));
    ++kappa;
    ++tr.total_jumps;
    if (opt.record) {
      tr.jump_times.push_back(t);
      tr.pre_jump.push_back(x);
      tr.post_jump.push_back(post);
      tr.zd.push_back(zd);
      tr.dwell.push_back(Tk);
      tr.jump_maps.push_back(map);
    }
    x = std::move(post);
    if (m.switched && m.num_modes > 1) {
      const int pick = std::min(m.num_modes - 2,
                                static_cast<int>(hash_uniform(opt.seed, 4, k) * (m.num_modes - 1)));
      mode = pick >= mode ? pick + 1 : pick;
    }
    f0 = flow(mode, 0.0);
    w0 = sample(in.wc, m.pc, t, k + 1);
    record(t, f0, w0);
  }
  if (!std::isfinite(tr.min_output)) tr.min_output = 0.0;
  return tr;
}

Trajectory simulate(const ImpulsiveSystem& sys, const SequenceGen& gen, const Inputs& in,
                    const std::optional<ControllerRealization>& ctrl, const Vector& x0,
                    const SimOptions& opt) {
  const HybridModel m = ctrl ? closed_loop(sys, *ctrl) : open_loop(sys, gen.spec().clamp());
  return simulate(m, gen, in, x0, opt);
}

double estimate_gain(const HybridModel& m, const SequenceGen& gen, const GainOptions& opt) {
  if (opt.runs < 1) throw std::invalid_argument("estimate_gain: runs must be >= 1");
  std::vector<double> gains(opt.runs, 0.0);
  const Inputs unit = generate_inputs(InputKind::ConstUnit);
  auto run = [&](int r) {
    SequenceGen g = gen;
    g.seed = gen.seed ^ (opt.seed * 0x9e3779b97f4a7c15ULL) ^ static_cast<std::uint64_t>(r);
    SimOptions so;
    so.horizon = opt.horizon;
    so.step = opt.step;
    so.seed = g.seed;
    so.record = false;
    so.self_check = r == 0;
    if (m.switched) so.initial_mode = static_cast<int>(r % m.num_modes);
    const Trajectory tr = simulate(m, g, unit, Vector::Zero(m.n), so);
    gains[r] = std::max(tr.sup_zc, tr.sup_zd);
  };
  const int jobs = std::max(1, std::min(opt.jobs, opt.runs));
  if (jobs == 1) {
    for (int r = 0; r < opt.runs; ++r) run(r);
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&, j] {
        try {
          for (int r = j; r < opt.runs; r += jobs) run(r);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return *std::max_element(gains.begin(), gains.end());
}

Matrix propagate(const HybridModel& m, int mode, const Matrix& X0, double tau0, double tau1,
                 double step, const Vector& w) {
  if (tau1 < tau0) throw std::invalid_argument("propagate: tau1 < tau0");
  if (!(step > 0.0)) throw std::invalid_argument("propagate: step must be positive");
  Matrix X = X0;
  if (tau1 == tau0) return X;
  FlowEval flow(m);
  const double span = tau1 - tau0;
  const long nsub = std::max(1L, static_cast<long>(std::ceil(span / step - 1e-9)));
  const double hh = span / static_cast<double>(nsub);
  for (long s = 0; s < nsub; ++s) {
    const Stages st = flow.stages(mode, tau0 + hh * static_cast<double>(s), hh);
    for (int c = 0; c < X.cols(); ++c) X.col(c) = rk4(st, X.col(c), hh, w, w, w);
  }
  return X;
}

// ---------------------------------------------------------------------------
// Export

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);
  return buf;
}

void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  const int qc = tr.zc.empty() ? 0 : static_cast<int>(tr.zc[0].size());
  f << "t";
  for (int i = 0; i < tr.n; ++i) f << ",x_" << i + 1;
  for (int i = 0; i < qc; ++i) f << ",z_c_" << i + 1;
  f << "\n";
  for (size_t s = 0; s < tr.times.size(); ++s) {
    f << format_number(tr.times[s]);
    for (int i = 0; i < tr.n; ++i) f << "," << format_number(tr.states[s][i]);
    for (int i = 0; i < qc; ++i) f << "," << format_number(tr.zc[s][i]);
    f << "\n";
  }
}

void write_jumps_csv(const Trajectory& tr, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  const int qd = tr.zd.empty() ? 0 : static_cast<int>(tr.zd[0].size());
  f << "k,t_k";
  for (int i = 0; i < qd; ++i) f << ",z_d_" << i + 1;
  f << "\n";
  for (size_t k = 0; k < tr.jump_times.size(); ++k) {
    f << k + 1 << "," << format_number(tr.jump_times[k]);
    for (int i = 0; i < qd; ++i) f << "," << format_number(tr.zd[k][i]);
    f << "\n";
  }
}

}  // namespace posdwell

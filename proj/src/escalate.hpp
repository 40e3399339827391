#pragma once

// Handelman order escalation shared by the analysis and synthesis encoders.

#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "posdwell/analysis.hpp"
#include "posdwell/encoding.hpp"

namespace posdwell::detail {

using Skip = std::set<std::string>;

template <class R>
struct Built {
  LpBuilder b;
  int gamma = -1;
  std::function<R(const std::vector<double>&)> finish;
};

template <class R>
using BuildFn = std::function<Built<R>(const IntervalEncoding&, const Skip&)>;

template <class R>
struct Solved {
  R result;
  double gamma = 0.0;
  int boost = 0;
  std::vector<HandelmanRecord> handelman;
};

inline void dump_lp(const std::string& path, const LinearProgram& lp) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << lp.to_lp_format();
}

template <class R>
bool feasible(const Built<R>& built) {
  return lp_solve(built.b.lp()).status != LpStatus::Infeasible;
}

/// Tries orders boost, boost + step, ... up to max_boost, which caps boost too. On failure the gridded
/// relaxation decides between RelaxationLimit and Infeasible, and each stability
/// family is dropped in turn to name the culprits.
template <class R>
Solved<R> solve_escalating(const BuildFn<R>& build, int boost0, int max_boost, int step,
                           const std::string& dump_path, const std::string& theorem,
                           const std::vector<std::string>& families) {
  max_boost = std::max(0, max_boost);
  for (int boost = std::min(boost0, max_boost); boost <= max_boost; boost += std::max(1, step)) {
    IntervalEncoding enc;
    enc.boost = boost;
    Built<R> built = build(enc, {});
    dump_lp(dump_path, built.b.lp());
    const LpSolution sol = lp_solve(built.b.lp());
    if (sol.status == LpStatus::Unbounded)
      throw NumericalFailure(theorem + ": LP reported unbounded");
    if (sol.status == LpStatus::Optimal) {
      Solved<R> s{built.finish(sol.x), sol.x[built.gamma], boost, built.b.extract(sol.x)};
      return s;
    }
  }
  IntervalEncoding grid;
  grid.kind = IntervalEncoding::Kind::Grid;
  if (feasible(build(grid, {})))
    throw RelaxationLimit(theorem + ": relaxation limit reached (gridded conditions are "
                          "feasible but no Handelman certificate up to order +" +
                          std::to_string(max_boost) + ")");
  std::string culprits;
  for (const auto& fam : families)
    if (feasible(build(grid, {fam}))) culprits += (culprits.empty() ? "" : ", ") + fam;
  if (culprits.empty()) {
    culprits = "combination of ";
    for (size_t i = 0; i < families.size(); ++i) culprits += (i ? "+" : "") + families[i];
  }
  throw Infeasible(theorem + ": infeasible; violated rows: " + culprits);
}

inline std::string idx(int i) { return "[" + std::to_string(i) + "]"; }

}  // namespace posdwell::detail

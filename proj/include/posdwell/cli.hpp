#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace posdwell::cli {

enum ExitCode { Ok = 0, Failed = 1, ConfigError = 2, InfeasibleExit = 3, NumericalExit = 4 };

struct RunConfig {
  std::string command;
  std::string system_path;
  std::string dwell = "arbitrary";
  int degree = 4;
  std::uint64_t seed = 1;
  /// analyze/synthesize: JSON artifact; simulate: file prefix; certify: report JSON; sweep: CSV.
  std::string output;
  std::string certificate_path;
  std::string controller_path;
  std::optional<double> margin;
  std::optional<int> max_boost;
  int grid = 1000;
  int runs = 100;
  double horizon = 30.0;
  std::optional<double> step;
  bool fixed_kd = false;
  bool mu_variant = false;
  std::string dump_lp;
  std::string inputs = "const_unit";
  int jobs = 1;
  double from = 0.0, to = 0.0;
  int points = 25;
};

/// Executes one command; human-readable summary to out, diagnostics to err.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv with the documented flag set and runs it.
int main(int argc, char** argv);

}  // namespace posdwell::cli

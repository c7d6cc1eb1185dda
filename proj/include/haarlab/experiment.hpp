#pragma once

// Subcommands behind the haarlab executable.
//
// CSV files start with the line "# haarlab-csv v1" followed by a header row; doubles are
// printed with %.17g. Exit status: 0 pass, 1 invariant violation, 2 configuration or I/O error.

#include <cstdint>
#include <iosfwd>
#include <string>

namespace haarlab {

struct ExperimentConfig {
  std::string subcommand;
  std::uint64_t seed = 1;
  std::int64_t trials = 100;
  int d = 2;
  int depth = 4;
  int k = 2;
  int m = -1;  // shift parameters for norm-scan --op shift; default k - 1
  int n = -1;
  int p = 2;
  double target_x = 4.0;
  double tol = 1e-9;
  std::string check;            // bellman / schur check name
  std::string op = "martingale";  // norm-scan operator family
  std::string csv;
  std::string json;
  std::string weight;
  std::string spec;
  std::string input;            // counterexample file for replay
  int threads = 0;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitConfig = 2;

/// Runs one subcommand, writing a human summary to `out` and diagnostics to `err`.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

}  // namespace haarlab

#pragma once

// Seeded property checks shared by the CLI, the cross-module suite and the tests.
//
// Every check splits into generate (rng -> JSON inputs) and evaluate (JSON inputs -> outcome),
// so a failing trial is replayed by evaluating its stored inputs again.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "haarlab/json_io.hpp"
#include "haarlab/rng.hpp"

namespace haarlab {

struct FuzzConfig {
  int d = 2;      // largest matrix dimension drawn
  int depth = 4;  // largest tree depth drawn
  int k = 2;      // largest shift complexity / dynamics depth / log2 of Lambda size
  int p = 2;      // cube dimension for transfer checks (0 draws from {2, 3})
};

struct CheckOutcome {
  double observed = 0.0;
  double bound = 0.0;
  bool ok = true;
  std::string detail;
};

struct FuzzCheck {
  std::string module;
  std::string operation;
  std::function<Json(CounterRng&, const FuzzConfig&)> generate;
  std::function<CheckOutcome(const Json&, double tol)> evaluate;
  bool in_suite = true;  // false for report-only checks with a known failing bound

  std::string name() const { return module + "/" + operation; }
};

/// The checks of the cross-module suite, in their fixed order.
const std::vector<FuzzCheck>& fuzz_checks();
/// Suite checks followed by the ones kept out of it.
const std::vector<FuzzCheck>& all_checks();
/// Searches all_checks(); ConfigInvalid for unknown names.
const FuzzCheck& find_check(const std::string& module, const std::string& operation);

struct Counterexample {
  std::string module;
  std::string operation;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::int64_t trial = 0;
  Json inputs;
  double observed = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

Json counterexample_to_json(const Counterexample& c);
Counterexample counterexample_from_json(const Json& j);

struct TrialResult {
  std::int64_t trial = 0;
  CheckOutcome outcome;
};

struct CheckRun {
  std::string name;
  std::int64_t trials = 0;
  std::int64_t violations = 0;
  std::vector<TrialResult> results;      // trial order
  std::vector<Counterexample> failures;  // trial order
};

/// Trial t draws from CounterRng(seed, stream_base | t). Trials run on `threads` workers
/// (0 = hardware concurrency); results are independent of the thread count. An exception
/// thrown while evaluating counts as a violation.
CheckRun run_check(const FuzzCheck& check, std::uint64_t seed, std::int64_t trials, const FuzzConfig& config,
                   double tol, std::uint64_t stream_base = 0, int threads = 0);

/// The cross-module suite: check i uses stream_base = i << 40.
std::vector<CheckRun> run_suite(std::uint64_t seed, std::int64_t trials, const FuzzConfig& config, double tol,
                                int threads = 0);

struct ReplayResult {
  CheckOutcome outcome;
  bool reproduced = false;  // |observed - stored| <= 1e-12 max(1, |stored|)
};

ReplayResult replay(const Counterexample& c);

/// Runs fn(t) for t in [0, n) on a pool of workers.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn, int threads = 0);

}  // namespace haarlab

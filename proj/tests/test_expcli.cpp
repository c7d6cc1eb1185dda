#include "support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "haarlab/experiment.hpp"
#include "haarlab/fuzz.hpp"
#include "haarlab/json_io.hpp"

using namespace haarlab;
using namespace haarlab::test;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "haarlab_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_quiet(const ExperimentConfig& cfg) {
  std::ostringstream out, err;
  return run(cfg, out, err);
}

ExperimentConfig config(const std::string& sub) {
  ExperimentConfig c;
  c.subcommand = sub;
  c.trials = 20;
  c.d = 2;
  c.depth = 3;
  return c;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(HAARLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("expcli") {
  TEST_CASE("empty fuzz run passes") {
    ExperimentConfig c = config("fuzz");
    c.trials = 0;
    c.csv = scratch("empty.csv").string();
    CHECK(run_quiet(c) == kExitPass);
    CHECK(slurp(c.csv) == "# haarlab-csv v1\ncheck,trials,violations,first_violation\n");
  }

  TEST_CASE("outputs are byte-identical across runs and thread counts") {
    for (const char* sub : {"fuzz", "a2", "carleson", "transfer", "norm-scan"}) {
      CAPTURE(sub);
      ExperimentConfig a = config(sub);
      a.threads = 1;
      a.csv = scratch(std::string(sub) + "_a.csv").string();
      a.json = scratch(std::string(sub) + "_a.json").string();
      ExperimentConfig b = a;
      b.threads = 4;
      b.csv = scratch(std::string(sub) + "_b.csv").string();
      b.json = scratch(std::string(sub) + "_b.json").string();
      const int ra = run_quiet(a);
      CHECK(ra == run_quiet(b));
      CHECK(ra == kExitPass);
      CHECK(slurp(a.csv) == slurp(b.csv));
      CHECK(slurp(a.json) == slurp(b.json));
      CHECK(slurp(a.csv).rfind("# haarlab-csv v1\n", 0) == 0);
    }
  }

  TEST_CASE("different seeds give different trials") {
    ExperimentConfig a = config("carleson");
    a.csv = scratch("seed1.csv").string();
    ExperimentConfig b = a;
    b.seed = 2;
    b.csv = scratch("seed2.csv").string();
    run_quiet(a);
    run_quiet(b);
    CHECK(slurp(a.csv) != slurp(b.csv));
  }

  TEST_CASE("bad configuration exits 2") {
    ExperimentConfig c = config("fuzz");
    c.d = 0;
    CHECK(run_quiet(c) == kExitConfig);
    c = config("fuzz");
    c.trials = -1;
    CHECK(run_quiet(c) == kExitConfig);
    c = config("bellman");
    c.check = "nonsense";
    CHECK(run_quiet(c) == kExitConfig);
    c = config("a2");
    c.weight = scratch("does_not_exist.json").string();
    CHECK(run_quiet(c) == kExitConfig);
    c = config("a2");
    c.target_x = 0.5;
    CHECK(run_quiet(c) == kExitConfig);
    c = config("replay");
    CHECK(run_quiet(c) == kExitConfig);
    c = config("transfer");
    c.p = 4;
    CHECK(run_quiet(c) == kExitConfig);
    c = config("frobnicate");
    CHECK(run_quiet(c) == kExitConfig);
    std::ofstream(scratch("garbage.json")) << "{not json";
    c = config("replay");
    c.input = scratch("garbage.json").string();
    CHECK(run_quiet(c) == kExitConfig);
  }

  TEST_CASE("a2 reads a weight file") {
    const MatrixWeight w(1, {HpdMatrix(scalar(4)), HpdMatrix(scalar(1))});
    write_json_file(scratch("w.json").string(), weight_to_json(w));
    ExperimentConfig c = config("a2");
    c.weight = scratch("w.json").string();
    c.csv = scratch("w_a2.csv").string();
    CHECK(run_quiet(c) == kExitPass);
    std::istringstream lines(slurp(c.csv));
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line);
    CHECK(line == "quantity,level,index,value");
    std::getline(lines, line);
    REQUIRE(line.rfind("characteristic,0,0,", 0) == 0);
    CHECK(std::stod(line.substr(19)) == doctest::Approx(25.0 / 16.0).epsilon(1e-14));
  }

  TEST_CASE("replay reproduces a stored violation") {
    const FuzzCheck& norms = find_check("schur", "norms");
    CHECK_FALSE(norms.in_suite);
    const CheckRun r = run_check(norms, 3, 4, FuzzConfig{}, 1e-9, 0, 1);
    REQUIRE(!r.failures.empty());
    const Counterexample& cx = r.failures.front();
    const Counterexample back = counterexample_from_json(Json::parse(counterexample_to_json(cx).dump()));
    CHECK(back.seed == cx.seed);
    CHECK(back.stream == cx.stream);
    CHECK(back.observed == cx.observed);
    const ReplayResult again = replay(back);
    CHECK(again.reproduced);
    CHECK_FALSE(again.outcome.ok);

    Json arr = Json::array();
    arr.push_back(counterexample_to_json(cx));
    write_json_file(scratch("cx.json").string(), arr);
    ExperimentConfig c = config("replay");
    c.input = scratch("cx.json").string();
    CHECK(run_quiet(c) == kExitViolation);

    // A passing trial replays as a pass.
    const FuzzCheck& slice = find_check("operators", "slice_sum");
    CounterRng rng(3, 0);
    const Json inputs = slice.generate(rng, FuzzConfig{});
    const CheckOutcome o = slice.evaluate(inputs, 1e-9);
    Counterexample ok{"operators", "slice_sum", 3, 0, 0, inputs, o.observed, o.bound, 1e-9, o.detail};
    write_json_file(scratch("ok.json").string(), counterexample_to_json(ok));
    c.input = scratch("ok.json").string();
    CHECK(run_quiet(c) == kExitPass);
    CHECK_THROWS_CODE(find_check("schur", "nope"), ErrorCode::ConfigInvalid);
  }

  TEST_CASE("run_check is independent of the thread count") {
    for (const FuzzCheck& check : fuzz_checks()) {
      CAPTURE(check.name());
      const CheckRun a = run_check(check, 9, 6, FuzzConfig{}, 1e-9, 0, 1);
      const CheckRun b = run_check(check, 9, 6, FuzzConfig{}, 1e-9, 0, 3);
      REQUIRE(a.results.size() == b.results.size());
      for (std::size_t i = 0; i < a.results.size(); ++i) {
        CHECK(a.results[i].trial == static_cast<std::int64_t>(i));
        CHECK(a.results[i].outcome.observed == b.results[i].outcome.observed);
      }
      CHECK(a.violations == 0);
    }
  }

  TEST_CASE("the executable") {
    CHECK(cli("fuzz --trials 0") == 0);
    CHECK(cli("bellman --check segment --trials 5 --seed 4") == 0);
    CHECK(cli("schur --check norms --trials 2") == 1);
    CHECK(cli("transfer --p 3 --depth 2 --trials 3") == 0);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli("a2 --d notanumber") == 2);
    CHECK(cli("bellman") == 2);
  }
}

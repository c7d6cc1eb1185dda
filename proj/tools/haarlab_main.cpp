#include <iostream>

#include <CLI11.hpp>

#include "haarlab/experiment.hpp"

int main(int argc, char** argv) {
  haarlab::ExperimentConfig cfg;
  CLI::App app{"Matrix-weighted dyadic harmonic analysis experiments"};
  app.require_subcommand(1, 1);

  auto common = [&cfg](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "64-bit seed");
    sub->add_option("--trials", cfg.trials, "number of trials");
    sub->add_option("--d", cfg.d, "matrix dimension (largest drawn, for fuzz checks)");
    sub->add_option("--depth", cfg.depth, "tree depth");
    sub->add_option("--k", cfg.k, "shift complexity / dynamics depth / log2 Lambda size");
    sub->add_option("--tol", cfg.tol, "PSD / inequality tolerance");
    sub->add_option("--csv", cfg.csv, "CSV output path");
    sub->add_option("--json", cfg.json, "JSON output path (replay: input)");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
  };

  auto* a2 = app.add_subcommand("a2", "dyadic A2 characteristic of a weight");
  common(a2);
  a2->add_option("--weight", cfg.weight, "weight JSON; a seeded random weight otherwise");
  a2->add_option("--target-x", cfg.target_x, "target characteristic of the random weight");

  auto* scan = app.add_subcommand("norm-scan", "weighted norms against [W]_A2 (report only)");
  common(scan);
  scan->add_option("--op", cfg.op, "martingale or shift")->check(CLI::IsMember({"martingale", "shift"}));
  scan->add_option("--m", cfg.m, "shift parameter m");
  scan->add_option("--n", cfg.n, "shift parameter n");
  scan->add_option("--spec", cfg.spec, "shift spec JSON");
  scan->add_option("--target-x", cfg.target_x, "unused; buckets are fixed");

  auto* carleson = app.add_subcommand("carleson", "matrix Carleson embedding fuzz");
  common(carleson);

  auto* bellman = app.add_subcommand("bellman", "Bellman-domain and Bellman-function checks");
  common(bellman);
  bellman->add_option("--check", cfg.check, "segment | dynamics | carleson | resolvent | range")->required();

  auto* schur = app.add_subcommand("schur", "Schur multiplier and alpha-sequence checks");
  common(schur);
  schur->add_option("--check", cfg.check, "sign-bound | alpha | norms")->required();

  auto* transfer = app.add_subcommand("transfer", "cube-to-interval transfer inflation");
  common(transfer);
  transfer->add_option("--p", cfg.p, "cube dimension");
  transfer->add_option("--weight", cfg.weight, "cube weight JSON; random weights otherwise");

  auto* fuzz = app.add_subcommand("fuzz", "cross-module property suite");
  common(fuzz);
  fuzz->add_option("--p", cfg.p, "cube dimension for transfer checks (0 draws 2 or 3)");

  auto* replay = app.add_subcommand("replay", "re-run a counterexample file");
  common(replay);
  replay->add_option("file", cfg.input, "counterexample JSON (object or array)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : haarlab::kExitConfig;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  return haarlab::run(cfg, std::cout, std::cerr);
}

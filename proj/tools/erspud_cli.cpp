// erspud command-line driver: single trials, phase grids and theory checks.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "erspud/theorycheck.hpp"
#include "erspud/xphase.hpp"

namespace {

using namespace erspud;
using nlohmann::json;

struct TheoryParams {
  std::optional<std::size_t> n, p, trials, samples, s, d, b_sparsity;
  std::optional<double> theta, delta, beta, gamma, alpha;
  std::uint64_t seed = 1;
};

template <class T>
T pick(const std::optional<T>& v, T fallback) {
  return v ? *v : fallback;
}

CheckReport run_check(const std::string& name, const TheoryParams& tp, unsigned threads) {
  if (name == "uniqueness_sparsity") {
    return check_uniqueness_sparsity(pick(tp.n, std::size_t{50}), pick(tp.theta, 0.1), pick(tp.p, std::size_t{2000}),
                                     pick(tp.trials, std::size_t{1000}), tp.seed, 1.0, threads);
  }
  if (name == "row_l1_concentration") {
    return check_row_l1_concentration(pick(tp.n, std::size_t{50}), pick(tp.p, std::size_t{5000}),
                                      pick(tp.theta, 0.1), pick(tp.delta, 0.2), tp.seed);
  }
  if (name == "avg_lower_bound") {
    const std::size_t n = pick(tp.n, std::size_t{16});
    return check_avg_lower_bound(n, pick(tp.theta, 0.25), Vec(n, 1.0), pick(tp.samples, std::size_t{100000}), tp.seed);
  }
  if (name == "gap_statistics") {
    const std::size_t n = pick(tp.n, std::size_t{100});
    return check_gap_statistics(pick(tp.d, n), n, pick(tp.alpha, 0.05), pick(tp.samples, std::size_t{100000}), tp.seed);
  }
  if (name == "p1_support") {
    return check_p1_support(pick(tp.n, std::size_t{30}), pick(tp.p, std::size_t{4000}), pick(tp.theta, 0.1),
                            pick(tp.b_sparsity, std::size_t{1}), pick(tp.trials, std::size_t{50}), tp.seed, 1e-6,
                            threads);
  }
  if (name == "p2_onesparse") {
    return check_p2_onesparse(pick(tp.n, std::size_t{30}), pick(tp.p, std::size_t{4000}), pick(tp.theta, 0.01),
                              pick(tp.s, std::size_t{4}), pick(tp.gamma, 0.5), pick(tp.trials, std::size_t{50}),
                              tp.seed, 1e-6, threads);
  }
  if (name == "ub_mechanism") {
    const std::size_t n = pick(tp.n, std::size_t{100}), p = pick(tp.p, std::size_t{3000});
    if (tp.theta) return check_ub_mechanism_at(n, p, *tp.theta, tp.seed, 1e-12, threads);
    return check_ub_mechanism(n, p, pick(tp.beta, 9.0), tp.seed, threads);
  }
  if (name == "toy_rowspan") {
    return check_toy_rowspan(pick(tp.n, std::size_t{3}), pick(tp.p, std::size_t{10}), pick(tp.trials, std::size_t{20}),
                             tp.seed);
  }
  throw ConfigError("unknown check '" + name + "'");
}

const char* const kChecks[] = {"uniqueness_sparsity", "row_l1_concentration", "avg_lower_bound", "gap_statistics",
                               "p1_support",          "p2_onesparse",         "ub_mechanism",    "toy_rowspan"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact-recovery sparse dictionary learning toolkit"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  std::string config_path;
  std::size_t trial = 0;

  auto* run = app.add_subcommand("run", "Run one trial of the first (n, k) cell and print its match report");
  run->add_option("--config", config_path, "PhaseConfig JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--trial", trial, "Trial index within the cell");

  std::string output_override;
  auto* phase = app.add_subcommand("phase", "Run a phase-transition grid and write CSV, PGM and meta outputs");
  phase->add_option("--config", config_path, "PhaseConfig JSON file")->required()->check(CLI::ExistingFile);
  phase->add_option("--output-dir", output_override, "Override output_dir from the config");

  std::string check = "all";
  TheoryParams tp;
  auto* theory = app.add_subcommand("theory", "Run Monte-Carlo property checks; one JSON report per line");
  theory->add_option("--check", check, "Check name or 'all'");
  theory->add_option("--seed", tp.seed, "Master seed");
  theory->add_option("--n", tp.n);
  theory->add_option("--p", tp.p);
  theory->add_option("--theta", tp.theta);
  theory->add_option("--trials", tp.trials);
  theory->add_option("--samples", tp.samples);
  theory->add_option("--delta", tp.delta);
  theory->add_option("--beta", tp.beta);
  theory->add_option("--s", tp.s);
  theory->add_option("--gamma", tp.gamma);
  theory->add_option("--alpha", tp.alpha);
  theory->add_option("--d", tp.d);
  theory->add_option("--b-sparsity", tp.b_sparsity);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const PhaseConfig cfg = load_phase_config(config_path);
      const std::size_t n = cfg.n_values.front(), k = cfg.k_values.front();
      const TrialSpec spec = trial_spec_for(cfg, n, k, trial);
      const TrialOutcome out = run_trial_detailed(spec, threads);
      json j{{"n", n},
             {"k", k},
             {"p", spec.p},
             {"trial", trial},
             {"trial_seed", spec.trial_seed},
             {"algorithm", to_string(cfg.algorithm)},
             {"rel_error", out.rel_error},
             {"pipeline_failed", out.pipeline_failed},
             {"candidates", out.candidates},
             {"match", match_report_json(out.match)}};
      if (out.pipeline_failed) j["failure"] = out.failure;
      std::cout << j.dump(2) << "\n";
    } else if (*phase) {
      PhaseConfig cfg = load_phase_config(config_path);
      if (!output_override.empty()) cfg.output_dir = output_override;
      const auto cells = run_grid(cfg, threads);
      std::cout << format_summary_csv(cells);
      if (!cfg.output_dir.empty()) std::cerr << "outputs written to " << cfg.output_dir << "\n";
    } else if (*theory) {
      bool all_pass = true;
      auto emit = [&](const std::string& name) {
        const CheckReport r = run_check(name, tp, threads);
        all_pass = all_pass && r.pass;
        std::cout << json(r).dump() << "\n";
      };
      if (check == "all") {
        for (const char* name : kChecks) emit(name);
      } else {
        emit(check);
      }
      return all_pass ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

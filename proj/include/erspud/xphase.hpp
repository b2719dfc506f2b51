#pragma once

// Phase-transition experiments: single trials, (n, k) grids, and their
// CSV / PGM / JSON outputs.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "erspud/dictmetrics.hpp"
#include "erspud/error.hpp"
#include "erspud/parallel.hpp"
#include "erspud/pipelines.hpp"
#include "erspud/randmodel.hpp"

#ifndef ERSPUD_VERSION
#define ERSPUD_VERSION "0.1.0"
#endif

namespace erspud {

inline constexpr const char* kToolkitVersion = ERSPUD_VERSION;

// p = ceil(m * n * ln n).
inline std::size_t samples_for(std::size_t n, double multiplier) {
  return static_cast<std::size_t>(std::ceil(multiplier * static_cast<double>(n) * std::log(static_cast<double>(n))));
}

struct TrialSpec {
  std::size_t n = 10;
  std::size_t k = 1;
  std::size_t p = 0;
  Algorithm algorithm = Algorithm::dc;
  DictKind dict_kind = DictKind::gaussian_iid;
  bool precondition = true;
  std::uint64_t trial_seed = 0;
  ValueDist value_dist = ValueDist::gaussian;
  std::size_t cols_per_round = 0;
};

struct TrialData {
  Mat a;
  Mat x;
  Mat y;
  std::size_t x_attempts = 0;
};

// Draws A, then X with k nonzeros per column until rank(X) = n (at most 10
// draws), and forms Y = A X.
inline TrialData generate_trial_data(const TrialSpec& spec) {
  if (spec.n < 1 || spec.p < 1) throw ConfigError("trial: n and p must be positive");
  TrialData data;
  data.a = gen_dict({spec.n, spec.dict_kind, derive_seed(spec.trial_seed, {1})});
  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    CoeffModel cm{spec.n, spec.p, FixedK{spec.k}, spec.value_dist, derive_seed(spec.trial_seed, {2, attempt})};
    Mat x = gen_coeffs(cm);
    data.x_attempts = attempt + 1;
    if (rank_with_tol(x, 1e-8) == spec.n) {
      data.x = std::move(x);
      data.y = matmul(data.a, data.x);
      return data;
    }
  }
  throw DataGenerationError("trial: 10 consecutive rank-deficient coefficient draws (n=" +
                            std::to_string(spec.n) + ", k=" + std::to_string(spec.k) +
                            ", p=" + std::to_string(spec.p) + ")");
}

struct TrialOutcome {
  double rel_error = 1.0;
  MatchReport match;
  bool pipeline_failed = false;
  std::string failure;
  std::size_t candidates = 0;
};

inline RecoveryOptions recovery_options_for(const TrialSpec& spec, unsigned threads = 1) {
  RecoveryOptions opt;
  opt.algorithm = spec.algorithm;
  opt.precondition = spec.precondition;
  opt.pair_seed = derive_seed(spec.trial_seed, {3});
  opt.cols_per_round = spec.cols_per_round;
  opt.pipeline.threads = threads;
  return opt;
}

namespace detail {

// Runs `estimate` (returning A_hat) and scores it against the true
// dictionary. Pipeline failures score as the all-zero dictionary, whose
// relative error is exactly 1.
template <class Estimate>
TrialOutcome guarded_score(const Mat& a, Estimate&& estimate) {
  TrialOutcome out;
  try {
    out.match = rel_error(estimate(out), a);
    out.rel_error = out.match.rel_error;
    return out;
  } catch (const RankDeficiencyError& e) {
    out.failure = e.what();
  } catch (const ReconstructionError& e) {
    out.failure = e.what();
  } catch (const SingularMatrixError& e) {
    out.failure = e.what();
  }
  out.pipeline_failed = true;
  out.match = rel_error(Mat(a.rows(), a.cols()), a);
  out.rel_error = out.match.rel_error;
  return out;
}

}  // namespace detail

inline TrialOutcome score_recovery(const TrialData& data, const RecoveryOptions& opt) {
  return detail::guarded_score(data.a, [&](TrialOutcome& out) {
    RecoveryResult r = recover(data.y, opt);
    out.candidates = r.candidates.size();
    return r.a_hat;
  });
}

// Greedy selection and reconstruction from an externally produced candidate
// set whose rows live in the row span of data.y.
inline TrialOutcome score_candidates(const TrialData& data, const CandidateSet& cands, double zero_tol_rel = 1e-6,
                                     double rank_tol = 1e-8) {
  return detail::guarded_score(data.a, [&](TrialOutcome& out) {
    out.candidates = cands.size();
    const GreedySelection g = greedy_select(cands, data.y.rows(), zero_tol_rel, rank_tol);
    return reconstruct_dict(data.y, g.x_hat);
  });
}

inline TrialOutcome run_trial_detailed(const TrialSpec& spec, unsigned threads = 1) {
  const TrialData data = generate_trial_data(spec);
  return score_recovery(data, recovery_options_for(spec, threads));
}

inline double run_trial(const TrialSpec& spec) { return run_trial_detailed(spec).rel_error; }

// ---------------------------------------------------------------------------

struct PhaseConfig {
  std::vector<std::size_t> n_values{10, 20};
  std::vector<std::size_t> k_values{1, 2};
  std::size_t trials = 10;
  double p_rule = 5.0;
  Algorithm algorithm = Algorithm::dc;
  DictKind dict_kind = DictKind::gaussian_iid;
  bool precondition = true;
  std::uint64_t master_seed = 0;
  double success_threshold = 1e-4;
  std::string output_dir;

  void validate() const {
    if (n_values.empty() || k_values.empty()) throw ConfigError("PhaseConfig: empty n_values or k_values");
    if (trials < 1) throw ConfigError("PhaseConfig: trials must be at least 1");
    if (!(p_rule > 0.0)) throw ConfigError("PhaseConfig: p_rule must be positive");
    std::size_t min_n = n_values.front();
    for (std::size_t n : n_values) {
      if (n < 2) throw ConfigError("PhaseConfig: every n must be at least 2");
      min_n = std::min(min_n, n);
    }
    for (std::size_t k : k_values) {
      if (k < 1 || k > min_n) throw ConfigError("PhaseConfig: every k must lie in [1, min(n_values)]");
    }
    if (dict_kind == DictKind::hadamard) {
      for (std::size_t n : n_values)
        if (n & (n - 1)) throw ConfigError("PhaseConfig: hadamard dictionaries need power-of-two n");
    }
  }
};

inline void to_json(nlohmann::json& j, const PhaseConfig& c) {
  j = nlohmann::json{{"n_values", c.n_values},
                     {"k_values", c.k_values},
                     {"trials", c.trials},
                     {"p_rule", c.p_rule},
                     {"algorithm", to_string(c.algorithm)},
                     {"dict_kind", to_string(c.dict_kind)},
                     {"precondition", c.precondition},
                     {"master_seed", c.master_seed},
                     {"success_threshold", c.success_threshold},
                     {"output_dir", c.output_dir}};
}

inline void from_json(const nlohmann::json& j, PhaseConfig& c) {
  static const char* known[] = {"n_values",     "k_values",    "trials",           "p_rule",
                                "algorithm",    "dict_kind",   "precondition",     "master_seed",
                                "success_threshold", "output_dir"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
        std::end(known)) {
      throw ConfigError("PhaseConfig: unknown field '" + it.key() + "'");
    }
  }
  try {
    if (j.contains("n_values")) c.n_values = j.at("n_values").get<std::vector<std::size_t>>();
    if (j.contains("k_values")) c.k_values = j.at("k_values").get<std::vector<std::size_t>>();
    if (j.contains("trials")) c.trials = j.at("trials").get<std::size_t>();
    if (j.contains("p_rule")) c.p_rule = j.at("p_rule").get<double>();
    if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    if (j.contains("dict_kind")) c.dict_kind = parse_dict_kind(j.at("dict_kind").get<std::string>());
    if (j.contains("precondition")) c.precondition = j.at("precondition").get<bool>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("success_threshold")) c.success_threshold = j.at("success_threshold").get<double>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("PhaseConfig: ") + e.what());
  }
}

inline PhaseConfig load_phase_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  PhaseConfig c = j.get<PhaseConfig>();
  c.validate();
  return c;
}

struct PhaseCell {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> errors;
  double mean_error = 0.0;
  double success_rate = 0.0;
};

inline std::uint64_t trial_seed_for(const PhaseConfig& cfg, std::size_t n, std::size_t k, std::size_t trial) {
  return derive_seed(cfg.master_seed, {n, k, trial});
}

inline TrialSpec trial_spec_for(const PhaseConfig& cfg, std::size_t n, std::size_t k, std::size_t trial) {
  TrialSpec spec;
  spec.n = n;
  spec.k = k;
  spec.p = samples_for(n, cfg.p_rule);
  spec.algorithm = cfg.algorithm;
  spec.dict_kind = cfg.dict_kind;
  spec.precondition = cfg.precondition;
  spec.trial_seed = trial_seed_for(cfg, n, k, trial);
  return spec;
}

inline std::string format_grid_csv(const std::vector<PhaseCell>& cells) {
  std::string out = "n,k,trial,rel_error\n";
  char buf[96];
  for (const PhaseCell& c : cells)
    for (std::size_t t = 0; t < c.errors.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.10e\n", c.n, c.k, t, c.errors[t]);
      out += buf;
    }
  return out;
}

inline std::string format_summary_csv(const std::vector<PhaseCell>& cells) {
  std::string out = "n,k,mean_error,success_rate\n";
  char buf[96];
  for (const PhaseCell& c : cells) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.10e,%.10e\n", c.n, c.k, c.mean_error, c.success_rate);
    out += buf;
  }
  return out;
}

// ASCII PGM: n increases left to right, k increases bottom to top, pixel =
// round(255 * min(mean_error, 1)) with halves rounded up.
inline std::string format_pgm(const std::vector<PhaseCell>& cells) {
  std::vector<std::size_t> ns, ks;
  for (const PhaseCell& c : cells) {
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
    if (std::find(ks.begin(), ks.end(), c.k) == ks.end()) ks.push_back(c.k);
  }
  std::sort(ns.begin(), ns.end());
  std::sort(ks.begin(), ks.end());
  if (cells.empty() || ns.size() * ks.size() != cells.size()) {
    throw InputError("emit_pgm: cells do not form a rectangular (n, k) grid");
  }
  std::vector<int> pixel(cells.size(), -1);
  for (const PhaseCell& c : cells) {
    const auto col = static_cast<std::size_t>(std::find(ns.begin(), ns.end(), c.n) - ns.begin());
    const auto krow = static_cast<std::size_t>(std::find(ks.begin(), ks.end(), c.k) - ks.begin());
    const std::size_t row = ks.size() - 1 - krow;
    int& px = pixel[row * ns.size() + col];
    if (px != -1) throw InputError("emit_pgm: duplicate (n, k) cell");
    const double e = std::isnan(c.mean_error) ? 1.0 : std::clamp(c.mean_error, 0.0, 1.0);
    px = static_cast<int>(std::floor(255.0 * e + 0.5));
  }
  std::string out = "P2\n" + std::to_string(ns.size()) + " " + std::to_string(ks.size()) + "\n255\n";
  for (std::size_t r = 0; r < ks.size(); ++r) {
    for (std::size_t c = 0; c < ns.size(); ++c) {
      if (c) out += ' ';
      out += std::to_string(pixel[r * ns.size() + c]);
    }
    out += '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw InputError("write failed for " + path.string());
}

inline void emit_pgm(const std::vector<PhaseCell>& cells, const std::filesystem::path& path) {
  write_text(path, format_pgm(cells));
}

inline PhaseCell summarize_cell(std::size_t n, std::size_t k, std::vector<double> errors, double threshold) {
  PhaseCell cell{n, k, std::move(errors), 0.0, 0.0};
  double sum = 0.0;
  std::size_t ok = 0;
  for (double e : cell.errors) {
    sum += e;
    ok += e < threshold;
  }
  cell.mean_error = sum / static_cast<double>(cell.errors.size());
  cell.success_rate = static_cast<double>(ok) / static_cast<double>(cell.errors.size());
  return cell;
}

// Runs the full grid (cells in n-major, k-minor order). Trials are
// independent and seeded from (master_seed, n, k, trial), so results do not
// depend on the thread count. Writes outputs when cfg.output_dir is set.
inline std::vector<PhaseCell> run_grid(const PhaseConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t ncells = cfg.n_values.size() * cfg.k_values.size();
  std::vector<double> errors(ncells * cfg.trials, 0.0);
  parallel_for(errors.size(), threads, [&](std::size_t idx) {
    const std::size_t cell = idx / cfg.trials, trial = idx % cfg.trials;
    const std::size_t n = cfg.n_values[cell / cfg.k_values.size()];
    const std::size_t k = cfg.k_values[cell % cfg.k_values.size()];
    try {
      errors[idx] = run_trial(trial_spec_for(cfg, n, k, trial));
    } catch (const Error& e) {
      throw Error("cell (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ", trial=" +
                  std::to_string(trial) + "): " + e.what());
    }
  });

  std::vector<PhaseCell> cells;
  cells.reserve(ncells);
  for (std::size_t c = 0; c < ncells; ++c) {
    std::vector<double> e(errors.begin() + static_cast<std::ptrdiff_t>(c * cfg.trials),
                          errors.begin() + static_cast<std::ptrdiff_t>((c + 1) * cfg.trials));
    cells.push_back(summarize_cell(cfg.n_values[c / cfg.k_values.size()], cfg.k_values[c % cfg.k_values.size()],
                                   std::move(e), cfg.success_threshold));
  }

  if (!cfg.output_dir.empty()) {
    const std::filesystem::path dir(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
    write_text(dir / "grid.csv", format_grid_csv(cells));
    write_text(dir / "summary.csv", format_summary_csv(cells));
    emit_pgm(cells, dir / "phase.pgm");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json meta{{"config", cfg}, {"toolkit_version", kToolkitVersion}, {"wall_time_seconds", wall}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");
  }
  return cells;
}

inline nlohmann::json match_report_json(const MatchReport& m) {
  return nlohmann::json{{"assignment", m.assignment},
                        {"scales", m.scales},
                        {"rel_error", m.rel_error},
                        {"per_pair_cost", m.per_pair_cost}};
}

}  // namespace erspud

#pragma once

// Monte-Carlo and brute-force verifiers for the sparsity, concentration and
// LP-optimality properties that the recovery guarantees rest on.
//
// Probabilistic predicates carry 3-standard-error slack on empirical
// frequencies and means. Every check is a pure function of its arguments:
// each trial draws from derive_seed(seed, {trial, ...}) and results are
// aggregated as counts and sums, so the thread count never changes a report.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "erspud/densela.hpp"
#include "erspud/dictmetrics.hpp"
#include "erspud/error.hpp"
#include "erspud/l1lp.hpp"
#include "erspud/parallel.hpp"
#include "erspud/pipelines.hpp"
#include "erspud/randmodel.hpp"

namespace erspud {

struct CheckReport {
  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double statistic = 0.0;
  double bound = 0.0;
  bool pass = false;
  nlohmann::json details = nlohmann::json::object();
};

inline void to_json(nlohmann::json& j, const CheckReport& r) {
  j = nlohmann::json{{"name", r.name},           {"trials", r.trials}, {"violations", r.violations},
                     {"statistic", r.statistic}, {"bound", r.bound},   {"pass", r.pass},
                     {"details", r.details}};
}

namespace detail {

inline Mat bernoulli_gaussian(std::size_t n, std::size_t p, double theta, std::uint64_t seed,
                              ValueDist dist = ValueDist::gaussian) {
  return gen_coeffs({n, p, Bernoulli{theta}, dist, seed});
}

inline std::size_t exact_l0(std::span<const double> v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; }));
}

// Standard error of a Bernoulli frequency estimate.
inline double freq_se(double f, std::size_t samples) {
  return std::sqrt(std::max(f * (1.0 - f), 0.0) / static_cast<double>(samples));
}

inline std::vector<std::size_t> random_subset(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  return idx;
}

}  // namespace detail

// Rows of a Bernoulli-Gaussian X have at most (10/9) theta p nonzeros, and
// every combination of two or more rows has at least (11/9) theta p.
// `sample_constant` is the C in the guard p >= C n ln n.
inline CheckReport check_uniqueness_sparsity(std::size_t n, double theta, std::size_t p, std::size_t trials,
                                             std::uint64_t seed, double sample_constant = 1.0,
                                             unsigned threads = 1) {
  const double nd = static_cast<double>(n), pd = static_cast<double>(p);
  if (n < 2) throw ConfigError("check_uniqueness_sparsity: n must be at least 2");
  if (!(theta > 1.0 / nd && theta < 0.25)) throw ConfigError("check_uniqueness_sparsity: theta must lie in (1/n, 1/4)");
  if (pd < sample_constant * nd * std::log(nd)) {
    throw ConfigError("check_uniqueness_sparsity: p below the sample guard C n ln n");
  }
  if (trials < 1) throw ConfigError("check_uniqueness_sparsity: trials must be at least 1");

  const Mat x = detail::bernoulli_gaussian(n, p, theta, derive_seed(seed, {0}));
  const double row_bound = 10.0 / 9.0 * theta * pd;
  const double comb_bound = 11.0 / 9.0 * theta * pd;

  std::size_t row_violations = 0, max_row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t l0 = detail::exact_l0(x.row(i));
    max_row = std::max(max_row, l0);
    row_violations += static_cast<double>(l0) > row_bound;
  }

  std::vector<std::size_t> comb_l0(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {1, t}));
    const std::size_t support = 2 + rng.below(n - 1);
    Vec alpha(n, 0.0);
    for (std::size_t i : detail::random_subset(rng, n, support)) alpha[i] = rng.gaussian();
    comb_l0[t] = numerical_l0(vecmat(alpha, x), 1e-12);
  });
  std::size_t comb_violations = 0;
  for (std::size_t l0 : comb_l0) comb_violations += static_cast<double>(l0) < comb_bound;
  const std::size_t min_comb = *std::min_element(comb_l0.begin(), comb_l0.end());

  CheckReport r;
  r.name = "uniqueness_sparsity";
  r.trials = trials;
  r.violations = row_violations + comb_violations;
  r.statistic = static_cast<double>(max_row);
  r.bound = row_bound;
  r.pass = r.violations == 0;
  r.details = {{"row_violations", row_violations}, {"max_row_l0", max_row},
               {"row_bound", row_bound},           {"combination_violations", comb_violations},
               {"min_combination_l0", min_comb},   {"combination_bound", comb_bound}};
  return r;
}

// Maximum row l1 norm of X lies in [(1 - delta), (1 + delta)] * mu theta p.
inline CheckReport check_row_l1_concentration(std::size_t n, std::size_t p, double theta, double delta,
                                              std::uint64_t seed, ValueDist dist = ValueDist::gaussian) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("check_row_l1_concentration: delta must lie in (0, 1)");
  const Mat x = detail::bernoulli_gaussian(n, p, theta, derive_seed(seed, {0}), dist);
  double max_l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_l1 = std::max(max_l1, norm1(x.row(i)));
  const double center = mean_abs_value(dist) * theta * static_cast<double>(p);
  const double lo = (1.0 - delta) * center, hi = (1.0 + delta) * center;

  CheckReport r;
  r.name = "row_l1_concentration";
  r.trials = 1;
  r.statistic = max_l1;
  r.bound = center;
  r.pass = max_l1 >= lo && max_l1 <= hi;
  r.violations = r.pass ? 0 : 1;
  r.details = {{"lower", lo}, {"upper", hi}, {"mu", mean_abs_value(dist)}};
  return r;
}

// E|v^T x| >= (mu / 4) sqrt(theta / n) ||v||_1 for a Bernoulli-subgaussian x,
// checked as estimate >= bound - 3 SE.
inline CheckReport check_avg_lower_bound(std::size_t n, double theta, const Vec& v, std::size_t samples,
                                         std::uint64_t seed, ValueDist dist = ValueDist::gaussian) {
  if (v.size() != n) throw DimensionError("check_avg_lower_bound: v must have length n");
  if (static_cast<double>(n) * theta < 2.0) throw ConfigError("check_avg_lower_bound: need n theta >= 2");
  if (theta > 1.0) throw ConfigError("check_avg_lower_bound: theta must be at most 1");
  if (samples < 2) throw ConfigError("check_avg_lower_bound: need at least two samples");
  Rng rng(derive_seed(seed, {0}));
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool on = rng.uniform() < theta;
      const double value = draw_value(rng, dist);
      if (on) acc += v[i] * value;
    }
    const double a = std::abs(acc);
    sum += a;
    sumsq += a * a;
  }
  const double ns = static_cast<double>(samples);
  const double mean = sum / ns;
  const double var = std::max(sumsq / ns - mean * mean, 0.0) * ns / (ns - 1.0);
  const double se = std::sqrt(var / ns);
  const double bound = mean_abs_value(dist) / 4.0 * std::sqrt(theta / static_cast<double>(n)) * norm1(v);

  CheckReport r;
  r.name = "avg_lower_bound";
  r.trials = samples;
  r.statistic = mean;
  r.bound = bound;
  r.pass = mean >= bound - 3.0 * se;
  r.violations = r.pass ? 0 : 1;
  r.details = {{"standard_error", se}};
  return r;
}

// For a standard gaussian d-vector with sorted magnitudes s1 >= s2:
// P(s1 > 4 sqrt(ln d)) <= d^-3 and P(1 - s2/s1 < alpha / ln n) < 1/2.
inline CheckReport check_gap_statistics(std::size_t d, std::size_t n, double alpha, std::size_t samples,
                                        std::uint64_t seed) {
  if (d < 2 || d > n) throw ConfigError("check_gap_statistics: need 2 <= d <= n");
  if (alpha < 0.0) throw ConfigError("check_gap_statistics: alpha must be non-negative");
  if (samples < 1) throw ConfigError("check_gap_statistics: samples must be at least 1");
  const double big = 4.0 * std::sqrt(std::log(static_cast<double>(d)));
  const double gap_level = alpha / std::log(static_cast<double>(n));
  Rng rng(derive_seed(seed, {0}));
  std::size_t large = 0, small_gap = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double g = std::abs(rng.gaussian());
      if (g > s1) {
        s2 = s1;
        s1 = g;
      } else if (g > s2) {
        s2 = g;
      }
    }
    large += s1 > big;
    small_gap += 1.0 - s2 / s1 < gap_level;
  }
  const double ns = static_cast<double>(samples);
  const double f_large = static_cast<double>(large) / ns, f_gap = static_cast<double>(small_gap) / ns;
  const double large_bound = std::pow(static_cast<double>(d), -3.0);
  const bool large_ok = f_large <= large_bound + 3.0 * detail::freq_se(f_large, samples);
  const bool gap_ok = f_gap < 0.5 + 3.0 * detail::freq_se(f_gap, samples);

  CheckReport r;
  r.name = "gap_statistics";
  r.trials = samples;
  r.violations = (large_ok ? 0 : 1) + (gap_ok ? 0 : 1);
  r.statistic = f_gap;
  r.bound = 0.5;
  r.pass = large_ok && gap_ok;
  r.details = {{"max_magnitude_frequency", f_large}, {"max_magnitude_bound", large_bound},
               {"max_magnitude_pass", large_ok},     {"small_gap_frequency", f_gap},
               {"small_gap_level", gap_level},       {"small_gap_pass", gap_ok}};
  return r;
}

// Solving min ||z^T X||_1 s.t. b^T z = 1 gives supp(z) within supp(b).
inline CheckReport check_p1_support(std::size_t n, std::size_t p, double theta, std::size_t b_sparsity,
                                    std::size_t trials, std::uint64_t seed, double zero_tol_rel = 1e-6,
                                    unsigned threads = 1) {
  if (b_sparsity < 1 || b_sparsity > n) throw ConfigError("check_p1_support: b_sparsity must lie in [1, n]");
  if (static_cast<double>(b_sparsity) > 1.0 / (8.0 * theta)) {
    throw ConfigError("check_p1_support: b_sparsity exceeds 1 / (8 theta)");
  }
  if (trials < 1) throw ConfigError("check_p1_support: trials must be at least 1");
  std::vector<char> bad(trials, 0);
  std::vector<std::size_t> outside(trials, 0);
  parallel_for(trials, threads, [&](std::size_t t) {
    const Mat x = detail::bernoulli_gaussian(n, p, theta, derive_seed(seed, {t, 0}));
    Rng rng(derive_seed(seed, {t, 1}));
    Vec b(n, 0.0);
    std::vector<char> in_support(n, 0);
    for (std::size_t i : detail::random_subset(rng, n, b_sparsity)) {
      b[i] = rng.gaussian();
      in_support[i] = 1;
    }
    const RowRecoverySolution sol = solve_row_recovery(x, b);
    if (sol.status != LpStatus::optimal) {
      bad[t] = 1;
      return;
    }
    const double cutoff = zero_tol_rel * norm_inf(sol.w);
    for (std::size_t i = 0; i < n; ++i) outside[t] += !in_support[i] && std::abs(sol.w[i]) > cutoff;
    bad[t] = outside[t] > 0;
  });

  CheckReport r;
  r.name = "p1_support";
  r.trials = trials;
  r.violations = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
  r.statistic = static_cast<double>(*std::max_element(outside.begin(), outside.end()));
  r.bound = 0.0;
  r.pass = r.violations == 0;
  r.details = {{"max_entries_outside_support", r.statistic}};
  return r;
}

// On s random rows of X with b gapped (|b|_(2) <= (1 - gamma) |b|_(1)), the
// restricted LP solution is 1-sparse at the largest entry of b.
inline CheckReport check_p2_onesparse(std::size_t n, std::size_t p, double theta, std::size_t s, double gamma,
                                      std::size_t trials, std::uint64_t seed, double zero_tol_rel = 1e-6,
                                      unsigned threads = 1) {
  if (s < 1 || s > n) throw ConfigError("check_p2_onesparse: s must lie in [1, n]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("check_p2_onesparse: gamma must lie in (0, 1]");
  if (!(theta * static_cast<double>(s) < gamma / 8.0)) throw ConfigError("check_p2_onesparse: need theta s < gamma / 8");
  if (trials < 1) throw ConfigError("check_p2_onesparse: trials must be at least 1");
  std::vector<char> bad(trials, 0);
  parallel_for(trials, threads, [&](std::size_t t) {
    const Mat x = detail::bernoulli_gaussian(n, p, theta, derive_seed(seed, {t, 0}));
    Rng rng(derive_seed(seed, {t, 1}));
    const auto rows = detail::random_subset(rng, n, s);
    Mat xj(s, p);
    for (std::size_t i = 0; i < s; ++i) std::copy(x.row(rows[i]).begin(), x.row(rows[i]).end(), xj.row(i).begin());
    Vec b(s);
    for (double& v : b) v = rng.gaussian();
    std::size_t top = 0;
    for (std::size_t i = 1; i < s; ++i)
      if (std::abs(b[i]) > std::abs(b[top])) top = i;
    double second = 0.0;
    for (std::size_t i = 0; i < s; ++i)
      if (i != top) second = std::max(second, std::abs(b[i]));
    if (second > (1.0 - gamma) * std::abs(b[top])) {
      const double shrink = (1.0 - gamma) * std::abs(b[top]) / second;
      for (std::size_t i = 0; i < s; ++i)
        if (i != top) b[i] *= shrink;
    }
    const RowRecoverySolution sol = solve_row_recovery(xj, b);
    if (sol.status != LpStatus::optimal) {
      bad[t] = 1;
      return;
    }
    const double cutoff = zero_tol_rel * norm_inf(sol.w);
    bool one_sparse = std::abs(sol.w[top]) > cutoff;
    for (std::size_t i = 0; i < s; ++i)
      if (i != top && std::abs(sol.w[i]) > cutoff) one_sparse = false;
    bad[t] = !one_sparse;
  });

  CheckReport r;
  r.name = "p2_onesparse";
  r.trials = trials;
  r.violations = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
  r.statistic = static_cast<double>(r.violations);
  r.bound = 0.0;
  r.pass = r.violations == 0;
  return r;
}

// For each column b = X e_j, compares the dense feasible point
// v = sign(b) / ||b||_1 with the best 1-sparse feasible point e_i / b_i.
// Reports the fraction of columns where v is strictly better. A dense win
// must beat the sparse objective by a relative margin of `tie_tol`.
inline CheckReport check_ub_mechanism_at(std::size_t n, std::size_t p, double theta, std::uint64_t seed,
                                         double tie_tol = 1e-12, unsigned threads = 1) {
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("check_ub_mechanism: theta must lie in (0, 1)");
  const Mat x = detail::bernoulli_gaussian(n, p, theta, derive_seed(seed, {0}));
  Vec row_l1(n);
  for (std::size_t i = 0; i < n; ++i) row_l1[i] = norm1(x.row(i));

  std::vector<char> dense_wins(p, 0), empty(p, 0);
  parallel_for(p, threads, [&](std::size_t j) {
    const Vec b = x.col(j);
    const double b1 = norm1(b);
    if (b1 == 0.0) {
      empty[j] = 1;
      return;
    }
    Vec v(n, 0.0);
    double best_sparse = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (b[i] == 0.0) continue;
      v[i] = (b[i] > 0 ? 1.0 : -1.0) / b1;
      best_sparse = std::min(best_sparse, row_l1[i] / std::abs(b[i]));
    }
    dense_wins[j] = row_objective(x, v) < best_sparse * (1.0 - tie_tol);
  });

  const auto wins = static_cast<std::size_t>(std::count(dense_wins.begin(), dense_wins.end(), 1));
  CheckReport r;
  r.name = "ub_mechanism";
  r.trials = p;
  r.violations = p - wins;
  r.statistic = static_cast<double>(wins) / static_cast<double>(p);
  r.bound = 0.5;
  r.pass = r.statistic > 0.5;
  r.details = {{"theta", theta},
               {"dense_wins", wins},
               {"empty_columns", static_cast<std::size_t>(std::count(empty.begin(), empty.end(), 1))}};
  return r;
}

// theta = sqrt(beta ln n / n).
inline CheckReport check_ub_mechanism(std::size_t n, std::size_t p, double beta, std::uint64_t seed,
                                      unsigned threads = 1) {
  if (n < 2 || !(beta > 0.0)) throw ConfigError("check_ub_mechanism: need n >= 2 and beta > 0");
  const double theta = std::sqrt(beta * std::log(static_cast<double>(n)) / static_cast<double>(n));
  if (!(theta < 1.0)) throw ConfigError("check_ub_mechanism: sqrt(beta ln n / n) must be below 1");
  CheckReport r = check_ub_mechanism_at(n, p, theta, seed, 1e-12, threads);
  r.details["beta"] = beta;
  return r;
}

// ---------------------------------------------------------------------------

struct RowspanDirection {
  Vec w;  // weights, w^T Y = s
  Vec s;
  std::size_t l0 = 0;
};

// All row-span directions whose zero set contains at least p - max_support
// columns, deduplicated up to scale and sorted by (l0, discovery order).
// Subsets are visited in increasing bitmask order. Needs full row rank Y.
inline std::vector<RowspanDirection> sparse_rowspan_directions(const Mat& y, std::size_t max_support,
                                                               double zero_tol_rel = 1e-9) {
  const std::size_t n = y.rows(), p = y.cols();
  if (n < 1 || n > 5 || p > 12) throw InputError("bruteforce_sparsest_rowspan: needs 1 <= n <= 5 and p <= 12");
  if (!y.all_finite()) throw InputError("bruteforce_sparsest_rowspan: Y has non-finite entries");
  if (rank_with_tol(y) != n) throw InputError("bruteforce_sparsest_rowspan: Y must have full row rank");
  const double scale = std::max(y.frobenius() * y.frobenius(), 1e-300);
  const std::size_t min_zeros = max_support >= p ? 0 : p - max_support;

  std::vector<RowspanDirection> found;
  for (std::uint32_t mask = 0; mask < (1u << p); ++mask) {
    const auto zeros = static_cast<std::size_t>(std::popcount(mask));
    if (zeros < min_zeros || zeros + 1 < n) continue;
    Mat g(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        double acc = 0.0;
        for (std::size_t j = 0; j < p; ++j)
          if (mask >> j & 1u) acc += y(a, j) * y(b, j);
        g(a, b) = acc;
      }
    const SymEigen eig = jacobi_eigen(g);
    std::size_t null_dim = 0, null_idx = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (eig.values[k] <= 1e-10 * scale) {
        ++null_dim;
        null_idx = k;
      }
    }
    if (null_dim != 1) continue;
    Vec w = eig.vectors.col(null_idx);
    Vec s = vecmat(w, y);
    const std::size_t l0 = numerical_l0(s, zero_tol_rel);
    if (l0 == 0 || l0 > max_support) continue;
    const bool seen = std::any_of(found.begin(), found.end(), [&](const RowspanDirection& d) {
      return scaled_row_distance(d.s, s) <= 1e-9;
    });
    if (!seen) found.push_back({std::move(w), std::move(s), l0});
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const RowspanDirection& a, const RowspanDirection& b) { return a.l0 < b.l0; });
  return found;
}

struct SparsestRowspan {
  Vec s;
  std::size_t l0 = 0;
};

inline SparsestRowspan bruteforce_sparsest_rowspan(const Mat& y, std::size_t max_support) {
  const auto dirs = sparse_rowspan_directions(y, max_support);
  if (dirs.empty()) throw InputError("bruteforce_sparsest_rowspan: no direction with at most max_support nonzeros");
  return {dirs.front().s, dirs.front().l0};
}

// Toy-scale uniqueness: on `instances` seeded Y = A X with one nonzero per
// column of X, the n sparsest independent row-span directions found by
// enumeration are the rows of X up to scale, and single-column candidates
// followed by greedy selection pick the same rows. An instance violates if
// either comparison fails. Rank-deficient X draws are redrawn.
inline CheckReport check_toy_rowspan(std::size_t n, std::size_t p, std::size_t instances, std::uint64_t seed,
                                     double match_tol = 1e-8) {
  if (n > 5 || p > 12 || n < 1 || p < n) throw ConfigError("check_toy_rowspan: needs 1 <= n <= 5 and n <= p <= 12");
  std::size_t brute_misses = 0, sc_misses = 0, redraws = 0;
  std::vector<std::size_t> bad;
  for (std::size_t t = 0; t < instances; ++t) {
    const Mat a = gen_dict({n, DictKind::gaussian_iid, derive_seed(seed, {t, 0})});
    Mat x;
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt == 10) throw DataGenerationError("check_toy_rowspan: no full-rank coefficient draw");
      x = gen_coeffs({n, p, FixedK{1}, ValueDist::gaussian, derive_seed(seed, {t, 1, attempt})});
      if (rank_with_tol(x) == n) break;
      ++redraws;
    }
    const Mat y = matmul(a, x);
    auto matches_some_row = [&](std::span<const double> s) {
      for (std::size_t i = 0; i < n; ++i)
        if (scaled_row_distance(s, x.row(i)) <= match_tol) return true;
      return false;
    };

    const auto dirs = sparse_rowspan_directions(y, p);
    std::vector<Vec> basis;
    std::size_t taken = 0;
    bool brute_ok = true;
    for (const RowspanDirection& d : dirs) {
      if (taken == n) break;
      if (auto q = orthobasis_append(basis, d.s, 1e-8)) {
        basis.push_back(std::move(*q));
        ++taken;
        brute_ok = brute_ok && matches_some_row(d.s);
      }
    }
    brute_ok = brute_ok && taken == n;

    bool sc_ok = true;
    try {
      const GreedySelection g = greedy_select(spud_sc(y), n);
      for (std::size_t i = 0; i < n; ++i) sc_ok = sc_ok && matches_some_row(g.x_hat.row(i));
    } catch (const RankDeficiencyError&) {
      sc_ok = false;
    }
    brute_misses += !brute_ok;
    sc_misses += !sc_ok;
    if (!brute_ok || !sc_ok) bad.push_back(t);
  }

  CheckReport r;
  r.name = "toy_rowspan";
  r.trials = instances;
  r.violations = bad.size();
  r.statistic = static_cast<double>(bad.size());
  r.bound = 0.0;
  r.pass = bad.empty();
  r.details = {{"enumeration_mismatches", brute_misses},
               {"single_column_mismatches", sc_misses},
               {"failing_instances", bad},
               {"coefficient_redraws", redraws}};
  return r;
}

}  // namespace erspud

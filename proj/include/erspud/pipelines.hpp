#pragma once

// Candidate generation (single column, column pair, iterative projection,
// elementary-vector baseline), greedy selection of n independent sparse rows,
// and dictionary reconstruction A = Y Y^T (X Y^T)^{-1}.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "erspud/candidates.hpp"
#include "erspud/densela.hpp"
#include "erspud/error.hpp"
#include "erspud/l1lp.hpp"
#include "erspud/parallel.hpp"
#include "erspud/randmodel.hpp"

namespace erspud {

struct PipelineOptions {
  LpOptions lp;
  unsigned threads = 1;
};

namespace detail {

// Solves one LP per constraint vector and keeps the feasible ones, in input
// order regardless of how the solves are scheduled.
inline CandidateSet solve_batch(const Mat& y, const std::vector<std::pair<Vec, CandidateSource>>& constraints,
                                const PipelineOptions& opt) {
  std::vector<std::optional<RowRecoverySolution>> sols(constraints.size());
  parallel_for(constraints.size(), opt.threads, [&](std::size_t i) {
    const Vec& r = constraints[i].first;
    if (norm_inf(r) == 0.0) return;
    RowRecoverySolution sol = solve_row_recovery(y, r, opt.lp);
    if (sol.status == LpStatus::optimal) sols[i] = std::move(sol);
  });
  CandidateSet out;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (!sols[i]) {
      out.skipped.push_back(i);
      continue;
    }
    out.candidates.push_back({std::move(sols[i]->w), std::move(sols[i]->s), sols[i]->objective,
                              constraints[i].second});
  }
  return out;
}

}  // namespace detail

// One LP per column: r = Y e_j.
inline CandidateSet spud_sc(const Mat& y, const PipelineOptions& opt = {}) {
  std::vector<std::pair<Vec, CandidateSource>> constraints;
  constraints.reserve(y.cols());
  for (std::size_t j = 0; j < y.cols(); ++j) {
    constraints.emplace_back(y.col(j), CandidateSource{CandidateSource::Kind::column, j, 0});
  }
  CandidateSet out = detail::solve_batch(y, constraints, opt);
  if (out.empty()) throw RankDeficiencyError("spud_sc: every column of Y is zero", 0);
  return out;
}

// Uniformly random perfect matching of the columns. For odd p the column left
// in the last slot of the shuffle is dropped.
inline std::vector<std::pair<std::size_t, std::size_t>> dc_pairing(std::size_t p, std::uint64_t seed) {
  if (p < 2) throw ConfigError("spud_dc: need at least two columns");
  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = p - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(p / 2);
  for (std::size_t k = 0; k + 1 < p; k += 2) {
    pairs.emplace_back(std::min(perm[k], perm[k + 1]), std::max(perm[k], perm[k + 1]));
  }
  return pairs;
}

// One LP per random column pair: r = Y e_j1 + Y e_j2.
inline CandidateSet spud_dc(const Mat& y, std::uint64_t pair_seed, const PipelineOptions& opt = {}) {
  const auto pairs = dc_pairing(y.cols(), pair_seed);
  std::vector<std::pair<Vec, CandidateSource>> constraints;
  constraints.reserve(pairs.size());
  for (auto [a, b] : pairs) {
    Vec r(y.rows());
    for (std::size_t i = 0; i < y.rows(); ++i) r[i] = y(i, a) + y(i, b);
    constraints.emplace_back(std::move(r), CandidateSource{CandidateSource::Kind::column_pair, a, b});
  }
  CandidateSet out = detail::solve_batch(y, constraints, opt);
  if (out.empty()) throw RankDeficiencyError("spud_dc: every column pair sums to zero", 0);
  return out;
}

// Baseline with elementary constraint vectors r = e_i.
inline CandidateSet siv_baseline(const Mat& y, const PipelineOptions& opt = {}) {
  std::vector<std::pair<Vec, CandidateSource>> constraints;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    Vec e(y.rows(), 0.0);
    e[i] = 1.0;
    constraints.emplace_back(std::move(e), CandidateSource{CandidateSource::Kind::basis_vector, i, 0});
  }
  return detail::solve_batch(y, constraints, opt);
}

struct GreedySelection {
  Mat x_hat;                        // n x p, accepted rows in selection order
  std::vector<std::size_t> chosen;  // indices into the candidate set
};

// Scans candidates by ascending numerical l0 (stable, so ties keep insertion
// order) and accepts each one that raises the rank of the accepted set.
inline GreedySelection greedy_select(const CandidateSet& cands, std::size_t n, double zero_tol_rel = 1e-6,
                                     double rank_tol = 1e-8) {
  if (cands.empty()) throw RankDeficiencyError("greedy_select: no candidates", 0);
  std::vector<std::size_t> l0(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) l0[i] = numerical_l0(cands.candidates[i].s, zero_tol_rel);
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return l0[a] < l0[b]; });

  GreedySelection out;
  std::vector<Vec> basis;
  std::vector<Vec> rows;
  for (std::size_t idx : order) {
    if (rows.size() == n) break;
    const Vec& s = cands.candidates[idx].s;
    if (auto q = orthobasis_append(basis, s, rank_tol)) {
      basis.push_back(std::move(*q));
      rows.push_back(s);
      out.chosen.push_back(idx);
    }
  }
  if (rows.size() < n) {
    throw RankDeficiencyError("greedy_select: found only " + std::to_string(rows.size()) + " of " +
                                  std::to_string(n) + " independent candidates",
                              rows.size());
  }
  out.x_hat = Mat::from_rows(rows);
  return out;
}

// A_hat = Y Y^T (X_hat Y^T)^{-1}, computed as the solution of
// (X_hat Y^T)^T A_hat^T = Y Y^T.
inline Mat reconstruct_dict(const Mat& y, const Mat& x_hat) {
  if (x_hat.cols() != y.cols() || x_hat.rows() != y.rows()) {
    throw DimensionError("reconstruct_dict: X_hat must have the shape of Y");
  }
  const Mat yt = y.transpose();
  const Mat xyt = matmul(x_hat, yt);
  const Mat yyt = gram_rows(y);
  try {
    return solve_linear(xyt.transpose(), yyt).transpose();
  } catch (const SingularMatrixError& e) {
    throw ReconstructionError(std::string("reconstruct_dict: X_hat Y^T is singular: ") + e.what());
  }
}

struct Preconditioned {
  Mat yp;         // T Y, with orthonormal rows
  Mat transform;  // T = (Y Y^T)^{-1/2}
};

inline Preconditioned precondition(const Mat& y) {
  try {
    Mat t = inv_sqrt_spd(gram_rows(y));
    Mat yp = matmul(t, y);
    return {std::move(yp), std::move(t)};
  } catch (const NotSpdError& e) {
    throw RankDeficiencyError(std::string("precondition: Y Y^T is not positive definite: ") + e.what(), 0);
  }
}

// Candidates found on T Y carry weights w' with w'^T (T Y) = (T w')^T Y.
inline void map_weights_back(CandidateSet& cands, const Mat& transform) {
  for (Candidate& c : cands.candidates) c.w = matvec(transform, c.w);
}

struct RecoveryResult {
  Mat x_hat;
  Mat a_hat;
  std::vector<std::size_t> chosen;  // indices into candidates
  double zero_tol_used = 1e-6;
  CandidateSet candidates;
};

// Iterative projections: n rounds, each solving the LP with constraint
// (P Y e_j)^T w = 1 for the first cols_per_round columns (0 = all), where P
// projects away the weights already chosen. The sparsest solution of each
// round is kept.
inline RecoveryResult spud_proj(const Mat& y, std::size_t cols_per_round = 0, double zero_tol_rel = 1e-6,
                                const PipelineOptions& opt = {}) {
  const std::size_t n = y.rows(), p = y.cols();
  if (cols_per_round == 0) cols_per_round = p;
  if (cols_per_round > p) throw ConfigError("spud_proj: cols_per_round exceeds column count");

  RecoveryResult result;
  result.zero_tol_used = zero_tol_rel;
  std::vector<Vec> basis;
  std::vector<Vec> weights;
  for (std::size_t round = 0; round < n; ++round) {
    std::vector<std::optional<RowRecoverySolution>> sols(cols_per_round);
    parallel_for(cols_per_round, opt.threads, [&](std::size_t j) {
      const Vec r = y.col(j);
      if (norm_inf(r) == 0.0) return;
      RowRecoverySolution sol = solve_projected_row_recovery(y, r, basis, opt.lp);
      if (sol.status == LpStatus::optimal) sols[j] = std::move(sol);
    });
    std::size_t best = cols_per_round;
    std::size_t best_l0 = 0;
    for (std::size_t j = 0; j < cols_per_round; ++j) {
      if (!sols[j]) continue;
      const std::size_t l0 = numerical_l0(sols[j]->s, zero_tol_rel);
      if (best == cols_per_round || l0 < best_l0) {
        best = j;
        best_l0 = l0;
      }
    }
    if (best == cols_per_round) {
      throw RankDeficiencyError("spud_proj: round " + std::to_string(round) + " produced no feasible solve",
                                round);
    }
    RowRecoverySolution& sol = *sols[best];
    auto q = orthobasis_append(basis, sol.w, 1e-12);
    if (!q) throw RankDeficiencyError("spud_proj: chosen weight lies in the span of earlier rounds", round);
    basis.push_back(std::move(*q));
    result.chosen.push_back(result.candidates.size());
    result.candidates.candidates.push_back(
        {sol.w, sol.s, sol.objective, CandidateSource{CandidateSource::Kind::projected_column, best, round}});
    weights.push_back(std::move(sol.w));
  }
  const Mat w = Mat::from_rows(weights);
  result.x_hat = matmul(w, y);
  result.a_hat = reconstruct_dict(y, result.x_hat);
  return result;
}

enum class Algorithm { sc, dc, proj, siv };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::sc: return "sc";
    case Algorithm::dc: return "dc";
    case Algorithm::proj: return "proj";
    case Algorithm::siv: return "siv";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "sc") return Algorithm::sc;
  if (s == "dc") return Algorithm::dc;
  if (s == "proj") return Algorithm::proj;
  if (s == "siv") return Algorithm::siv;
  throw ConfigError("unknown algorithm '" + s + "' (expected sc, dc, proj or siv)");
}

struct RecoveryOptions {
  Algorithm algorithm = Algorithm::dc;
  bool precondition = true;
  double zero_tol_rel = 1e-6;
  double rank_tol = 1e-8;
  std::uint64_t pair_seed = 0;      // dc only
  std::size_t cols_per_round = 0;   // proj only; 0 = all columns
  PipelineOptions pipeline;
};

// Full pipeline: optional preconditioning, candidate generation, greedy
// selection and reconstruction against the original Y.
inline RecoveryResult recover(const Mat& y, const RecoveryOptions& opt) {
  std::optional<Preconditioned> pre;
  if (opt.precondition) pre = precondition(y);
  const Mat& work = pre ? pre->yp : y;

  if (opt.algorithm == Algorithm::proj) {
    RecoveryResult r = spud_proj(work, opt.cols_per_round, opt.zero_tol_rel, opt.pipeline);
    if (pre) {
      map_weights_back(r.candidates, pre->transform);
      r.a_hat = reconstruct_dict(y, r.x_hat);
    }
    return r;
  }

  CandidateSet cands;
  switch (opt.algorithm) {
    case Algorithm::sc: cands = spud_sc(work, opt.pipeline); break;
    case Algorithm::dc: cands = spud_dc(work, opt.pair_seed, opt.pipeline); break;
    case Algorithm::siv: cands = siv_baseline(work, opt.pipeline); break;
    case Algorithm::proj: break;
  }
  if (pre) map_weights_back(cands, pre->transform);

  GreedySelection sel = greedy_select(cands, y.rows(), opt.zero_tol_rel, opt.rank_tol);
  RecoveryResult r;
  r.a_hat = reconstruct_dict(y, sel.x_hat);
  r.x_hat = std::move(sel.x_hat);
  r.chosen = std::move(sel.chosen);
  r.zero_tol_used = opt.zero_tol_rel;
  r.candidates = std::move(cands);
  return r;
}

}  // namespace erspud

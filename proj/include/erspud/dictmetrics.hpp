#pragma once

// Dictionary recovery metrics.
//
// rel_error(A_hat, A) = min over permutations P and diagonal scalings L of
// ||A_hat L P - A||_F / ||A||_F. The squared Frobenius norm splits over
// columns, so the minimum is an assignment problem: the cost of sending
// column i of A_hat onto column j of A is min_l ||l a_hat_i - a_j||^2, with
// the closed-form optimum l = <a_hat_i, a_j> / ||a_hat_i||^2. Hungarian
// matching then gives the exact minimum over P.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "erspud/candidates.hpp"
#include "erspud/densela.hpp"
#include "erspud/error.hpp"

namespace erspud {

struct Assignment {
  std::vector<std::size_t> row_to_col;
  double total = 0.0;
};

// Minimum-cost perfect matching on a square cost matrix (O(n^3) potentials).
inline Assignment hungarian(const Mat& cost) {
  if (cost.rows() != cost.cols()) throw DimensionError("hungarian: cost matrix must be square");
  const std::size_t n = cost.rows();
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  out.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[match[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.total += cost(i, out.row_to_col[i]);
  return out;
}

struct MatchReport {
  std::vector<std::size_t> assignment;  // column i of A_hat -> column assignment[i] of A
  Vec scales;                           // per A_hat column
  double rel_error = 0.0;
  Vec per_pair_cost;  // squared residual of each matched pair
};

namespace detail {

// Best scale and squared residual for fitting a_j by l * a_hat_i, with the
// residual summed entrywise.
inline std::pair<double, double> fit_column(const Mat& a_hat, std::size_t i, const Mat& a, std::size_t j) {
  const std::size_t n = a.rows();
  double hh = 0.0, ha = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    hh += a_hat(k, i) * a_hat(k, i);
    ha += a_hat(k, i) * a(k, j);
  }
  const double scale = hh > 0.0 ? ha / hh : 0.0;
  double res = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = scale * a_hat(k, i) - a(k, j);
    res += d * d;
  }
  return {scale, res};
}

}  // namespace detail

inline MatchReport rel_error(const Mat& a_hat, const Mat& a) {
  if (a_hat.rows() != a.rows() || a_hat.cols() != a.cols() || a.rows() != a.cols()) {
    throw DimensionError("rel_error: both matrices must be n x n of equal size");
  }
  const std::size_t n = a.cols();
  Mat cost(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost(i, j) = detail::fit_column(a_hat, i, a, j).second;
  Assignment match = hungarian(cost);

  MatchReport report;
  report.assignment = match.row_to_col;
  report.scales.resize(n);
  report.per_pair_cost.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto [scale, res] = detail::fit_column(a_hat, i, a, match.row_to_col[i]);
    report.scales[i] = scale;
    report.per_pair_cost[i] = res;
    total += res;
  }
  const double norm_a = a.frobenius();
  if (norm_a == 0.0) throw InputError("rel_error: reference dictionary is zero");
  report.rel_error = std::sqrt(total) / norm_a;
  return report;
}

// Scale-free distance min_l ||l s - x|| / ||x||.
inline double scaled_row_distance(std::span<const double> s, std::span<const double> x) {
  const double ss = dot(s, s), sx = dot(s, x);
  const double scale = ss > 0.0 ? sx / ss : 0.0;
  double res = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = scale * s[k] - x[k];
    res += d * d;
  }
  return std::sqrt(res) / norm2(x);
}

struct RowsRecoveredReport {
  std::size_t recovered = 0;
  std::vector<std::size_t> zero_rows;  // skipped: nothing to recover
};

inline RowsRecoveredReport count_rows_recovered(const CandidateSet& cands, const Mat& x_true, double tol) {
  if (!(tol > 0.0)) throw ConfigError("rows_recovered: tol must be positive");
  RowsRecoveredReport report;
  for (std::size_t i = 0; i < x_true.rows(); ++i) {
    auto xi = x_true.row(i);
    if (norm2(xi) == 0.0) {
      report.zero_rows.push_back(i);
      continue;
    }
    for (const Candidate& c : cands.candidates) {
      if (c.s.size() != xi.size()) throw DimensionError("rows_recovered: candidate length mismatch");
      if (scaled_row_distance(c.s, xi) <= tol) {
        ++report.recovered;
        break;
      }
    }
  }
  return report;
}

inline std::size_t rows_recovered(const CandidateSet& cands, const Mat& x_true, double tol) {
  return count_rows_recovered(cands, x_true, tol).recovered;
}

}  // namespace erspud

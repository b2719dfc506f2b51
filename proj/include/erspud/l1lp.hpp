#pragma once

// l1 row recovery:
//
//   minimize ||w^T Y||_1  subject to  r^T w = 1,        Y in R^{n x p}.
//
// The solver works on the Lagrangian dual
//
//   maximize lambda  subject to  Y mu = lambda r,  -1 <= mu_j <= 1,
//
// with n equality rows and p + 1 columns. A bounded-variable revised simplex
// solves it to an optimal basis; the simplex multipliers of that basis are an
// optimal vertex w of the primal, and every basic mu_j has (w^T Y)_j = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "erspud/densela.hpp"
#include "erspud/error.hpp"

namespace erspud {

struct RowRecoveryProblem {
  Mat y;
  Vec r;
};

enum class LpStatus { optimal, infeasible };

inline const char* to_string(LpStatus s) { return s == LpStatus::optimal ? "optimal" : "infeasible"; }

struct RowRecoverySolution {
  Vec w;               // length n
  Vec s;               // length p, s = Y^T w
  double objective = 0.0;
  LpStatus status = LpStatus::infeasible;
  std::size_t iterations = 0;
};

struct LpOptions {
  double pivot_tol = 1e-10;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  // Pivots between refactorizations of the basis inverse.
  std::size_t refactor_every = 50;
};

namespace detail {

class BoundedDualSimplex {
  enum class Status { basic, at_lower, at_upper, free_zero };
  static constexpr double kInf = std::numeric_limits<double>::infinity();

 public:
  BoundedDualSimplex(const Mat& y, std::span<const double> r, const LpOptions& opt)
      : y_(y), r_(r), opt_(opt), n_(y.rows()), p_(y.cols()), nvar_(p_ + 1 + n_) {
    lower_.assign(nvar_, 0.0);
    upper_.assign(nvar_, 0.0);
    cost_.assign(nvar_, 0.0);
    x_.assign(nvar_, 0.0);
    status_.assign(nvar_, Status::at_lower);
    sigma_.assign(n_, 1.0);
    for (std::size_t j = 0; j < p_; ++j) {
      lower_[j] = -1.0;
      upper_[j] = 1.0;
    }
    lower_[lambda()] = -kInf;
    upper_[lambda()] = kInf;
    status_[lambda()] = Status::free_zero;
  }

  RowRecoverySolution solve() {
    start_phase_one();
    iterate();
    double infeas = 0.0;
    for (std::size_t i = 0; i < n_; ++i) infeas += x_[art(i)];
    if (infeas > 1e-7 * std::max(1.0, y_.max_abs() * static_cast<double>(p_))) {
      throw Error("row recovery LP: phase one did not reach feasibility (residual " +
                  std::to_string(infeas) + ")");
    }
    start_phase_two();
    iterate();
    return extract();
  }

 private:
  std::size_t lambda() const { return p_; }
  std::size_t art(std::size_t i) const { return p_ + 1 + i; }
  bool is_art(std::size_t j) const { return j > p_; }

  // Column of the constraint matrix for variable j.
  void column(std::size_t j, Vec& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (j < p_) {
      for (std::size_t i = 0; i < n_; ++i) out[i] = y_(i, j);
    } else if (j == lambda()) {
      for (std::size_t i = 0; i < n_; ++i) out[i] = -r_[i];
    } else {
      const std::size_t i = j - p_ - 1;
      out[i] = sigma_[i];
    }
  }

  void start_phase_one() {
    // Start each mu_j at the bound matching the sign of (Y^T r)_j, a cheap
    // guess at sign(s_j) that saves bound flips later.
    Vec guess = vecmat(r_, y_);
    for (std::size_t j = 0; j < p_; ++j) {
      if (guess[j] >= 0.0) {
        x_[j] = 1.0;
        status_[j] = Status::at_upper;
      } else {
        x_[j] = -1.0;
        status_[j] = Status::at_lower;
      }
    }
    x_[lambda()] = 0.0;
    Vec ymu = matvec(y_, std::span<const double>(x_.data(), p_));
    basis_.resize(n_);
    binv_ = Mat::identity(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      // sigma_i a_i = -(Y mu)_i with a_i >= 0.
      sigma_[i] = ymu[i] > 0.0 ? -1.0 : 1.0;
      const std::size_t a = art(i);
      x_[a] = std::abs(ymu[i]);
      lower_[a] = 0.0;
      upper_[a] = kInf;
      cost_[a] = 1.0;
      status_[a] = Status::basic;
      basis_[i] = a;
      binv_(i, i) = sigma_[i];  // inverse of diag(sigma)
    }
    cost_[lambda()] = 0.0;
    iterations_in_phase_ = 0;
  }

  void start_phase_two() {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t a = art(i);
      cost_[a] = 0.0;
      upper_[a] = 0.0;
      if (status_[a] != Status::basic) {
        x_[a] = 0.0;
        status_[a] = Status::at_lower;
      }
    }
    cost_[lambda()] = -1.0;
    iterations_in_phase_ = 0;
    refactor();
  }

  void refactor() {
    Mat b(n_, n_);
    Vec col(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      column(basis_[k], col);
      for (std::size_t i = 0; i < n_; ++i) b(i, k) = col[i];
    }
    binv_ = LuFactor(b).inverse();
    // x_B = B^{-1} (0 - N x_N)
    Vec rhs(n_, 0.0);
    for (std::size_t j = 0; j < nvar_; ++j) {
      if (status_[j] == Status::basic || x_[j] == 0.0) continue;
      column(j, col);
      for (std::size_t i = 0; i < n_; ++i) rhs[i] -= col[i] * x_[j];
    }
    Vec xb = matvec(binv_, rhs);
    for (std::size_t k = 0; k < n_; ++k) x_[basis_[k]] = xb[k];
    pivots_since_refactor_ = 0;
  }

  // Reduced costs d_j = c_j - a_j^T y for every variable.
  void price(Vec& d) const {
    Vec cb(n_);
    for (std::size_t k = 0; k < n_; ++k) cb[k] = cost_[basis_[k]];
    const Vec mult = vecmat(cb, binv_);  // y^T = c_B^T B^{-1}
    const Vec yty = vecmat(mult, y_);
    for (std::size_t j = 0; j < p_; ++j) d[j] = cost_[j] - yty[j];
    d[lambda()] = cost_[lambda()] + dot(r_, mult);
    for (std::size_t i = 0; i < n_; ++i) d[art(i)] = cost_[art(i)] - sigma_[i] * mult[i];
  }

  void iterate() {
    Vec d(nvar_), alpha(n_), col(n_);
    const std::size_t bland_after = 10 * (n_ + p_);
    const std::size_t max_iter = 200 * (n_ + p_) + 1000;
    while (true) {
      if (iterations_in_phase_ > max_iter) {
        throw Error("row recovery LP: iteration limit reached");
      }
      const bool bland = iterations_in_phase_ >= bland_after;
      price(d);

      // Entering variable.
      std::size_t q = nvar_;
      double best = 0.0;
      double dir = 0.0;
      for (std::size_t j = 0; j < nvar_; ++j) {
        const Status st = status_[j];
        if (st == Status::basic || lower_[j] == upper_[j]) continue;
        double step_dir = 0.0;
        if ((st == Status::at_lower || st == Status::free_zero) && d[j] < -opt_.optimality_tol) {
          step_dir = 1.0;
        } else if ((st == Status::at_upper || st == Status::free_zero) && d[j] > opt_.optimality_tol) {
          step_dir = -1.0;
        }
        if (step_dir == 0.0) continue;
        if (bland) {
          q = j;
          dir = step_dir;
          break;
        }
        if (std::abs(d[j]) > best) {
          best = std::abs(d[j]);
          q = j;
          dir = step_dir;
        }
      }
      if (q == nvar_) return;  // optimal

      column(q, col);
      alpha = matvec(binv_, col);

      // Two-pass ratio test: find the tightest step with bounds relaxed by the
      // feasibility tolerance, then among rows blocking within it take the
      // largest pivot (or the lowest variable index under Bland's rule).
      double t_relaxed = kInf;
      for (std::size_t k = 0; k < n_; ++k) {
        const double delta = -dir * alpha[k];
        if (std::abs(alpha[k]) <= opt_.pivot_tol) continue;
        const std::size_t b = basis_[k];
        double lim = kInf;
        if (delta < 0.0 && lower_[b] > -kInf) {
          lim = (x_[b] - lower_[b] + opt_.feasibility_tol) / -delta;
        } else if (delta > 0.0 && upper_[b] < kInf) {
          lim = (upper_[b] - x_[b] + opt_.feasibility_tol) / delta;
        }
        t_relaxed = std::min(t_relaxed, lim);
      }
      std::size_t leave = n_;
      double t_leave = kInf;
      double best_pivot = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        const double delta = -dir * alpha[k];
        if (std::abs(alpha[k]) <= opt_.pivot_tol) continue;
        const std::size_t b = basis_[k];
        double lim = kInf;
        if (delta < 0.0 && lower_[b] > -kInf) {
          lim = std::max(0.0, x_[b] - lower_[b]) / -delta;
        } else if (delta > 0.0 && upper_[b] < kInf) {
          lim = std::max(0.0, upper_[b] - x_[b]) / delta;
        }
        if (lim == kInf || lim > t_relaxed) continue;
        bool take;
        if (bland) {
          take = leave == n_ || lim < t_leave - 1e-14 ||
                 (lim <= t_leave + 1e-14 && b < basis_[leave]);
        } else {
          take = std::abs(alpha[k]) > best_pivot;
        }
        if (take) {
          leave = k;
          t_leave = lim;
          best_pivot = std::abs(alpha[k]);
        }
      }

      const double t_flip = upper_[q] - lower_[q];  // inf for free/one-sided
      if (leave == n_ && t_flip == kInf) {
        throw Error("row recovery LP: dual is unbounded (primal infeasible)");
      }
      ++iterations_;
      ++iterations_in_phase_;

      if (t_flip <= t_leave) {
        // Entering variable runs to its opposite bound; basis unchanged.
        for (std::size_t k = 0; k < n_; ++k) x_[basis_[k]] -= dir * alpha[k] * t_flip;
        if (dir > 0) {
          x_[q] = upper_[q];
          status_[q] = Status::at_upper;
        } else {
          x_[q] = lower_[q];
          status_[q] = Status::at_lower;
        }
        continue;
      }

      const double t = t_leave;
      for (std::size_t k = 0; k < n_; ++k) x_[basis_[k]] -= dir * alpha[k] * t;
      x_[q] += dir * t;
      const std::size_t out = basis_[leave];
      const double delta_out = -dir * alpha[leave];
      if (delta_out < 0.0) {
        x_[out] = lower_[out];
        status_[out] = Status::at_lower;
      } else {
        x_[out] = upper_[out];
        status_[out] = Status::at_upper;
      }
      basis_[leave] = q;
      status_[q] = Status::basic;

      // Eta update of B^{-1}.
      const double piv = alpha[leave];
      auto prow = binv_.row(leave);
      for (double& v : prow) v /= piv;
      for (std::size_t k = 0; k < n_; ++k) {
        if (k == leave || alpha[k] == 0.0) continue;
        const double f = alpha[k];
        auto rk = binv_.row(k);
        for (std::size_t c = 0; c < n_; ++c) rk[c] -= f * prow[c];
      }
      if (++pivots_since_refactor_ >= opt_.refactor_every) refactor();
    }
  }

  RowRecoverySolution extract() {
    // Recompute the multipliers from a fresh factorization: B^T w = c_B.
    Mat b(n_, n_);
    Vec col(n_), cb(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      column(basis_[k], col);
      for (std::size_t i = 0; i < n_; ++i) b(i, k) = col[i];
      cb[k] = cost_[basis_[k]];
    }
    // Zero reduced cost on lambda gives r^T w = 1; basic mu_j give s_j = 0.
    Vec w = LuFactor(b).solve_transposed(cb);
    const double rw = dot(r_, w);
    if (!(std::abs(rw) > 0.0)) throw Error("row recovery LP: degenerate multipliers");
    for (double& v : w) v /= rw;

    RowRecoverySolution sol;
    sol.s = vecmat(w, y_);
    sol.objective = norm1(sol.s);
    sol.w = std::move(w);
    sol.status = LpStatus::optimal;
    sol.iterations = iterations_;
    return sol;
  }

  const Mat& y_;
  std::span<const double> r_;
  LpOptions opt_;
  std::size_t n_, p_, nvar_;
  Vec lower_, upper_, cost_, x_, sigma_;
  std::vector<Status> status_;
  std::vector<std::size_t> basis_;
  Mat binv_;
  std::size_t iterations_ = 0;
  std::size_t iterations_in_phase_ = 0;
  std::size_t pivots_since_refactor_ = 0;
};

inline void check_inputs(const Mat& y, std::span<const double> r) {
  if (y.rows() == 0 || y.cols() == 0) throw InputError("row recovery: Y must be nonempty");
  if (r.size() != y.rows()) throw DimensionError("row recovery: r length must equal rows of Y");
  if (!y.all_finite() || !std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); })) {
    throw InputError("row recovery: non-finite input");
  }
}

}  // namespace detail

// Objective ||w^T Y||_1 of an arbitrary point.
inline double row_objective(const Mat& y, std::span<const double> w) { return norm1(vecmat(w, y)); }

inline RowRecoverySolution solve_row_recovery(const Mat& y, std::span<const double> r,
                                              const LpOptions& opt = {}) {
  detail::check_inputs(y, r);
  if (norm_inf(r) == 0.0) {
    RowRecoverySolution sol;
    sol.status = LpStatus::infeasible;
    return sol;
  }
  return detail::BoundedDualSimplex(y, r, opt).solve();
}

inline RowRecoverySolution solve_row_recovery(const RowRecoveryProblem& prob, const LpOptions& opt = {}) {
  return solve_row_recovery(prob.y, prob.r, opt);
}

// P r with P the orthogonal projector onto the complement of span(basis).
inline Vec project_out(std::span<const double> r, const std::vector<Vec>& basis) {
  Vec out(r.begin(), r.end());
  for (const Vec& u : basis) {
    const double c = dot(u, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c * u[i];
  }
  return out;
}

// Same LP with the constraint (P r)^T w = 1. Infeasible when the projection
// annihilates r.
inline RowRecoverySolution solve_projected_row_recovery(const Mat& y, std::span<const double> r,
                                                        const std::vector<Vec>& basis,
                                                        const LpOptions& opt = {}) {
  detail::check_inputs(y, r);
  for (const Vec& u : basis) {
    if (u.size() != y.rows()) throw DimensionError("projected row recovery: basis vector length");
  }
  const Vec pr = project_out(r, basis);
  if (norm2(pr) <= 1e-10 * norm2(r)) {
    RowRecoverySolution sol;
    sol.status = LpStatus::infeasible;
    return sol;
  }
  return solve_row_recovery(y, pr, opt);
}

// Exact optimum by enumerating basic solutions: every vertex of the problem
// has n - 1 columns j with (w^T Y)_j = 0 together with r^T w = 1. Test oracle
// only; requires Y to have full row rank.
inline double lp_vertex_oracle(const RowRecoveryProblem& prob) {
  const std::size_t n = prob.y.rows(), p = prob.y.cols();
  if (n > 6 || p > 8) throw InputError("lp_vertex_oracle: instance too large (n <= 6, p <= 8)");
  detail::check_inputs(prob.y, prob.r);
  if (norm_inf(prob.r) == 0.0) throw InputError("lp_vertex_oracle: r = 0 is infeasible");
  if (n - 1 > p) throw InputError("lp_vertex_oracle: need p >= n - 1");

  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> pick(p, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n - 1), true);
  do {
    Mat m(n, n);
    std::size_t row = 0;
    for (std::size_t j = 0; j < p; ++j) {
      if (!pick[j]) continue;
      for (std::size_t i = 0; i < n; ++i) m(row, i) = prob.y(i, j);
      ++row;
    }
    for (std::size_t i = 0; i < n; ++i) m(n - 1, i) = prob.r[i];
    Vec rhs(n, 0.0);
    rhs[n - 1] = 1.0;
    try {
      const Vec w = LuFactor(m).solve(rhs);
      best = std::min(best, row_objective(prob.y, w));
    } catch (const SingularMatrixError&) {
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  if (!std::isfinite(best)) throw InputError("lp_vertex_oracle: no nonsingular basis (degenerate instance)");
  return best;
}

}  // namespace erspud

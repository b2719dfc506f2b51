#pragma once

// Small dense linear algebra kernel: a row-major matrix of doubles plus the
// handful of factorizations the recovery pipelines need (LU solve, pivoted QR
// rank, Jacobi inverse square root, Gram-Schmidt basis extension).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "erspud/error.hpp"

namespace erspud {

using Vec = std::vector<double>;

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, Vec data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("Mat: data length does not match shape");
    }
  }
  Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("Mat: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat diag(std::span<const double> d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static Mat from_rows(const std::vector<Vec>& rows) {
    if (rows.empty()) return {};
    Mat m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols()) throw DimensionError("Mat::from_rows: ragged rows");
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vec col(std::size_t j) const {
    Vec c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }
  Vec row_copy(std::size_t i) const {
    auto r = row(i);
    return {r.begin(), r.end()};
  }

  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  Mat transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }
  double frobenius() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

// ---------------------------------------------------------------------------
// Vector helpers

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }
inline double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}
inline double norm_inf(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

// Number of entries with |v_i| > rel_tol * max|v|. Zero vector has count 0.
inline std::size_t numerical_l0(std::span<const double> v, double rel_tol) {
  const double thresh = rel_tol * norm_inf(v);
  if (thresh == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(v.begin(), v.end(), [&](double x) { return std::abs(x) > thresh; }));
}

// ---------------------------------------------------------------------------
// Products

inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + ")");
  }
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// a * x for a vector x.
inline Vec matvec(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionError("matvec: size mismatch");
  Vec y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

// x^T a, i.e. a^T x.
inline Vec vecmat(std::span<const double> x, const Mat& a) {
  if (a.rows() != x.size()) throw DimensionError("vecmat: size mismatch");
  Vec y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (x[i] == 0.0) continue;
    auto ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += x[i] * ai[j];
  }
  return y;
}

// a * a^T
inline Mat gram_rows(const Mat& a) {
  Mat g(a.rows(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.rows(); ++j) g(i, j) = g(j, i) = dot(a.row(i), a.row(j));
  return g;
}

// ---------------------------------------------------------------------------
// LU with partial pivoting

class LuFactor {
 public:
  explicit LuFactor(const Mat& a) : lu_(a), perm_(a.rows()) {
    if (a.rows() != a.cols()) throw DimensionError("LU: matrix is not square");
    const std::size_t n = a.rows();
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    const double scale = a.max_abs();
    const double tiny = 1e-12 * scale;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(lu_(i, k)) > std::abs(lu_(piv, k))) piv = i;
      if (scale == 0.0 || std::abs(lu_(piv, k)) < tiny) {
        throw SingularMatrixError("LU: matrix is numerically singular at column " +
                                  std::to_string(k));
      }
      if (piv != k) {
        std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(piv).begin());
        std::swap(perm_[k], perm_[piv]);
      }
      const double pivot = lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double f = lu_(i, k) / pivot;
        lu_(i, k) = f;
        if (f == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
      }
    }
  }

  std::size_t size() const { return lu_.rows(); }

  Vec solve(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw DimensionError("LU solve: rhs length mismatch");
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
      x[i] /= lu_(i, i);
    }
    return x;
  }

  // Solves a^T x = b.
  Vec solve_transposed(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw DimensionError("LU solve: rhs length mismatch");
    // a = P^T L U, so a^T = U^T L^T P.
    Vec z(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) z[i] -= lu_(j, i) * z[j];
      z[i] /= lu_(i, i);
    }
    for (std::size_t i = n; i-- > 0;)
      for (std::size_t j = i + 1; j < n; ++j) z[i] -= lu_(j, i) * z[j];
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = z[i];
    return x;
  }

  Mat inverse() const {
    const std::size_t n = size();
    Mat inv(n, n);
    Vec e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = 1.0;
      Vec c = solve(e);
      for (std::size_t i = 0; i < n; ++i) inv(i, j) = c[i];
      e[j] = 0.0;
    }
    return inv;
  }

 private:
  Mat lu_;
  std::vector<std::size_t> perm_;
};

// Solves a * Z = b.
inline Mat solve_linear(const Mat& a, const Mat& b) {
  if (a.rows() != a.cols()) throw DimensionError("solve_linear: matrix is not square");
  if (b.rows() != a.rows()) throw DimensionError("solve_linear: rhs row count mismatch");
  LuFactor lu(a);
  Mat z(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    Vec x = lu.solve(b.col(j));
    for (std::size_t i = 0; i < x.size(); ++i) z(i, j) = x[i];
  }
  return z;
}

// ---------------------------------------------------------------------------
// Rank via Householder QR with column pivoting. A diagonal entry of R counts
// when its magnitude exceeds tol * max|a_ij|.

inline std::size_t rank_with_tol(const Mat& a, double tol = 1e-8) {
  if (!(tol > 0.0)) throw ConfigError("rank_with_tol: tol must be positive");
  const std::size_t m = a.rows(), n = a.cols();
  const double scale = a.max_abs();
  if (scale == 0.0) return 0;
  Mat r = a;
  Vec colnorm(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) colnorm[j] += r(i, j) * r(i, j);

  const std::size_t steps = std::min(m, n);
  std::size_t rank = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t piv = k;
    for (std::size_t j = k + 1; j < n; ++j)
      if (colnorm[j] > colnorm[piv]) piv = j;
    if (piv != k) {
      for (std::size_t i = 0; i < m; ++i) std::swap(r(i, k), r(i, piv));
      std::swap(colnorm[k], colnorm[piv]);
    }
    double alpha = 0.0;
    for (std::size_t i = k; i < m; ++i) alpha += r(i, k) * r(i, k);
    alpha = std::sqrt(alpha);
    if (alpha <= tol * scale) break;
    ++rank;
    // Householder reflector zeroing r(k+1.., k).
    Vec v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = r(i, k);
    v[0] += (v[0] >= 0 ? alpha : -alpha);
    const double vnorm2 = dot(v, v);
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += v[i - k] * r(i, j);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < m; ++i) r(i, j) -= s * v[i - k];
    }
    // Recompute trailing column norms.
    for (std::size_t j = k + 1; j < n; ++j) {
      colnorm[j] = 0.0;
      for (std::size_t i = k + 1; i < m; ++i) colnorm[j] += r(i, j) * r(i, j);
    }
  }
  return rank;
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition by cyclic Jacobi rotations.

struct SymEigen {
  Vec values;
  Mat vectors;  // columns are eigenvectors
};

inline SymEigen jacobi_eigen(const Mat& a, int max_sweeps = 100) {
  if (a.rows() != a.cols()) throw DimensionError("jacobi_eigen: matrix is not square");
  const std::size_t n = a.rows();
  Mat m = a;
  Mat v = Mat::identity(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        total += m(i, j) * m(i, j);
        if (i != j) off += m(i, j) * m(i, j);
      }
    if (off <= 1e-30 * total) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  SymEigen out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = m(i, i);
  out.vectors = std::move(v);
  return out;
}

// B = a^{-1/2} for symmetric positive definite a.
inline Mat inv_sqrt_spd(const Mat& a) {
  if (a.rows() != a.cols()) throw DimensionError("inv_sqrt_spd: matrix is not square");
  const std::size_t n = a.rows();
  // Symmetrize so round-off asymmetry in the input cannot leak into B.
  Mat sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sym(i, j) = 0.5 * (a(i, j) + a(j, i));
  SymEigen eig = jacobi_eigen(sym);
  const double lmax = *std::max_element(eig.values.begin(), eig.values.end());
  const double lmin = *std::min_element(eig.values.begin(), eig.values.end());
  if (!(lmax > 0.0) || lmin <= 1e-12 * lmax) {
    throw NotSpdError("inv_sqrt_spd: matrix is not positive definite (min eigenvalue " +
                      std::to_string(lmin) + ")");
  }
  Mat b(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = 1.0 / std::sqrt(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = eig.vectors(i, k) * f;
      for (std::size_t j = i; j < n; ++j) b(i, j) += vik * eig.vectors(j, k);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) b(i, j) = b(j, i);
  return b;
}

// Orthogonalizes v against an orthonormal basis (two Gram-Schmidt passes).
// Returns the normalized residual, or nullopt if v is numerically in the span.
inline std::optional<Vec> orthobasis_append(const std::vector<Vec>& basis, std::span<const double> v,
                                            double tol) {
  const double vnorm = norm2(v);
  if (vnorm == 0.0) return std::nullopt;
  Vec r(v.begin(), v.end());
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vec& u : basis) {
      const double c = dot(u, r);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * u[i];
    }
  }
  const double rnorm = norm2(r);
  if (rnorm <= tol * vnorm) return std::nullopt;
  for (double& x : r) x /= rnorm;
  return r;
}

// ---------------------------------------------------------------------------
// CSV fixtures: one row per line, comma separated, %.17g.

inline std::string to_csv(const Mat& m) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline Mat from_csv(const std::string& text) {
  std::vector<Vec> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    Vec row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InputError("from_csv: cannot parse '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return Mat::from_rows(rows);
}

inline void write_csv(const Mat& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("write_csv: cannot open " + path);
  f << to_csv(m);
}

inline Mat read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("read_csv: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_csv(ss.str());
}

}  // namespace erspud

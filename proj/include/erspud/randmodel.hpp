#pragma once

// Seeded generators for sparse coefficient matrices and test dictionaries.
//
// The bit stream is pinned to std::mt19937_64, whose output sequence is fixed
// by the C++ standard. Uniform doubles, bounded integers and Gaussians are
// derived from it directly, so streams match across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "erspud/densela.hpp"
#include "erspud/error.hpp"

namespace erspud {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds a tag tuple into a master seed. Order-sensitive.
inline std::uint64_t derive_seed(std::uint64_t master, std::span<const std::uint64_t> tags) {
  std::uint64_t h = mix64(master);
  for (std::size_t i = 0; i < tags.size(); ++i) {
    h = mix64(h ^ mix64(tags[i] + 0x632be59bd9b4e019ULL * (i + 1)));
  }
  return h;
}
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  return derive_seed(master, std::span<const std::uint64_t>(tags.begin(), tags.size()));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), unbiased by rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw ConfigError("Rng::below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // Box-Muller; the second variate of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class ValueDist { gaussian, rademacher };

inline const char* to_string(ValueDist d) { return d == ValueDist::gaussian ? "gaussian" : "rademacher"; }

inline ValueDist parse_value_dist(const std::string& s) {
  if (s == "gaussian") return ValueDist::gaussian;
  if (s == "rademacher") return ValueDist::rademacher;
  throw ConfigError("unknown value distribution '" + s + "'");
}

// E|R| for the value distribution.
inline double mean_abs_value(ValueDist d) {
  return d == ValueDist::gaussian ? std::sqrt(2.0 / std::numbers::pi) : 1.0;
}

inline double draw_value(Rng& rng, ValueDist d) {
  return d == ValueDist::gaussian ? rng.gaussian() : rng.rademacher();
}

struct Bernoulli {
  double theta;
};
struct FixedK {
  std::size_t k;
};

struct CoeffModel {
  std::size_t n = 0;
  std::size_t p = 0;
  std::variant<Bernoulli, FixedK> sparsity = Bernoulli{0.1};
  ValueDist dist = ValueDist::gaussian;
  std::uint64_t seed = 0;

  void validate() const {
    if (n == 0 || p == 0) throw ConfigError("CoeffModel: n and p must be positive");
    if (const auto* b = std::get_if<Bernoulli>(&sparsity)) {
      // theta = 1 is admitted so fully dense matrices can be generated.
      if (!(b->theta > 0.0 && b->theta <= 1.0)) {
        throw ConfigError("CoeffModel: theta must lie in (0, 1]");
      }
    } else {
      const auto k = std::get<FixedK>(sparsity).k;
      if (k < 1 || k > n) throw ConfigError("CoeffModel: k must lie in [1, n]");
    }
  }
};

inline Mat gen_coeffs(const CoeffModel& model) {
  model.validate();
  Rng rng(model.seed);
  Mat x(model.n, model.p);
  if (const auto* b = std::get_if<Bernoulli>(&model.sparsity)) {
    for (std::size_t i = 0; i < model.n; ++i)
      for (std::size_t j = 0; j < model.p; ++j)
        if (rng.uniform() < b->theta) x(i, j) = draw_value(rng, model.dist);
    return x;
  }
  const std::size_t k = std::get<FixedK>(model.sparsity).k;
  std::vector<std::size_t> idx(model.n);
  for (std::size_t j = 0; j < model.p; ++j) {
    for (std::size_t i = 0; i < model.n; ++i) idx[i] = i;
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t pick = t + static_cast<std::size_t>(rng.below(model.n - t));
      std::swap(idx[t], idx[pick]);
      x(idx[t], j) = draw_value(rng, model.dist);
    }
  }
  return x;
}

enum class DictKind { gaussian_iid, hadamard, identity };

inline const char* to_string(DictKind k) {
  switch (k) {
    case DictKind::gaussian_iid: return "gaussian_iid";
    case DictKind::hadamard: return "hadamard";
    case DictKind::identity: return "identity";
  }
  return "?";
}

inline DictKind parse_dict_kind(const std::string& s) {
  if (s == "gaussian_iid" || s == "gaussian") return DictKind::gaussian_iid;
  if (s == "hadamard") return DictKind::hadamard;
  if (s == "identity") return DictKind::identity;
  throw ConfigError("unknown dictionary kind '" + s + "'");
}

struct DictModel {
  std::size_t n = 0;
  DictKind kind = DictKind::gaussian_iid;
  std::uint64_t seed = 0;
};

inline Mat gen_dict(const DictModel& model) {
  if (model.n == 0) throw ConfigError("DictModel: n must be positive");
  switch (model.kind) {
    case DictKind::identity:
      return Mat::identity(model.n);
    case DictKind::hadamard: {
      if ((model.n & (model.n - 1)) != 0) {
        throw ConfigError("DictModel: hadamard requires n to be a power of 2, got " +
                          std::to_string(model.n));
      }
      Mat h(1, 1, 1.0);
      while (h.rows() < model.n) {
        const std::size_t m = h.rows();
        Mat next(2 * m, 2 * m);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            next(i, j) = h(i, j);
            next(i, j + m) = h(i, j);
            next(i + m, j) = h(i, j);
            next(i + m, j + m) = -h(i, j);
          }
        h = std::move(next);
      }
      return h;
    }
    case DictKind::gaussian_iid: {
      Rng rng(model.seed);
      Mat a(model.n, model.n);
      for (double& v : a.data()) v = rng.gaussian();
      return a;
    }
  }
  throw ConfigError("DictModel: unknown kind");
}

}  // namespace erspud

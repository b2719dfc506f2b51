#include <gtest/gtest.h>

#include <cmath>

#include "erspud/densela.hpp"
#include "erspud/randmodel.hpp"

namespace erspud {
namespace {

Mat random_mat(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(r, c);
  for (double& v : m.data()) v = rng.gaussian();
  return m;
}

// Independent oracle: the textbook triple loop.
Mat naive_matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

double max_diff(const Mat& a, const Mat& b) {
  EXPECT_EQ(a.rows(), b.rows());
  EXPECT_EQ(a.cols(), b.cols());
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Mat m = random_mat(2, 3, 1);
  EXPECT_EQ(matmul(Mat::identity(2), m), m);
}

TEST(Matmul, HandArithmetic) {
  Mat a{{1, 2}, {3, 4}};
  Mat b{{0}, {1}};
  EXPECT_EQ(matmul(a, b), (Mat{{2}, {4}}));
}

TEST(Matmul, MatchesTripleLoop) {
  Mat a = random_mat(3, 4, 2), b = random_mat(4, 2, 3);
  EXPECT_LT(max_diff(matmul(a, b), naive_matmul(a, b)), 1e-14);
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Mat(2, 3), Mat(2, 3)), DimensionError);
}

TEST(Matmul, AssociativeOnRandomTriples) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Mat a = random_mat(4, 5, 10 + s), b = random_mat(5, 3, 40 + s), c = random_mat(3, 6, 70 + s);
    Mat l = matmul(matmul(a, b), c), r = matmul(a, matmul(b, c));
    EXPECT_LT(max_diff(l, r), 1e-10 * std::max(1.0, l.max_abs()));
  }
}

TEST(SolveLinear, Identity) {
  Mat b = random_mat(3, 2, 5);
  EXPECT_LT(max_diff(solve_linear(Mat::identity(3), b), b), 1e-15);
}

TEST(SolveLinear, Diagonal) {
  Mat z = solve_linear(Mat{{2, 0}, {0, 4}}, Mat{{2}, {4}});
  EXPECT_DOUBLE_EQ(z(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(z(1, 0), 1.0);
}

TEST(SolveLinear, ResidualOnRandomSystem) {
  Mat a = random_mat(5, 5, 6);
  for (std::size_t i = 0; i < 5; ++i) a(i, i) += 5.0;
  Mat b = random_mat(5, 3, 7);
  Mat z = solve_linear(a, b);
  Mat res = matmul(a, z);
  for (std::size_t i = 0; i < res.data().size(); ++i) res.data()[i] -= b.data()[i];
  EXPECT_LE(res.frobenius(), 1e-9 * b.frobenius());
}

TEST(SolveLinear, RoundTrip) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Mat a = random_mat(6, 6, 100 + s);
    Mat z = random_mat(6, 2, 200 + s);
    Mat back = solve_linear(a, matmul(a, z));
    EXPECT_LT(max_diff(back, z), 1e-8);
  }
}

TEST(SolveLinear, SingularThrows) {
  EXPECT_THROW(solve_linear(Mat{{1, 2}, {2, 4}}, Mat{{1}, {1}}), SingularMatrixError);
  EXPECT_THROW(solve_linear(Mat(2, 3), Mat(2, 1)), DimensionError);
}

TEST(LuFactor, TransposedSolve) {
  Mat a = random_mat(4, 4, 8);
  Vec b{1, -2, 0.5, 3};
  Vec x = LuFactor(a).solve_transposed(b);
  Vec back = matvec(a.transpose(), x);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(back[i], b[i], 1e-12);
}

TEST(Rank, Examples) {
  EXPECT_EQ(rank_with_tol(Mat::identity(3), 1e-8), 3u);
  EXPECT_EQ(rank_with_tol(Mat{{1, 2, 3}, {1, 2, 3}}, 1e-8), 1u);
  EXPECT_EQ(rank_with_tol(Mat{{1, 0}, {0, 1e-14}}, 1e-10), 1u);
  EXPECT_EQ(rank_with_tol(Mat(3, 3), 1e-8), 0u);
}

TEST(Rank, TransposeInvariantOnRandomLowRank) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t k = 1 + s % 4;
    Mat a = matmul(random_mat(6, k, 300 + s), random_mat(k, 5, 400 + s));
    EXPECT_EQ(rank_with_tol(a, 1e-8), k);
    EXPECT_EQ(rank_with_tol(a, 1e-8), rank_with_tol(a.transpose(), 1e-8));
  }
}

TEST(InvSqrtSpd, Examples) {
  EXPECT_LT(max_diff(inv_sqrt_spd(Mat::identity(3)), Mat::identity(3)), 1e-15);
  Mat b = inv_sqrt_spd(Mat{{4, 0}, {0, 9}});
  EXPECT_NEAR(b(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(b(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(b(0, 1), 0.0, 1e-15);
}

TEST(InvSqrtSpd, DefiningIdentityAndSymmetry) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    Mat m = random_mat(4, 4, 500 + s);
    Mat a = matmul(m.transpose(), m);
    for (std::size_t i = 0; i < 4; ++i) a(i, i) += 1.0;
    Mat b = inv_sqrt_spd(a);
    EXPECT_LT(max_diff(b, b.transpose()), 1e-12);
    EXPECT_LT(max_diff(matmul(matmul(b, a), b), Mat::identity(4)), 1e-8);
  }
}

TEST(InvSqrtSpd, RejectsIndefinite) {
  EXPECT_THROW(inv_sqrt_spd(Mat{{1, 0}, {0, -1}}), NotSpdError);
  EXPECT_THROW(inv_sqrt_spd(Mat{{1, 1}, {1, 1}}), NotSpdError);
}

TEST(OrthobasisAppend, Examples) {
  std::vector<Vec> basis{{1, 0, 0}};
  auto e2 = orthobasis_append(basis, Vec{0, 1, 0}, 1e-8);
  ASSERT_TRUE(e2.has_value());
  EXPECT_NEAR((*e2)[1], 1.0, 1e-15);

  EXPECT_FALSE(orthobasis_append(basis, Vec{1, 0, 0}, 1e-8).has_value());

  const double h = 1.0 / std::sqrt(2.0);
  auto r = orthobasis_append(basis, Vec{h, h, 0}, 1e-8);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR((*r)[0], 0.0, 1e-15);
  EXPECT_NEAR((*r)[1], 1.0, 1e-15);

  EXPECT_FALSE(orthobasis_append(basis, Vec{0, 0, 0}, 1e-8).has_value());
}

TEST(Csv, RoundTripIsExact) {
  Mat m = random_mat(3, 4, 9);
  m(0, 0) = 1e-300;
  m(1, 1) = -0.1;
  EXPECT_EQ(from_csv(to_csv(m)), m);
  EXPECT_EQ(to_csv(Mat{{1, 0.5}}), "1,0.5\n");
}

TEST(NumericalL0, RelativeThreshold) {
  EXPECT_EQ(numerical_l0(Vec{1.0, 1e-7, 1e-5, 0.0}, 1e-6), 2u);
  EXPECT_EQ(numerical_l0(Vec{0.0, 0.0}, 1e-6), 0u);
}

}  // namespace
}  // namespace erspud

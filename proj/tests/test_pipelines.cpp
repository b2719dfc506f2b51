#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "erspud/dictmetrics.hpp"
#include "erspud/pipelines.hpp"
#include "erspud/randmodel.hpp"
#include "erspud/xphase.hpp"

namespace erspud {
namespace {

CandidateSet make_set(std::initializer_list<Vec> rows) {
  CandidateSet set;
  for (const Vec& s : rows) set.candidates.push_back({Vec(s.size(), 0.0), s, norm1(s), {}});
  return set;
}

bool is_scaled_coordinate(std::span<const double> s) {
  std::size_t nnz = 0;
  for (double v : s) nnz += std::abs(v) > 1e-9;
  return nnz == 1;
}

Mat random_mat(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(r, c);
  for (double& v : m.data()) v = rng.gaussian();
  return m;
}

TEST(SpudSc, IdentityGivesCoordinateRows) {
  CandidateSet set = spud_sc(Mat::identity(2));
  ASSERT_EQ(set.size(), 2u);
  for (std::size_t j = 0; j < 2; ++j) {
    const Candidate& c = set.candidates[j];
    EXPECT_TRUE(is_scaled_coordinate(c.s));
    EXPECT_NEAR(c.s[j], 1.0, 1e-12);
    EXPECT_EQ(c.source.kind, CandidateSource::Kind::column);
    EXPECT_EQ(c.source.first, j);
  }
}

TEST(SpudSc, DictionaryTimesIdentity) {
  const Mat a = random_mat(4, 4, 21);
  CandidateSet set = spud_sc(a);
  ASSERT_EQ(set.size(), 4u);
  for (const Candidate& c : set.candidates) EXPECT_TRUE(is_scaled_coordinate(c.s));
}

TEST(SpudSc, ConstraintResidualIsTiny) {
  const Mat y = random_mat(5, 30, 22);
  CandidateSet set = spud_sc(y);
  for (const Candidate& c : set.candidates) {
    const Vec r = y.col(c.source.first);
    EXPECT_NEAR(dot(r, c.w), 1.0, 1e-9);
    const Vec s = vecmat(c.w, y);
    for (std::size_t j = 0; j < s.size(); ++j) EXPECT_NEAR(s[j], c.s[j], 1e-9);
  }
}

TEST(SpudSc, ZeroColumnsAreSkipped) {
  Mat y{{1, 0, 0}, {0, 0, 1}};
  CandidateSet set = spud_sc(y);
  EXPECT_EQ(set.size(), 2u);
  EXPECT_EQ(set.skipped, std::vector<std::size_t>{1});
  EXPECT_THROW(spud_sc(Mat(2, 3)), RankDeficiencyError);
}

TEST(SpudSc, RecoversAllRowsInSuccessRegion) {
  const std::size_t n = 16, p = samples_for(16, 5.0);
  ASSERT_EQ(p, 222u);
  const Mat a = gen_dict({n, DictKind::gaussian_iid, 31});
  const Mat x = gen_coeffs({n, p, FixedK{2}, ValueDist::gaussian, 32});
  const Mat y = matmul(a, x);
  const Preconditioned pre = precondition(y);
  CandidateSet set = spud_sc(pre.yp);
  EXPECT_GE(rows_recovered(set, x, 1e-6), n);
}

TEST(SpudSc, ThreadCountDoesNotChangeResults) {
  const Mat y = random_mat(4, 24, 23);
  PipelineOptions serial, threaded;
  threaded.threads = 3;
  const CandidateSet a = spud_sc(y, serial), b = spud_sc(y, threaded);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.candidates[i].s, b.candidates[i].s);
}

TEST(DcPairing, TwoColumns) {
  auto pairs = dc_pairing(2, 99);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_THROW(dc_pairing(1, 0), ConfigError);
}

TEST(DcPairing, DeterministicDisjointCover) {
  EXPECT_EQ(dc_pairing(40, 5), dc_pairing(40, 5));
  EXPECT_NE(dc_pairing(40, 5), dc_pairing(40, 6));
  std::set<std::size_t> seen;
  for (auto [i, j] : dc_pairing(40, 5)) {
    EXPECT_LT(i, j);
    EXPECT_TRUE(seen.insert(i).second);
    EXPECT_TRUE(seen.insert(j).second);
  }
  EXPECT_EQ(seen.size(), 40u);
  EXPECT_EQ(dc_pairing(41, 5).size(), 20u);
}

TEST(SpudDc, CandidatesComeFromPairSums) {
  const Mat y = random_mat(3, 12, 24);
  CandidateSet set = spud_dc(y, 7);
  EXPECT_EQ(set.size(), 6u);
  for (const Candidate& c : set.candidates) {
    ASSERT_EQ(c.source.kind, CandidateSource::Kind::column_pair);
    Vec r = y.col(c.source.first);
    const Vec r2 = y.col(c.source.second);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += r2[i];
    EXPECT_NEAR(dot(r, c.w), 1.0, 1e-9);
  }
}

TEST(SivBaseline, IdentityMatchesSc) {
  CandidateSet siv = siv_baseline(Mat::identity(2));
  CandidateSet sc = spud_sc(Mat::identity(2));
  ASSERT_EQ(siv.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(siv.candidates[i].s[j], sc.candidates[i].s[j], 1e-12);
    EXPECT_EQ(siv.candidates[i].source.kind, CandidateSource::Kind::basis_vector);
  }
}

TEST(SivBaseline, OneCandidatePerBasisVector) {
  EXPECT_EQ(siv_baseline(random_mat(3, 10, 25)).size(), 3u);
}

TEST(GreedySelect, OrdersBySparsity) {
  CandidateSet set = make_set({{1, 0, 0}, {1, 1, 0}, {0, 0, 1}});
  GreedySelection g = greedy_select(set, 3);
  EXPECT_EQ(g.x_hat, (Mat{{1, 0, 0}, {0, 0, 1}, {1, 1, 0}}));
  EXPECT_EQ(g.chosen, (std::vector<std::size_t>{0, 2, 1}));
}

TEST(GreedySelect, RejectsDuplicatesAndScaledDuplicates) {
  CandidateSet set = make_set({{1, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}});
  GreedySelection g = greedy_select(set, 2);
  EXPECT_EQ(g.chosen, (std::vector<std::size_t>{0, 3}));
  try {
    greedy_select(make_set({{1, 0, 0}, {-3, 0, 0}}), 2);
    FAIL() << "expected RankDeficiencyError";
  } catch (const RankDeficiencyError& e) {
    EXPECT_EQ(e.found(), 1u);
  }
  EXPECT_THROW(greedy_select(CandidateSet{}, 1), RankDeficiencyError);
}

TEST(GreedySelect, NumericalZerosDoNotCount) {
  CandidateSet set = make_set({{1, 1, 0}, {1, 1e-12, 0}});
  GreedySelection g = greedy_select(set, 1);
  EXPECT_EQ(g.chosen, std::vector<std::size_t>{1});
}

TEST(ReconstructDict, ExactCoefficientsGiveDictionary) {
  const Mat a = random_mat(4, 4, 26);
  const Mat x = gen_coeffs({4, 30, FixedK{2}, ValueDist::gaussian, 27});
  const Mat y = matmul(a, x);
  const Mat a_hat = reconstruct_dict(y, x);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(a_hat(i, j), a(i, j), 1e-8);
  EXPECT_EQ(reconstruct_dict(Mat::identity(3), Mat::identity(3)), Mat::identity(3));
}

TEST(ReconstructDict, PermutationScaleCovariance) {
  const Mat a = random_mat(3, 3, 28);
  const Mat x = gen_coeffs({3, 20, FixedK{1}, ValueDist::gaussian, 29});
  const Mat y = matmul(a, x);
  // Rows of X_hat: 2 X_2, -0.5 X_0, 4 X_1.
  const std::size_t perm[3] = {2, 0, 1};
  const double scale[3] = {2.0, -0.5, 4.0};
  Mat x_hat(3, 20);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 20; ++j) x_hat(i, j) = scale[i] * x(perm[i], j);
  const Mat a_hat = reconstruct_dict(y, x_hat);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(a_hat(i, c), a(i, perm[c]) / scale[c], 1e-8);
}

TEST(ReconstructDict, Errors) {
  EXPECT_THROW(reconstruct_dict(Mat::identity(2), Mat(2, 3)), DimensionError);
  EXPECT_THROW(reconstruct_dict(Mat::identity(2), Mat{{1, 0}, {2, 0}}), ReconstructionError);
}

TEST(Precondition, OrthonormalRowsUnchanged) {
  const double c = std::cos(0.3), s = std::sin(0.3);
  Mat y{{c, -s, 0}, {s, c, 0}};
  Preconditioned pre = precondition(y);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(pre.yp(i, j), y(i, j), 1e-12);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(pre.transform(i, j), i == j ? 1.0 : 0.0, 1e-12);
  }
}

TEST(Precondition, DiagonalBecomesIdentity) {
  Preconditioned pre = precondition(Mat{{2, 0}, {0, 3}});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(pre.yp(i, j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Precondition, RandomRowsBecomeOrthonormal) {
  Preconditioned pre = precondition(random_mat(6, 40, 30));
  const Mat g = gram_rows(pre.yp);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(g(i, j), i == j ? 1.0 : 0.0, 1e-10);
  EXPECT_THROW(precondition(Mat{{1, 2, 3}, {2, 4, 6}}), RankDeficiencyError);
}

TEST(Precondition, WeightsMapBackToOriginalY) {
  const Mat y = random_mat(3, 15, 31);
  Preconditioned pre = precondition(y);
  CandidateSet set = spud_sc(pre.yp);
  map_weights_back(set, pre.transform);
  for (const Candidate& c : set.candidates) {
    const Vec s = vecmat(c.w, y);
    for (std::size_t j = 0; j < s.size(); ++j) EXPECT_NEAR(s[j], c.s[j], 1e-9);
  }
}

TEST(SpudProj, IdentityIsRecovered) {
  RecoveryResult r = spud_proj(Mat::identity(3));
  ASSERT_EQ(r.x_hat.rows(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(is_scaled_coordinate(r.x_hat.row(i)));
  EXPECT_LT(rel_error(r.a_hat, Mat::identity(3)).rel_error, 1e-12);
}

TEST(SpudProj, FirstRoundIsSparsestScCandidate) {
  const Mat a = random_mat(4, 4, 32);
  const Mat x = gen_coeffs({4, 25, FixedK{2}, ValueDist::gaussian, 33});
  const Mat y = matmul(a, x);
  RecoveryResult r = spud_proj(y);
  CandidateSet sc = spud_sc(y);
  std::size_t best = 0;
  for (std::size_t i = 1; i < sc.size(); ++i)
    if (numerical_l0(sc.candidates[i].s, 1e-6) < numerical_l0(sc.candidates[best].s, 1e-6)) best = i;
  const Candidate& first = r.candidates.candidates.front();
  EXPECT_EQ(first.source.first, sc.candidates[best].source.first);
  for (std::size_t j = 0; j < 25; ++j) EXPECT_NEAR(first.s[j], sc.candidates[best].s[j], 1e-8);
}

TEST(SpudProj, SucceedsWhereSingleColumnFails) {
  TrialSpec spec;
  spec.n = 10;
  spec.k = 6;
  spec.p = samples_for(10, 5.0);
  spec.trial_seed = 0;
  spec.algorithm = Algorithm::sc;
  const double sc = run_trial(spec);
  spec.algorithm = Algorithm::proj;
  const double proj = run_trial(spec);
  EXPECT_GT(sc, 0.1);
  EXPECT_LT(proj, 1e-6);
}

TEST(Recover, AllAlgorithmsOnEasyInstance) {
  const std::size_t n = 6, p = samples_for(6, 5.0);
  const Mat a = gen_dict({n, DictKind::gaussian_iid, 34});
  const Mat x = gen_coeffs({n, p, FixedK{1}, ValueDist::gaussian, 35});
  const Mat y = matmul(a, x);
  for (Algorithm alg : {Algorithm::sc, Algorithm::dc, Algorithm::proj}) {
    RecoveryOptions opt;
    opt.algorithm = alg;
    EXPECT_LT(rel_error(recover(y, opt).a_hat, a).rel_error, 1e-8) << to_string(alg);
    opt.precondition = false;
    EXPECT_LT(rel_error(recover(y, opt).a_hat, a).rel_error, 1e-8) << to_string(alg) << " raw";
  }
}

TEST(Recover, ParseAlgorithm) {
  for (Algorithm alg : {Algorithm::sc, Algorithm::dc, Algorithm::proj, Algorithm::siv})
    EXPECT_EQ(parse_algorithm(to_string(alg)), alg);
  EXPECT_THROW(parse_algorithm("ksvd"), ConfigError);
}

}  // namespace
}  // namespace erspud

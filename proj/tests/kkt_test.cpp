#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "test_support.hpp"
#include "unmix/kkt.hpp"

using namespace unmix;

namespace {

/// Full bordered matrix times (x, lam) minus (h_F, s): the direct residual.
Vector bordered_residual(
  const Matrix & gram, const Vector & linear, double budget, const IndexSet & free,
  const SubproblemSolution & sol)
{
  const auto k = static_cast<Index>(free.size());
  Matrix bordered = Matrix::Zero(k + 1, k + 1);
  bordered.topLeftCorner(k, k) = restrict(gram, free, free);
  bordered.col(k).head(k).setOnes();
  bordered.row(k).head(k).setOnes();
  Vector z(k + 1);
  z << sol.free_values, sol.multiplier;
  Vector rhs(k + 1);
  rhs << restrict(linear, free), budget;
  return bordered * z - rhs;
}

Matrix random_spd(Index k, std::mt19937_64 & rng)
{
  std::normal_distribution<double> normal;
  const Matrix b = Matrix::NullaryExpr(k + 3, k, [&] { return normal(rng); });
  return b.transpose() * b;
}

}  // namespace

TEST(Factorize, IdentityRestriction)
{
  const auto f = factorize(Matrix::Identity(3, 3), {0, 2});
  EXPECT_EQ(f.dimension(), 2);
  EXPECT_EQ(f.factor(), Matrix::Identity(2, 2));
}

TEST(Factorize, DuplicatedColumnsAreRankDeficient)
{
  std::mt19937_64 rng(21);
  Matrix a = testkit::abs_normal(6, 4, rng);
  a.col(2) = a.col(0);
  const Matrix gram = a.transpose() * a;
  try {
    factorize(gram, {0, 1, 2});
    FAIL() << "expected RankDeficientLibrary";
  } catch (const UnmixError & e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficientLibrary);
  }
  EXPECT_NO_THROW(factorize(gram, {0, 1, 3}));
}

TEST(Factorize, ReconstructsRestrictedGram)
{
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = testkit::abs_normal(12, 6, rng);
    const Matrix gram = a.transpose() * a;
    IndexSet free;
    for (Index i = 0; i < 6; ++i) {
      if ((trial >> i) & 1 || i == trial % 6) { free.push_back(i); }
    }
    const Matrix hff = restrict(gram, free, free);
    const auto f = factorize(gram, free);
    EXPECT_LE((f.reconstruct() - hff).norm(), 1e-12 * hff.norm());
    EXPECT_GT(f.factor().diagonal().minCoeff(), 0.0);
  }
}

TEST(Factorize, RejectsBadIndexSets)
{
  EXPECT_THROW(factorize(Matrix::Identity(3, 3), {}), UnmixError);
  EXPECT_THROW(factorize(Matrix::Identity(3, 3), {0, 3}), UnmixError);
  EXPECT_THROW(factorize(Matrix::Identity(3, 3), {2, 1}), UnmixError);
}

TEST(SolveSubproblem, SingletonIsForcedToBudget)
{
  Matrix gram(2, 2);
  gram << 2.0, 0.5, 0.5, 3.0;
  const Vector h{{0.7, 1.1}};
  const auto sol = solve_subproblem(gram, h, 0.8, {1});
  ASSERT_EQ(sol.free_values.size(), 1);
  EXPECT_NEAR(sol.free_values(0), 0.8, 1e-15);
  EXPECT_NEAR(sol.multiplier, 1.1 - 3.0 * 0.8, 1e-15);
}

TEST(SolveSubproblem, IdentityGramClosedForm)
{
  const auto sol = solve_subproblem(Matrix::Identity(2, 2), Vector{{0.6, 0.2}}, 1.0, {0, 1});
  EXPECT_NEAR(sol.multiplier, -0.1, 1e-15);
  EXPECT_NEAR(sol.free_values(0), 0.7, 1e-15);
  EXPECT_NEAR(sol.free_values(1), 0.3, 1e-15);
  EXPECT_FALSE(sol.augmented);
}

TEST(SolveSubproblem, EmptyFreeSet)
{
  EXPECT_NO_THROW(solve_subproblem(Matrix::Identity(2, 2), Vector::Zero(2), 0.0, {}));
  try {
    solve_subproblem(Matrix::Identity(2, 2), Vector::Zero(2), 0.5, {});
    FAIL();
  } catch (const UnmixError & e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyFreeSet);
  }
}

TEST(SolveSubproblem, BorderedResidualOnRandomSystems)
{
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<Index> size(1, 20);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> budget(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Index k = size(rng);
    const Matrix gram = random_spd(k, rng);
    const Vector h = Vector::NullaryExpr(k, [&] { return 10 * normal(rng); });
    const double s = budget(rng);
    IndexSet free(static_cast<std::size_t>(k));
    std::iota(free.begin(), free.end(), Index{0});
    const auto sol = solve_subproblem(gram, h, s, free);
    const double scale = std::max(1.0, h.lpNorm<Eigen::Infinity>());
    const Vector r = bordered_residual(gram, h, s, free, sol);
    EXPECT_LE(r.head(k).lpNorm<Eigen::Infinity>(), 1e-9 * scale);
    EXPECT_LE(std::abs(r(k)), 1e-9 * std::max(1.0, s));
    EXPECT_GT(sol.schur, 0.0);
  }
}

TEST(SolveSubproblem, PermutationInvariance)
{
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 100; ++trial) {
    const Index k = 2 + trial % 8;
    const Matrix gram = random_spd(k, rng);
    const Vector h = Vector::Random(k);
    IndexSet free(static_cast<std::size_t>(k));
    std::iota(free.begin(), free.end(), Index{0});
    const auto base = solve_subproblem(gram, h, 0.7, free);

    std::vector<Index> perm(free);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix pg(k, k);
    Vector ph(k);
    for (Index r = 0; r < k; ++r) {
      ph(r) = h(perm[r]);
      for (Index c = 0; c < k; ++c) { pg(r, c) = gram(perm[r], perm[c]); }
    }
    const auto permuted = solve_subproblem(pg, ph, 0.7, free);
    EXPECT_NEAR(permuted.multiplier, base.multiplier, 1e-9);
    for (Index r = 0; r < k; ++r) {
      EXPECT_NEAR(permuted.free_values(r), base.free_values(perm[r]), 1e-9);
    }
  }
}

TEST(SolveSubproblem, MoreFreeThanBandsUsesAugmentedForm)
{
  // N = 3 bands, |F| = 4: H_FF is singular but the bordered system is not.
  std::mt19937_64 rng(25);
  const Matrix a = testkit::abs_normal(3, 4, rng);
  const Matrix gram = a.transpose() * a;
  const Vector h = a.transpose() * Vector{{0.4, 0.9, 0.2}};
  const IndexSet free{0, 1, 2, 3};

  SubproblemOptions options;
  options.rank_bound = 3;
  const auto sol = solve_subproblem(gram, h, 1.0, free, options);
  EXPECT_TRUE(sol.augmented);
  const Vector r = bordered_residual(gram, h, 1.0, free, sol);
  EXPECT_LE(r.lpNorm<Eigen::Infinity>(), 1e-9 * std::max(1.0, h.lpNorm<Eigen::Infinity>()));

  // the plain factorization refuses the same matrix
  EXPECT_THROW(factorize(gram, free), UnmixError);
}

TEST(SolveSubproblem, DuplicatedColumnsStayRankDeficient)
{
  std::mt19937_64 rng(26);
  Matrix a = testkit::abs_normal(8, 3, rng);
  a.col(1) = a.col(2);
  const Matrix gram = a.transpose() * a;
  const Vector h = a.transpose() * Vector::Ones(8);
  try {
    solve_subproblem(gram, h, 1.0, {0, 1, 2});
    FAIL() << "expected RankDeficientLibrary";
  } catch (const UnmixError & e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficientLibrary);
  }
}

TEST(SolveSubproblem, JitterIsOffByDefault)
{
  const Matrix gram = Matrix::Identity(2, 2);
  const Vector h{{0.6, 0.2}};
  SubproblemOptions options;
  options.jitter = true;
  const auto plain = solve_subproblem(gram, h, 1.0, {0, 1});
  const auto jittered = solve_subproblem(gram, h, 1.0, {0, 1}, options);
  EXPECT_NE(plain.multiplier, jittered.multiplier);
  EXPECT_NEAR(plain.multiplier, jittered.multiplier, 1e-9);
}

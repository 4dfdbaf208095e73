#include <gtest/gtest.h>

#include <numeric>

#include "altgdmin/iht.hpp"
#include "helpers.hpp"

using namespace altgdmin;
using testing_util::gaussian;
using testing_util::gaussian_vec;

namespace {

Vec<Real> vec(std::initializer_list<double> v) {
  Vec<Real> out(static_cast<Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

Vec<Real> random_sparse(Index n, Index rho, std::mt19937_64 &rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_real_distribution<double> mag(1.0, 6.0);
  std::bernoulli_distribution sign;
  Vec<Real> s = Vec<Real>::Zero(n);
  for (Index i = 0; i < rho; ++i) s(idx[static_cast<std::size_t>(i)]) = sign(rng) ? mag(rng) : -mag(rng);
  return s;
}

std::vector<Index> support(const Vec<Real> &s) {
  std::vector<Index> out;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) != 0.0) out.push_back(i);
  return out;
}

} // namespace

TEST(HardThreshold, KeepsLargestMagnitudes) {
  EXPECT_EQ(hard_threshold<Real>(vec({3, -5, 0.5, 0}), 2), vec({3, -5, 0, 0}));
}

TEST(HardThreshold, FullBudgetIsIdentity) {
  const Vec<Real> s = vec({0.1, -2, 3, 0, 7});
  EXPECT_EQ(hard_threshold<Real>(s, 5), s);
  EXPECT_EQ(hard_threshold<Real>(s, 9), s);
}

TEST(HardThreshold, TiesGoToLowerIndex) {
  EXPECT_EQ(hard_threshold<Real>(vec({1, -1, 1}), 2), vec({1, -1, 0}));
  EXPECT_EQ(hard_threshold<Real>(vec({2, 1, 1, 1}), 2), vec({2, 1, 0, 0}));
}

TEST(HardThreshold, ZeroBudgetGivesZero) {
  EXPECT_EQ(hard_threshold<Real>(vec({1, 2, 3}), 0), Vec<Real>::Zero(3));
}

TEST(HardThreshold, ComplexUsesModulus) {
  Vec<Complex> s(3);
  s << Complex(0, 3), Complex(2, 2), Complex(-1, 0);
  Vec<Complex> expected(3);
  expected << Complex(0, 3), Complex(0, 0), Complex(0, 0);
  EXPECT_EQ(hard_threshold<Complex>(s, 1), expected);
}

TEST(HardThreshold, IdempotentAndNonExpanding) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec<Real> s = gaussian_vec<Real>(15, rng);
    for (Index rho = 0; rho <= 15; rho += 3) {
      const Vec<Real> once = hard_threshold<Real>(s, rho);
      EXPECT_EQ(hard_threshold<Real>(once, rho), once);
      EXPECT_LE(once.norm(), s.norm());
      EXPECT_LE(support(once).size(), static_cast<std::size_t>(rho));
    }
  }
}

TEST(HardThreshold, IsEuclideanProjectionExhaustive) {
  std::mt19937_64 rng(43);
  const Index n = 8;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec<Real> s = gaussian_vec<Real>(n, rng);
    for (Index rho = 1; rho <= 3; ++rho) {
      const double best = (s - hard_threshold<Real>(s, rho)).norm();
      // every support of size rho; the optimal competitor on a support copies s there
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != rho) continue;
        Vec<Real> t = Vec<Real>::Zero(n);
        for (Index i = 0; i < n; ++i)
          if (mask & (1u << i)) t(i) = s(i);
        EXPECT_LE(best, (s - t).norm() + 1e-15);
      }
    }
  }
}

TEST(Iht, IdentityOperatorRecoversInOneStep) {
  std::mt19937_64 rng(47);
  const auto op = LinearOperatorHandle<Real>::from_matrix(Mat<Real>::Identity(20, 20));
  const Vec<Real> sstar = random_sparse(20, 3, rng);
  const Vec<Real> out = iht<Real>(sstar, op, {3, 1, StepRule::as_written}, Vec<Real>::Zero(20));
  EXPECT_EQ(out, sstar);
}

TEST(Iht, ExactSolutionIsFixedPoint) {
  std::mt19937_64 rng(53);
  const auto op = LinearOperatorHandle<Real>::from_matrix(gaussian<Real>(10, 30, rng));
  const Vec<Real> sstar = random_sparse(30, 2, rng);
  const Vec<Real> z = op.forward(sstar);
  for (auto rule : {StepRule::as_written, StepRule::niht, StepRule::niht_support})
    EXPECT_EQ(iht<Real>(z, op, {2, 5, rule}, sstar), sstar);
}

TEST(Iht, OutputRespectsBudget) {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 50; ++trial) {
    const auto op = LinearOperatorHandle<Complex>::from_matrix(gaussian<Complex>(8, 25, rng));
    const Vec<Complex> z = gaussian_vec<Complex>(8, rng);
    const Vec<Complex> out = iht<Complex>(z, op, {3, 4, StepRule::niht}, gaussian_vec<Complex>(25, rng));
    EXPECT_LE((out.array() != Complex(0.0)).count(), 3);
  }
}

TEST(Iht, RejectsBadInput) {
  const auto op = LinearOperatorHandle<Real>::from_matrix(Mat<Real>::Identity(4, 4));
  EXPECT_THROW(iht<Real>(Vec<Real>::Zero(3), op, {1, 1}, Vec<Real>::Zero(4)), DimensionError);
  EXPECT_THROW(iht<Real>(Vec<Real>::Zero(4), op, {1, 1}, Vec<Real>::Zero(5)), DimensionError);
  EXPECT_THROW(iht<Real>(Vec<Real>::Zero(4), op, {1, 0}, Vec<Real>::Zero(4)), std::invalid_argument);
  EXPECT_THROW(iht<Real>(Vec<Real>::Zero(4), op, {-1, 1}, Vec<Real>::Zero(4)), std::invalid_argument);
}

TEST(Iht, ZeroGradientGuardReturnsIterate) {
  const auto op = LinearOperatorHandle<Real>::from_matrix(Mat<Real>::Zero(3, 5));
  const Vec<Real> s = vec({0, 1, 0, 0, 2});
  EXPECT_EQ(iht<Real>(Vec<Real>::Zero(3), op, {2, 3}, s), s);
}

namespace {

Index oracle_support(const Mat<Real> &a, const Vec<Real> &z) {
  Index best_j = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < a.cols(); ++j) {
    const double coef = a.col(j).dot(z) / a.col(j).squaredNorm();
    const double res = (z - coef * a.col(j)).norm();
    if (res < best) best = res, best_j = j;
  }
  return best_j;
}

} // namespace

TEST(Iht, NormalizedColumnsMatchExhaustiveSupportOracle) {
  const Index n = 12, m = 8;
  int matches = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    Mat<Real> a = gaussian<Real>(m, n, rng);
    a.colwise().normalize();
    const Vec<Real> z = a * random_sparse(n, 1, rng);
    const auto op = LinearOperatorHandle<Real>::from_matrix(a);
    const Vec<Real> s = iht<Real>(z, op, {1, 10, StepRule::niht_support}, Vec<Real>::Zero(n));
    if (support(s) == std::vector<Index>{oracle_support(a, z)}) ++matches;
  }
  EXPECT_EQ(matches, 50);
}

TEST(Iht, OneSparseSupportIsLargestCorrelation) {
  // with rho = 1 the first step keeps argmax |a_j^T z|, and for unequal column
  // norms that index is a fixed point even when the LS oracle prefers another
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(2000 + seed);
    const Mat<Real> a = gaussian<Real>(8, 12, rng);
    const Vec<Real> z = a * random_sparse(12, 1, rng);
    Index corr = 0;
    (a.transpose() * z).cwiseAbs().maxCoeff(&corr);
    const auto op = LinearOperatorHandle<Real>::from_matrix(a);
    const Vec<Real> s = iht<Real>(z, op, {1, 10, StepRule::niht_support}, Vec<Real>::Zero(12));
    EXPECT_EQ(support(s), std::vector<Index>{corr}) << "seed " << seed;
  }
}

TEST(Iht, NihtReducesResidual) {
  const Index n = 64, rho = 3, m = 50; // m >= 4 rho ln n
  int decreased = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    const Mat<Real> a = gaussian<Real>(m, n, rng);
    const Vec<Real> z = a * random_sparse(n, rho, rng);
    const auto op = LinearOperatorHandle<Real>::from_matrix(a);
    const Vec<Real> s = iht<Real>(z, op, {rho, 10, StepRule::niht}, Vec<Real>::Zero(n));
    if ((a * s - z).norm() < z.norm()) ++decreased;
  }
  EXPECT_GE(decreased, 990);
}

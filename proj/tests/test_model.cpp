#include <gtest/gtest.h>

#include "altgdmin/model.hpp"
#include "helpers.hpp"

using namespace altgdmin;
using testing_util::gaussian;
using testing_util::orthonormal;

namespace {

ColumnSparseMatrix<Real> sample_sparse(Index n, Index q, std::mt19937_64 &rng) {
  std::vector<std::vector<SparseEntry<Real>>> cols(static_cast<std::size_t>(q));
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (auto &c : cols) {
    Index a = pick(rng), b = pick(rng);
    if (a > b) std::swap(a, b);
    c.push_back({a, 1.5});
    if (b != a) c.push_back({b, -2.0});
  }
  return {n, std::move(cols)};
}

} // namespace

TEST(Reconstruct, IdentityBlockOnTop) {
  const Index n = 6, r = 3;
  FactoredLowRank<Real> lr{Mat<Real>::Identity(n, r), Mat<Real>::Identity(r, r)};
  const Mat<Real> x = reconstruct(lr, ColumnSparseMatrix<Real>(n, r));
  Mat<Real> expected = Mat<Real>::Zero(n, r);
  expected.topRows(r).setIdentity();
  EXPECT_EQ(x, expected);
}

TEST(Reconstruct, ZeroSparseGivesProduct) {
  std::mt19937_64 rng(3);
  FactoredLowRank<Complex> lr{orthonormal<Complex>(8, 2, rng), gaussian<Complex>(2, 5, rng)};
  EXPECT_EQ(reconstruct(lr, ColumnSparseMatrix<Complex>(8, 5)), Mat<Complex>(lr.U * lr.B));
}

TEST(Reconstruct, UnitaryFactorInvariance) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    FactoredLowRank<Complex> lr{orthonormal<Complex>(10, 3, rng), gaussian<Complex>(3, 7, rng)};
    const Mat<Complex> rot = orthonormal<Complex>(3, 3, rng);
    FactoredLowRank<Complex> turned{lr.U * rot, rot.adjoint() * lr.B};
    const ColumnSparseMatrix<Complex> s(10, 7);
    EXPECT_LE((reconstruct(lr, s) - reconstruct(turned, s)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Reconstruct, LinearInSparsePart) {
  std::mt19937_64 rng(7);
  const Index n = 9, q = 6;
  FactoredLowRank<Real> lr{orthonormal<Real>(n, 2, rng), gaussian<Real>(2, q, rng)};
  const auto s1 = sample_sparse(n, q, rng);
  const auto s2 = sample_sparse(n, q, rng);
  const auto both = ColumnSparseMatrix<Real>::from_dense(s1.to_dense() + s2.to_dense());
  const Mat<Real> lhs = reconstruct(lr, both);
  const Mat<Real> rhs = reconstruct(lr, s1) + s2.to_dense();
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Reconstruct, DimensionMismatchThrows) {
  FactoredLowRank<Real> lr{Mat<Real>::Identity(4, 2), Mat<Real>::Ones(2, 3)};
  EXPECT_THROW(reconstruct(lr, ColumnSparseMatrix<Real>(5, 3)), DimensionError);
  EXPECT_THROW(reconstruct(lr, ColumnSparseMatrix<Real>(4, 2)), DimensionError);
  FactoredLowRank<Real> bad{Mat<Real>::Identity(4, 2), Mat<Real>::Ones(3, 3)};
  EXPECT_THROW(reconstruct(bad, ColumnSparseMatrix<Real>(4, 3)), DimensionError);
}

TEST(RelError, Examples) {
  std::mt19937_64 rng(11);
  const Mat<Real> x = gaussian<Real>(5, 4, rng);
  EXPECT_EQ(rel_error<Real>(x, x), 0.0);
  EXPECT_DOUBLE_EQ(rel_error<Real>(x, Mat<Real>::Zero(5, 4)), 1.0);
  EXPECT_NEAR(rel_error<Real>(x, 2.0 * x), 1.0, 1e-15);
}

TEST(RelError, ScaleReporting) {
  std::mt19937_64 rng(13);
  const Mat<Real> x = gaussian<Real>(6, 6, rng);
  for (double c : {-3.0, -0.5, 0.0, 0.25, 1.0, 4.0})
    EXPECT_NEAR(rel_error<Real>(x, c * x), std::abs(1.0 - c), 1e-12) << "c = " << c;
}

TEST(RelError, ZeroReferenceIsUndefined) {
  EXPECT_THROW(rel_error<Real>(Mat<Real>::Zero(3, 3), Mat<Real>::Ones(3, 3)), UndefinedMetricError);
}

TEST(RelError, FactoredMatchesDense) {
  std::mt19937_64 rng(17);
  GroundTruth truth{orthonormal<Real>(12, 2, rng), gaussian<Real>(2, 8, rng), sample_sparse(12, 8, rng)};
  FactoredLowRank<Complex> lr{orthonormal<Complex>(12, 2, rng), gaussian<Complex>(2, 8, rng)};
  const auto s = sample_sparse(12, 8, rng).cast<Complex>();
  const double dense = rel_error<Complex>(truth.dense().cast<Complex>(), reconstruct(lr, s));
  EXPECT_NEAR(rel_error(truth, lr, s), dense, 1e-12);
}

TEST(Coherence, IdentityIsOne) {
  EXPECT_NEAR(coherence_stat(Mat<Real>::Identity(4, 4)), 1.0, 1e-14);
}

TEST(Coherence, ScaledColumnExceedsOne) {
  Mat<Real> b = Mat<Real>::Zero(2, 200);
  for (Index k = 0; k < 200; ++k) b(k % 2, k) = 1.0;
  b(0, 0) = 10.0;
  EXPECT_GT(coherence_stat(b), 1.0);
}

TEST(Coherence, MatchesDirectColumnScan) {
  std::mt19937_64 rng(19);
  const Mat<Real> b = gaussian<Real>(4, 600, rng);
  double max_col = 0.0;
  for (Index k = 0; k < b.cols(); ++k) max_col = std::max(max_col, b.col(k).norm());
  const double sigma = Eigen::JacobiSVD<Mat<Real>>(b).singularValues()(0);
  EXPECT_NEAR(coherence_stat(b), max_col * std::sqrt(600.0 / 4.0) / sigma, 1e-10);
}

TEST(ColumnSparse, RejectsBadColumns) {
  using E = SparseEntry<Real>;
  EXPECT_THROW(ColumnSparseMatrix<Real>(4, {{E{2, 1.0}, E{1, 1.0}}}), DimensionError);
  EXPECT_THROW(ColumnSparseMatrix<Real>(4, {{E{1, 1.0}, E{1, 2.0}}}), DimensionError);
  EXPECT_THROW(ColumnSparseMatrix<Real>(4, {{E{4, 1.0}}}), DimensionError);
  EXPECT_THROW(ColumnSparseMatrix<Real>(4, {{E{0, 0.0}}}), DimensionError);
  EXPECT_NO_THROW(ColumnSparseMatrix<Real>(4, {{E{0, 1.0}, E{3, -1.0}}, {}}));
}

TEST(ColumnSparse, DenseRoundTripDropsZeros) {
  Mat<Real> d = Mat<Real>::Zero(5, 3);
  d(1, 0) = 2.0;
  d(4, 0) = -1.0;
  d(0, 2) = 3.0;
  const auto s = ColumnSparseMatrix<Real>::from_dense(d);
  EXPECT_EQ(s.nnz(0), 2);
  EXPECT_EQ(s.nnz(1), 0);
  EXPECT_EQ(s.max_column_nnz(), 2);
  EXPECT_EQ(s.to_dense(), d);
}

TEST(FactoredLowRank, OrthonormalityDefect) {
  std::mt19937_64 rng(23);
  FactoredLowRank<Complex> lr{orthonormal<Complex>(20, 4, rng), Mat<Complex>::Zero(4, 3)};
  EXPECT_LE(lr.orthonormality_defect(), 1e-12);
  lr.U *= 2.0;
  EXPECT_GT(lr.orthonormality_defect(), 1.0);
}

#include "altgdmin/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace altgdmin {

template <FieldScalar T> double FactoredLowRank<T>::orthonormality_defect() const {
  const Index r = U.cols();
  return (U.adjoint() * U - Mat<T>::Identity(r, r)).norm();
}

template <FieldScalar T>
ColumnSparseMatrix<T>::ColumnSparseMatrix(Index n, Index q)
  : n_(n), columns_(static_cast<std::size_t>(q)) {
  if (n < 0 || q < 0) throw DimensionError("ColumnSparseMatrix: negative dimension");
}

template <FieldScalar T>
ColumnSparseMatrix<T>::ColumnSparseMatrix(Index n, std::vector<std::vector<Entry>> columns)
  : n_(n), columns_(std::move(columns)) {
  for (std::size_t k = 0; k < columns_.size(); ++k) {
    Index prev = -1;
    for (const auto &e : columns_[k]) {
      if (e.index <= prev || e.index >= n_)
        throw DimensionError("ColumnSparseMatrix: column " + std::to_string(k) +
                             " has unsorted, duplicate or out-of-range index " +
                             std::to_string(e.index));
      if (e.value == T(0))
        throw DimensionError("ColumnSparseMatrix: column " + std::to_string(k) +
                             " stores an explicit zero");
      prev = e.index;
    }
  }
}

template <FieldScalar T> Index ColumnSparseMatrix<T>::max_column_nnz() const {
  std::size_t best = 0;
  for (const auto &c : columns_) best = std::max(best, c.size());
  return static_cast<Index>(best);
}

template <FieldScalar T> void ColumnSparseMatrix<T>::set_column(Index k, const Vec<T> &dense) {
  if (dense.size() != n_) throw DimensionError("set_column: length mismatch");
  auto &col = columns_.at(static_cast<std::size_t>(k));
  col.clear();
  for (Index i = 0; i < n_; ++i)
    if (dense[i] != T(0)) col.push_back({i, dense[i]});
}

template <FieldScalar T> Vec<T> ColumnSparseMatrix<T>::dense_column(Index k) const {
  Vec<T> out = Vec<T>::Zero(n_);
  for (const auto &e : column(k)) out[e.index] = e.value;
  return out;
}

template <FieldScalar T>
void ColumnSparseMatrix<T>::add_column_to(Index k, Eigen::Ref<Vec<T>> out) const {
  for (const auto &e : column(k)) out[e.index] += e.value;
}

template <FieldScalar T> Mat<T> ColumnSparseMatrix<T>::to_dense() const {
  Mat<T> out = Mat<T>::Zero(n_, cols());
  for (Index k = 0; k < cols(); ++k)
    for (const auto &e : column(k)) out(e.index, k) = e.value;
  return out;
}

template <FieldScalar T>
ColumnSparseMatrix<T> ColumnSparseMatrix<T>::from_dense(const Mat<T> &dense) {
  ColumnSparseMatrix out(dense.rows(), dense.cols());
  for (Index k = 0; k < dense.cols(); ++k) out.set_column(k, dense.col(k));
  return out;
}

Vec<Real> GroundTruth::column(Index k) const {
  Vec<Real> x = Ustar * Bstar.col(k);
  Sstar.add_column_to(k, x);
  return x;
}

Mat<Real> GroundTruth::dense() const {
  Mat<Real> x = Ustar * Bstar;
  for (Index k = 0; k < x.cols(); ++k) Sstar.add_column_to(k, x.col(k));
  return x;
}

template <FieldScalar T>
Mat<T> reconstruct(const FactoredLowRank<T> &lr, const ColumnSparseMatrix<T> &s) {
  if (lr.U.cols() != lr.B.rows() || lr.U.rows() != s.rows() || lr.B.cols() != s.cols())
    throw DimensionError("reconstruct: U is " + std::to_string(lr.U.rows()) + "x" +
                         std::to_string(lr.U.cols()) + ", B is " + std::to_string(lr.B.rows()) +
                         "x" + std::to_string(lr.B.cols()) + ", S is " +
                         std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
  Mat<T> x = lr.U * lr.B;
  for (Index k = 0; k < x.cols(); ++k) s.add_column_to(k, x.col(k));
  return x;
}

template <FieldScalar T> double rel_error(const Mat<T> &xstar, const Mat<T> &x) {
  if (xstar.rows() != x.rows() || xstar.cols() != x.cols())
    throw DimensionError("rel_error: shape mismatch");
  const double denom = xstar.norm();
  if (denom == 0.0) throw UndefinedMetricError("rel_error: reference matrix is zero");
  return (xstar - x).norm() / denom;
}

template <FieldScalar T>
double rel_error(const GroundTruth &truth, const FactoredLowRank<T> &lr,
                 const ColumnSparseMatrix<T> &s) {
  if (truth.rows() != lr.rows() || truth.cols() != lr.cols() || s.cols() != lr.cols())
    throw DimensionError("rel_error: shape mismatch");
  double num = 0.0, den = 0.0;
  for (Index k = 0; k < truth.cols(); ++k) {
    const Vec<Real> xs = truth.column(k);
    Vec<T> x = lr.U * lr.B.col(k);
    s.add_column_to(k, x);
    num += (xs.template cast<T>() - x).squaredNorm();
    den += xs.squaredNorm();
  }
  if (den == 0.0) throw UndefinedMetricError("rel_error: reference matrix is zero");
  return std::sqrt(num / den);
}

double coherence_stat(const Mat<Real> &bstar) {
  const double smax = Eigen::JacobiSVD<Mat<Real>>(bstar).singularValues()(0);
  if (smax == 0.0) throw UndefinedMetricError("coherence_stat: B* is zero");
  const double max_col = bstar.colwise().norm().maxCoeff();
  const double q = static_cast<double>(bstar.cols());
  const double r = static_cast<double>(bstar.rows());
  return max_col * std::sqrt(q / r) / smax;
}

template struct FactoredLowRank<Real>;
template struct FactoredLowRank<Complex>;
template class ColumnSparseMatrix<Real>;
template class ColumnSparseMatrix<Complex>;

template Mat<Real> reconstruct(const FactoredLowRank<Real> &, const ColumnSparseMatrix<Real> &);
template Mat<Complex> reconstruct(const FactoredLowRank<Complex> &,
                                  const ColumnSparseMatrix<Complex> &);
template double rel_error(const Mat<Real> &, const Mat<Real> &);
template double rel_error(const Mat<Complex> &, const Mat<Complex> &);
template double rel_error(const GroundTruth &, const FactoredLowRank<Real> &,
                          const ColumnSparseMatrix<Real> &);
template double rel_error(const GroundTruth &, const FactoredLowRank<Complex> &,
                          const ColumnSparseMatrix<Complex> &);

} // namespace altgdmin

#include "altgdmin/reference.hpp"

#include <cmath>

namespace altgdmin::reference {

template <FieldScalar T> Mat<T> pseudo_inverse(const Mat<T> &m) {
  const Mat<T> gram = m.adjoint() * m;
  return gram.llt().solve(m.adjoint());
}

template <FieldScalar T> Mat<T> residual_operator(const Mat<T> &a, const Mat<T> &u) {
  if (u.cols() == 0) return a;
  const Mat<T> au = a * u;
  return a - au * (pseudo_inverse(au) * a);
}

template <FieldScalar T> Vec<T> residual_target(const Mat<T> &a, const Mat<T> &u, const Vec<T> &y) {
  if (u.cols() == 0) return y;
  const Mat<T> au = a * u;
  return y - au * (pseudo_inverse(au) * y);
}

template <FieldScalar T>
kernels::ColumnStageResult<T> column_stage(const Mat<T> &u, const MeasurementEnsemble<T> &ens,
                                           const Mat<T> &y, const ColumnSparseMatrix<T> &s_prev,
                                           const kernels::ColumnStageOptions &opt) {
  const Index n = ens.n(), q = ens.q(), r = u.cols();
  kernels::ColumnStageResult<T> out;
  out.sparse = ColumnSparseMatrix<T>(n, q);
  out.coefficients = Mat<T>::Zero(r, q);

  for (Index k = 0; k < q; ++k) {
    Mat<T> scratch;
    const Mat<T> a = ens.matrix(k, scratch);
    const Vec<T> yk = y.col(k);
    Vec<T> s = Vec<T>::Zero(n);
    if (opt.update_sparse) {
      s = iht<T>(residual_target(a, u, yk), LinearOperatorHandle<T>::from_matrix(residual_operator(a, u)),
                 opt.iht, s_prev.dense_column(k));
      out.sparse.set_column(k, s);
    }
    const Mat<T> au = a * u;
    out.coefficients.col(k) = r == 0 ? Vec<T>(0) : Vec<T>(pseudo_inverse(au) * (yk - a * s));
  }
  out.gradient = gradient_U(u, out.coefficients, out.sparse, y, ens);
  out.objective = objective(u, out.coefficients, out.sparse, y, ens);
  if (opt.truth)
    out.rel_error = rel_error(*opt.truth, FactoredLowRank<T>{u, out.coefficients}, out.sparse);
  return out;
}

template <FieldScalar T>
Mat<T> gradient_U(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                  const Mat<T> &y, const MeasurementEnsemble<T> &ens) {
  Mat<T> grad = Mat<T>::Zero(u.rows(), u.cols());
  for (Index k = 0; k < ens.q(); ++k) {
    Mat<T> scratch;
    const Mat<T> a = ens.matrix(k, scratch);
    const Vec<T> x = u * b.col(k) + s.dense_column(k);
    grad += a.adjoint() * (a * x - y.col(k)) * b.col(k).adjoint();
  }
  return grad;
}

template <FieldScalar T>
double objective(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                 const Mat<T> &y, const MeasurementEnsemble<T> &ens) {
  double f = 0.0;
  for (Index k = 0; k < ens.q(); ++k) {
    Mat<T> scratch;
    const Mat<T> a = ens.matrix(k, scratch);
    f += (y.col(k) - a * (u * b.col(k) + s.dense_column(k))).squaredNorm();
  }
  return f;
}

template <FieldScalar T>
Mat<T> build_l0(const Mat<T> &y, const MeasurementEnsemble<T> &ens, const ColumnSparseMatrix<T> &s) {
  Mat<T> l0(ens.n(), ens.q());
  for (Index k = 0; k < ens.q(); ++k) {
    Mat<T> scratch;
    const Mat<T> a = ens.matrix(k, scratch);
    l0.col(k) = a.adjoint() * (y.col(k) - a * s.dense_column(k));
  }
  return l0;
}

template <FieldScalar T> Mat<T> top_left_singular_vectors(const Mat<T> &a, Index r) {
  Eigen::BDCSVD<Mat<T>> svd(a, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(r);
}

template <FieldScalar T> Mat<T> gram_schmidt(const Mat<T> &v) {
  Mat<T> q = v;
  for (Index j = 0; j < q.cols(); ++j) {
    for (Index i = 0; i < j; ++i) {
      const T proj = q.col(i).dot(q.col(j));
      q.col(j) -= proj * q.col(i);
    }
    q.col(j) /= q.col(j).norm();
  }
  return q;
}

#define ALTGDMIN_INSTANTIATE(T)                                                                  \
  template Mat<T> pseudo_inverse(const Mat<T> &);                                                \
  template Mat<T> residual_operator(const Mat<T> &, const Mat<T> &);                             \
  template Vec<T> residual_target(const Mat<T> &, const Mat<T> &, const Vec<T> &);               \
  template kernels::ColumnStageResult<T> column_stage(                                           \
      const Mat<T> &, const MeasurementEnsemble<T> &, const Mat<T> &,                            \
      const ColumnSparseMatrix<T> &, const kernels::ColumnStageOptions &);                       \
  template Mat<T> gradient_U(const Mat<T> &, const Mat<T> &, const ColumnSparseMatrix<T> &,      \
                             const Mat<T> &, const MeasurementEnsemble<T> &);                    \
  template double objective(const Mat<T> &, const Mat<T> &, const ColumnSparseMatrix<T> &,       \
                            const Mat<T> &, const MeasurementEnsemble<T> &);                     \
  template Mat<T> build_l0(const Mat<T> &, const MeasurementEnsemble<T> &,                       \
                           const ColumnSparseMatrix<T> &);                                       \
  template Mat<T> top_left_singular_vectors(const Mat<T> &, Index);                              \
  template Mat<T> gram_schmidt(const Mat<T> &);

ALTGDMIN_INSTANTIATE(Real)
ALTGDMIN_INSTANTIATE(Complex)

} // namespace altgdmin::reference

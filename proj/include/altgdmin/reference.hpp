#pragma once

#include "altgdmin/column_kernels.hpp"

// Serial, dense, textbook versions of the solver kernels. They materialize
// every operator explicitly and are kept as test oracles and benchmark baselines.

namespace altgdmin::reference {

/// (M^H M)^{-1} M^H through the normal equations.
template <FieldScalar T> Mat<T> pseudo_inverse(const Mat<T> &m);

/// Dense M_k = A_k - A_k U (A_k U)^+ A_k.
template <FieldScalar T> Mat<T> residual_operator(const Mat<T> &a, const Mat<T> &u);

/// z_k = y_k - A_k U (A_k U)^+ y_k.
template <FieldScalar T> Vec<T> residual_target(const Mat<T> &a, const Mat<T> &u, const Vec<T> &y);

/// Serial counterpart of kernels::column_stage built from the dense operators above.
template <FieldScalar T>
kernels::ColumnStageResult<T> column_stage(const Mat<T> &u, const MeasurementEnsemble<T> &ens,
                                           const Mat<T> &y, const ColumnSparseMatrix<T> &s_prev,
                                           const kernels::ColumnStageOptions &opt);

/// Plain ascending-k sum of A_k^H (A_k x_k - y_k) b_k^H.
template <FieldScalar T>
Mat<T> gradient_U(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                  const Mat<T> &y, const MeasurementEnsemble<T> &ens);

template <FieldScalar T>
double objective(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                 const Mat<T> &y, const MeasurementEnsemble<T> &ens);

/// Dense L0 = [A_1^H (y_1 - A_1 s_1), ..., A_q^H (y_q - A_q s_q)].
template <FieldScalar T>
Mat<T> build_l0(const Mat<T> &y, const MeasurementEnsemble<T> &ens, const ColumnSparseMatrix<T> &s);

/// Leading r left singular vectors from a full SVD.
template <FieldScalar T> Mat<T> top_left_singular_vectors(const Mat<T> &a, Index r);

/// Modified Gram-Schmidt orthonormalization of the columns of v.
template <FieldScalar T> Mat<T> gram_schmidt(const Mat<T> &v);

} // namespace altgdmin::reference

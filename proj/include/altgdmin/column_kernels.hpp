#pragma once

#include <optional>

#include "altgdmin/iht.hpp"
#include "altgdmin/measurement.hpp"
#include "altgdmin/model.hpp"

// OpenMP kernels for the per-column stages of the solver. Every kernel is
// deterministic in the thread count: per-column work is independent, and
// sums over columns run through blocked_sum, whose block boundaries are fixed.

namespace altgdmin::kernels {

/// Columns per reduction block. Part of the numerical contract: changing it
/// changes rounding in every cross-column sum.
inline constexpr Index kReductionBlock = 16;

/// threads <= 0 selects the OpenMP default.
int resolve_threads(int threads);

/// Thin QR of A_k U. Shared by the residual problem, the IHT operator and the LS solve.
template <FieldScalar T> class ColumnProjector {
public:
  /// Throws RankDeficiencyError (tagged with column/iteration) if A_k U lacks full column rank.
  ColumnProjector(const Mat<T> &au, Index column = -1, int iteration = -1);

  Index rank() const { return basis_.cols(); }
  const Mat<T> &basis() const { return basis_; }

  /// (I - P_k) v, P_k the orthogonal projector onto range(A_k U)
  Vec<T> project_out(const Vec<T> &v) const;
  /// (A_k U)^+ rhs
  Vec<T> solve(const Vec<T> &rhs) const;

private:
  Mat<T> basis_;
  Mat<T> upper_;
};

/// A_k s for sparse s, touching only the stored columns of A_k.
template <FieldScalar T>
Vec<T> apply_sparse(const Mat<T> &a, const ColumnSparseMatrix<T> &s, Index k);

struct ColumnStageOptions {
  bool update_sparse = true; // false: lr_only, S stays zero
  IhtParams iht;
  int iteration = 0;
  int threads = 0;
  const GroundTruth *truth = nullptr;
};

template <FieldScalar T> struct ColumnStageResult {
  ColumnSparseMatrix<T> sparse;
  Mat<T> coefficients; // B
  Mat<T> gradient;     // grad_U f(U, B, S) at the returned B, S
  double objective = 0.0;
  std::optional<double> rel_error;
};

/// One fused pass over the columns for fixed U: residual problem, IHT warm
/// start from s_prev, LS for b_k, then the column's gradient and objective terms.
template <FieldScalar T>
ColumnStageResult<T> column_stage(const Mat<T> &u, const MeasurementEnsemble<T> &ens,
                                  const Mat<T> &y, const ColumnSparseMatrix<T> &s_prev,
                                  const ColumnStageOptions &opt);

/// IHT on (y_k, A_k) from zero for every column.
template <FieldScalar T>
ColumnSparseMatrix<T> initial_sparse(const MeasurementEnsemble<T> &ens, const Mat<T> &y,
                                     const IhtParams &params, int threads);

/// b_k = (A_k U)^+ (y_k - A_k s_k) for every column.
template <FieldScalar T>
Mat<T> least_squares(const Mat<T> &u, const MeasurementEnsemble<T> &ens, const Mat<T> &y,
                     const ColumnSparseMatrix<T> &s, int threads, int iteration = -1);

/// IHT on the residual problems (z_k, M_k) warm-started from s_prev.
template <FieldScalar T>
ColumnSparseMatrix<T> residual_sparse(const Mat<T> &u, const MeasurementEnsemble<T> &ens,
                                      const Mat<T> &y, const ColumnSparseMatrix<T> &s_prev,
                                      const IhtParams &params, int threads, int iteration = -1);

/// sum_k A_k^H (A_k (U b_k + s_k) - y_k) b_k^H with blocked reduction.
template <FieldScalar T>
Mat<T> gradient(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                const Mat<T> &y, const MeasurementEnsemble<T> &ens, int threads);

/// sum_k ||y_k - A_k (U b_k + s_k)||^2
template <FieldScalar T>
double objective(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                 const Mat<T> &y, const MeasurementEnsemble<T> &ens, int threads);

/// Residuals r_k = y_k - A_k s_k, the m x q data behind L0 = [A_k^H r_k].
template <FieldScalar T>
Mat<T> sparse_residuals(const MeasurementEnsemble<T> &ens, const Mat<T> &y,
                        const ColumnSparseMatrix<T> &s, int threads);

/// L0 L0^H Q = sum_k a_k (a_k^H Q), a_k = A_k^H r_k recomputed per column.
template <FieldScalar T>
Mat<T> gram_apply(const MeasurementEnsemble<T> &ens, const Mat<T> &residuals, const Mat<T> &q,
                  int threads);

} // namespace altgdmin::kernels

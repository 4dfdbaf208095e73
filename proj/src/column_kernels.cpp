#include "altgdmin/column_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <vector>

#include <omp.h>

namespace altgdmin::kernels {

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

namespace {

void rethrow_first(const std::vector<std::exception_ptr> &errors) {
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
}

/// body(k) for every column, in parallel; the lowest failing column's exception wins.
template <class Body> void for_each_column(Index q, int threads, Body &&body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(q));
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
  for (Index k = 0; k < q; ++k) {
    try {
      body(k);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  rethrow_first(errors);
}

/// sum over columns of body(k, acc) contributions. Columns are grouped into
/// fixed blocks of kReductionBlock, each summed in ascending k, and the block
/// partials are added in block order, so the result does not depend on threads.
template <FieldScalar T, class Body>
Mat<T> blocked_sum(Index q, Index rows, Index cols, int threads, Body &&body) {
  const Index blocks = (q + kReductionBlock - 1) / kReductionBlock;
  std::vector<Mat<T>> partial(static_cast<std::size_t>(blocks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(q));
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
  for (Index blk = 0; blk < blocks; ++blk) {
    Mat<T> acc = Mat<T>::Zero(rows, cols);
    const Index end = std::min(q, (blk + 1) * kReductionBlock);
    for (Index k = blk * kReductionBlock; k < end; ++k) {
      try {
        body(k, acc);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
    partial[static_cast<std::size_t>(blk)] = std::move(acc);
  }
  rethrow_first(errors);
  Mat<T> total = Mat<T>::Zero(rows, cols);
  for (const auto &p : partial) total += p;
  return total;
}

double serial_sum(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

template <FieldScalar T>
void check_shapes(const MeasurementEnsemble<T> &ens, Index y_rows, Index y_cols,
                  const char *who) {
  if (y_rows != ens.m() || y_cols != ens.q())
    throw DimensionError(std::string(who) + ": Y is " + std::to_string(y_rows) + "x" +
                         std::to_string(y_cols) + ", ensemble expects " +
                         std::to_string(ens.m()) + "x" + std::to_string(ens.q()));
}

template <FieldScalar T> void check_basis(const Mat<T> &u, Index n, const char *who) {
  if (u.rows() != n)
    throw DimensionError(std::string(who) + ": U has " + std::to_string(u.rows()) +
                         " rows, expected " + std::to_string(n));
}

template <FieldScalar T> void check_sparse(const ColumnSparseMatrix<T> &s, Index n, Index q,
                                           const char *who) {
  if (s.rows() != n || s.cols() != q)
    throw DimensionError(std::string(who) + ": S is " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()) + ", expected " + std::to_string(n) + "x" +
                         std::to_string(q));
}

/// M_k = (I - P_k) A_k as closures over A_k and its projector.
template <FieldScalar T>
LinearOperatorHandle<T> residual_operator(const Mat<T> &a, const ColumnProjector<T> &proj) {
  LinearOperatorHandle<T> op;
  op.rows = a.rows();
  op.cols = a.cols();
  op.forward = [&a, &proj](const Vec<T> &x) -> Vec<T> { return proj.project_out(a * x); };
  op.adjoint = [&a, &proj](const Vec<T> &w) -> Vec<T> {
    return a.adjoint() * proj.project_out(w);
  };
  return op;
}

template <FieldScalar T> LinearOperatorHandle<T> plain_operator(const Mat<T> &a) {
  LinearOperatorHandle<T> op;
  op.rows = a.rows();
  op.cols = a.cols();
  op.forward = [&a](const Vec<T> &x) -> Vec<T> { return a * x; };
  op.adjoint = [&a](const Vec<T> &w) -> Vec<T> { return a.adjoint() * w; };
  return op;
}

} // namespace

template <FieldScalar T>
ColumnProjector<T>::ColumnProjector(const Mat<T> &au, Index column, int iteration) {
  const Index m = au.rows(), r = au.cols();
  if (r == 0) {
    basis_.resize(m, 0);
    upper_.resize(0, 0);
    return;
  }
  if (r > m)
    throw RankDeficiencyError("A_k U is " + std::to_string(m) + "x" + std::to_string(r) +
                                  " (r > m) in column " + std::to_string(column),
                              column, iteration);
  Eigen::HouseholderQR<Mat<T>> qr(au);
  basis_ = qr.householderQ() * Mat<T>::Identity(m, r);
  upper_ = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
  const double scale = au.norm();
  const double tol = 1e-12 * scale;
  for (Index j = 0; j < r; ++j)
    if (scale == 0.0 || std::abs(upper_(j, j)) <= tol)
      throw RankDeficiencyError("A_k U is rank deficient in column " + std::to_string(column) +
                                    " at iteration " + std::to_string(iteration),
                                column, iteration);
}

template <FieldScalar T> Vec<T> ColumnProjector<T>::project_out(const Vec<T> &v) const {
  if (basis_.cols() == 0) return v;
  return v - basis_ * (basis_.adjoint() * v);
}

template <FieldScalar T> Vec<T> ColumnProjector<T>::solve(const Vec<T> &rhs) const {
  if (basis_.cols() == 0) return Vec<T>(0);
  return upper_.template triangularView<Eigen::Upper>().solve(basis_.adjoint() * rhs);
}

template <FieldScalar T>
Vec<T> apply_sparse(const Mat<T> &a, const ColumnSparseMatrix<T> &s, Index k) {
  Vec<T> out = Vec<T>::Zero(a.rows());
  for (const auto &e : s.column(k)) out += a.col(e.index) * e.value;
  return out;
}

template <FieldScalar T>
ColumnStageResult<T> column_stage(const Mat<T> &u, const MeasurementEnsemble<T> &ens,
                                  const Mat<T> &y, const ColumnSparseMatrix<T> &s_prev,
                                  const ColumnStageOptions &opt) {
  const Index n = ens.n(), q = ens.q(), r = u.cols();
  check_shapes(ens, y.rows(), y.cols(), "column_stage");
  check_basis(u, n, "column_stage");
  check_sparse(s_prev, n, q, "column_stage");
  if (opt.truth && (opt.truth->rows() != n || opt.truth->cols() != q))
    throw DimensionError("column_stage: ground truth shape mismatch");

  ColumnStageResult<T> out;
  out.sparse = ColumnSparseMatrix<T>(n, q);
  out.coefficients = Mat<T>::Zero(r, q);
  std::vector<double> fit(static_cast<std::size_t>(q)), err(fit.size()), ref(fit.size());

  out.gradient = blocked_sum<T>(q, n, r, opt.threads, [&](Index k, Mat<T> &acc) {
    Mat<T> scratch;
    const Mat<T> &a = ens.matrix(k, scratch);
    const Mat<T> au = a * u;
    const ColumnProjector<T> proj(au, k, opt.iteration);
    const Vec<T> yk = y.col(k);

    if (opt.update_sparse) {
      const Vec<T> s = iht<T>(proj.project_out(yk), residual_operator(a, proj), opt.iht,
                              s_prev.dense_column(k));
      out.sparse.set_column(k, s);
    }
    const Vec<T> rhs = yk - apply_sparse(a, out.sparse, k);
    const Vec<T> b = proj.solve(rhs);
    out.coefficients.col(k) = b;

    const Vec<T> residual = rhs - au * b;
    fit[static_cast<std::size_t>(k)] = residual.squaredNorm();
    acc.noalias() -= (a.adjoint() * residual) * b.adjoint();

    if (opt.truth) {
      const Vec<T> xs = opt.truth->column(k).template cast<T>();
      Vec<T> x = u * b;
      out.sparse.add_column_to(k, x);
      err[static_cast<std::size_t>(k)] = (xs - x).squaredNorm();
      ref[static_cast<std::size_t>(k)] = xs.squaredNorm();
    }
  });

  out.objective = serial_sum(fit);
  if (opt.truth) {
    const double den = serial_sum(ref);
    if (den == 0.0) throw UndefinedMetricError("column_stage: ground truth is zero");
    out.rel_error = std::sqrt(serial_sum(err) / den);
  }
  return out;
}

template <FieldScalar T>
ColumnSparseMatrix<T> initial_sparse(const MeasurementEnsemble<T> &ens, const Mat<T> &y,
                                     const IhtParams &params, int threads) {
  check_shapes(ens, y.rows(), y.cols(), "init_sparse");
  ColumnSparseMatrix<T> s(ens.n(), ens.q());
  for_each_column(ens.q(), threads, [&](Index k) {
    Mat<T> scratch;
    const Mat<T> &a = ens.matrix(k, scratch);
    s.set_column(k, iht<T>(y.col(k), plain_operator(a), params, Vec<T>::Zero(ens.n())));
  });
  return s;
}

template <FieldScalar T>
Mat<T> least_squares(const Mat<T> &u, const MeasurementEnsemble<T> &ens, const Mat<T> &y,
                     const ColumnSparseMatrix<T> &s, int threads, int iteration) {
  check_shapes(ens, y.rows(), y.cols(), "ls_update_b");
  check_basis(u, ens.n(), "ls_update_b");
  check_sparse(s, ens.n(), ens.q(), "ls_update_b");
  Mat<T> b(u.cols(), ens.q());
  for_each_column(ens.q(), threads, [&](Index k) {
    Mat<T> scratch;
    const Mat<T> &a = ens.matrix(k, scratch);
    const ColumnProjector<T> proj(a * u, k, iteration);
    b.col(k) = proj.solve(y.col(k) - apply_sparse(a, s, k));
  });
  return b;
}

template <FieldScalar T>
ColumnSparseMatrix<T> residual_sparse(const Mat<T> &u, const MeasurementEnsemble<T> &ens,
                                      const Mat<T> &y, const ColumnSparseMatrix<T> &s_prev,
                                      const IhtParams &params, int threads, int iteration) {
  check_shapes(ens, y.rows(), y.cols(), "update_sparse");
  check_basis(u, ens.n(), "update_sparse");
  check_sparse(s_prev, ens.n(), ens.q(), "update_sparse");
  ColumnSparseMatrix<T> s(ens.n(), ens.q());
  for_each_column(ens.q(), threads, [&](Index k) {
    Mat<T> scratch;
    const Mat<T> &a = ens.matrix(k, scratch);
    const ColumnProjector<T> proj(a * u, k, iteration);
    s.set_column(k, iht<T>(proj.project_out(y.col(k)), residual_operator(a, proj), params,
                           s_prev.dense_column(k)));
  });
  return s;
}

template <FieldScalar T>
Mat<T> gradient(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                const Mat<T> &y, const MeasurementEnsemble<T> &ens, int threads) {
  check_shapes(ens, y.rows(), y.cols(), "gradient_U");
  check_basis(u, ens.n(), "gradient_U");
  check_sparse(s, ens.n(), ens.q(), "gradient_U");
  if (b.rows() != u.cols() || b.cols() != ens.q())
    throw DimensionError("gradient_U: B shape mismatch");
  return blocked_sum<T>(ens.q(), ens.n(), u.cols(), threads, [&](Index k, Mat<T> &acc) {
    Mat<T> scratch;
    const Mat<T> &a = ens.matrix(k, scratch);
    Vec<T> x = u * b.col(k);
    s.add_column_to(k, x);
    const Vec<T> misfit = a * x - y.col(k);
    acc.noalias() += (a.adjoint() * misfit) * b.col(k).adjoint();
  });
}

template <FieldScalar T>
double objective(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                 const Mat<T> &y, const MeasurementEnsemble<T> &ens, int threads) {
  check_shapes(ens, y.rows(), y.cols(), "objective");
  check_basis(u, ens.n(), "objective");
  check_sparse(s, ens.n(), ens.q(), "objective");
  std::vector<double> fit(static_cast<std::size_t>(ens.q()));
  for_each_column(ens.q(), threads, [&](Index k) {
    Mat<T> scratch;
    const Mat<T> &a = ens.matrix(k, scratch);
    Vec<T> x = u * b.col(k);
    s.add_column_to(k, x);
    fit[static_cast<std::size_t>(k)] = (y.col(k) - a * x).squaredNorm();
  });
  return serial_sum(fit);
}

template <FieldScalar T>
Mat<T> sparse_residuals(const MeasurementEnsemble<T> &ens, const Mat<T> &y,
                        const ColumnSparseMatrix<T> &s, int threads) {
  check_shapes(ens, y.rows(), y.cols(), "spectral_init");
  check_sparse(s, ens.n(), ens.q(), "spectral_init");
  Mat<T> res(y.rows(), y.cols());
  for_each_column(ens.q(), threads, [&](Index k) {
    Mat<T> scratch;
    res.col(k) = y.col(k) - apply_sparse(ens.matrix(k, scratch), s, k);
  });
  return res;
}

template <FieldScalar T>
Mat<T> gram_apply(const MeasurementEnsemble<T> &ens, const Mat<T> &residuals, const Mat<T> &q,
                  int threads) {
  return blocked_sum<T>(ens.q(), ens.n(), q.cols(), threads, [&](Index k, Mat<T> &acc) {
    Mat<T> scratch;
    const Vec<T> col = ens.matrix(k, scratch).adjoint() * residuals.col(k);
    acc.noalias() += col * (col.adjoint() * q);
  });
}

#define ALTGDMIN_INSTANTIATE(T)                                                              \
  template class ColumnProjector<T>;                                                         \
  template Vec<T> apply_sparse(const Mat<T> &, const ColumnSparseMatrix<T> &, Index);        \
  template ColumnStageResult<T> column_stage(const Mat<T> &, const MeasurementEnsemble<T> &, \
                                             const Mat<T> &, const ColumnSparseMatrix<T> &,  \
                                             const ColumnStageOptions &);                    \
  template ColumnSparseMatrix<T> initial_sparse(const MeasurementEnsemble<T> &,              \
                                                const Mat<T> &, const IhtParams &, int);     \
  template Mat<T> least_squares(const Mat<T> &, const MeasurementEnsemble<T> &,              \
                                const Mat<T> &, const ColumnSparseMatrix<T> &, int, int);    \
  template ColumnSparseMatrix<T> residual_sparse(const Mat<T> &,                             \
                                                 const MeasurementEnsemble<T> &,             \
                                                 const Mat<T> &,                             \
                                                 const ColumnSparseMatrix<T> &,              \
                                                 const IhtParams &, int, int);               \
  template Mat<T> gradient(const Mat<T> &, const Mat<T> &, const ColumnSparseMatrix<T> &,    \
                           const Mat<T> &, const MeasurementEnsemble<T> &, int);             \
  template double objective(const Mat<T> &, const Mat<T> &, const ColumnSparseMatrix<T> &,   \
                            const Mat<T> &, const MeasurementEnsemble<T> &, int);            \
  template Mat<T> sparse_residuals(const MeasurementEnsemble<T> &, const Mat<T> &,           \
                                   const ColumnSparseMatrix<T> &, int);                      \
  template Mat<T> gram_apply(const MeasurementEnsemble<T> &, const Mat<T> &, const Mat<T> &, \
                             int);

ALTGDMIN_INSTANTIATE(Real)
ALTGDMIN_INSTANTIATE(Complex)

} // namespace altgdmin::kernels

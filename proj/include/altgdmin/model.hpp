#pragma once

#include <optional>
#include <span>
#include <vector>

#include "altgdmin/types.hpp"

namespace altgdmin {

/// L = U B kept in factored form. U is n x r with orthonormal columns.
template <FieldScalar T> struct FactoredLowRank {
  Mat<T> U;
  Mat<T> B;

  Index rows() const { return U.rows(); }
  Index cols() const { return B.cols(); }
  Index rank() const { return U.cols(); }

  /// ||U^H U - I||_F
  double orthonormality_defect() const;
};

template <FieldScalar T> struct SparseEntry {
  Index index;
  T value;

  bool operator==(const SparseEntry &) const = default;
};

/// q sparse columns of length n, each a sorted list of (index, value) pairs.
/// Stored values are never exactly zero and indices are strictly increasing.
template <FieldScalar T> class ColumnSparseMatrix {
public:
  using Entry = SparseEntry<T>;

  ColumnSparseMatrix() = default;
  /// All-zero n x q matrix.
  ColumnSparseMatrix(Index n, Index q);
  /// Validates ordering and the no-zero rule; throws DimensionError on violation.
  ColumnSparseMatrix(Index n, std::vector<std::vector<Entry>> columns);

  Index rows() const { return n_; }
  Index cols() const { return static_cast<Index>(columns_.size()); }

  std::span<const Entry> column(Index k) const { return columns_.at(static_cast<std::size_t>(k)); }
  Index nnz(Index k) const { return static_cast<Index>(column(k).size()); }
  Index max_column_nnz() const;

  /// Replaces column k by the nonzeros of a dense vector.
  void set_column(Index k, const Vec<T> &dense);
  Vec<T> dense_column(Index k) const;
  /// out += s_k
  void add_column_to(Index k, Eigen::Ref<Vec<T>> out) const;

  Mat<T> to_dense() const;
  static ColumnSparseMatrix from_dense(const Mat<T> &dense);

  template <FieldScalar U> ColumnSparseMatrix<U> cast() const {
    std::vector<std::vector<SparseEntry<U>>> cols(columns_.size());
    for (std::size_t k = 0; k < columns_.size(); ++k)
      for (const auto &e : columns_[k])
        cols[k].push_back({e.index, static_cast<U>(e.value)});
    return ColumnSparseMatrix<U>(n_, std::move(cols));
  }

  bool operator==(const ColumnSparseMatrix &) const = default;

private:
  Index n_ = 0;
  std::vector<std::vector<Entry>> columns_;
};

/// Synthetic ground truth. X* = U* B* + S* is reconstructed on demand.
struct GroundTruth {
  Mat<Real> Ustar;
  Mat<Real> Bstar;
  ColumnSparseMatrix<Real> Sstar;

  Index rows() const { return Ustar.rows(); }
  Index cols() const { return Bstar.cols(); }
  Vec<Real> column(Index k) const;
  Mat<Real> dense() const;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  std::optional<double> rel_error;
  double elapsed_ms = 0.0;
};

template <FieldScalar T> struct SolveTrace {
  std::vector<IterationRecord> records; // records[i].iteration == i
  FactoredLowRank<T> low_rank;
  ColumnSparseMatrix<T> sparse;
  Index rank = 0;
  double eta = 0.0;
  bool early_exit = false;

  int iterations() const { return records.empty() ? 0 : records.back().iteration; }
};

/// Column k of the result is U b_k + s_k.
template <FieldScalar T>
Mat<T> reconstruct(const FactoredLowRank<T> &lr, const ColumnSparseMatrix<T> &s);

/// ||X* - X||_F / ||X*||_F. Throws UndefinedMetricError when X* = 0.
template <FieldScalar T> double rel_error(const Mat<T> &xstar, const Mat<T> &x);

/// Same metric, evaluated column by column against the factored ground truth.
template <FieldScalar T>
double rel_error(const GroundTruth &truth, const FactoredLowRank<T> &lr,
                 const ColumnSparseMatrix<T> &s);

/// Empirical incoherence constant max_k ||b_k|| sqrt(q/r) / sigma_max(B).
double coherence_stat(const Mat<Real> &bstar);

extern template struct FactoredLowRank<Real>;
extern template struct FactoredLowRank<Complex>;
extern template class ColumnSparseMatrix<Real>;
extern template class ColumnSparseMatrix<Complex>;

} // namespace altgdmin

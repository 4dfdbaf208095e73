#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "altgdmin/model.hpp"
#include "altgdmin/types.hpp"

namespace altgdmin {

enum class EnsembleKind {
  gaussian, // i.i.d. N(0, 1) entries
  fourier,  // m rows of the unitary n-point DFT, resampled per column
  identity, // A_k = I_n; test-only, never used by experiment configs
};

enum class GaussianStorage {
  stored,     // every A_k kept in memory
  regenerate, // A_k rebuilt from its sub-stream on each access
};

std::string_view to_string(EnsembleKind kind);
EnsembleKind parse_ensemble_kind(std::string_view text);

/// The q per-column measurement operators A_k (m x n). Immutable; copies share storage.
///
/// Generator streams: A_k draws from mt19937_64 seeded with
/// derive_seed(derive_seed(seed, Stream::ensemble), k). Gaussian entries are
/// filled row by row with std::normal_distribution; Fourier row subsets are
/// std::sample over [0, n) and are therefore sorted.
template <FieldScalar T> class MeasurementEnsemble {
public:
  static MeasurementEnsemble sample(EnsembleKind kind, Index n, Index m, Index q,
                                    std::uint64_t seed,
                                    GaussianStorage storage = GaussianStorage::stored);
  static MeasurementEnsemble identity(Index n, Index q);

  EnsembleKind kind() const { return kind_; }
  Index n() const { return n_; }
  Index m() const { return m_; }
  Index q() const { return q_; }
  std::uint64_t seed() const { return seed_; }

  /// A_k x
  Vec<T> apply(Index k, const Eigen::Ref<const Vec<T>> &x) const;
  /// A_k^H y
  Vec<T> apply_adjoint(Index k, const Eigen::Ref<const Vec<T>> &y) const;

  /// Dense A_k. Returns the stored matrix when there is one, otherwise fills scratch.
  const Mat<T> &matrix(Index k, Mat<T> &scratch) const;

  /// Selected DFT rows of A_k (fourier only).
  std::span<const Index> selected_rows(Index k) const;

private:
  MeasurementEnsemble() = default;
  void check_column(Index k) const;
  void generate_gaussian(Index k, Mat<T> &out) const;

  EnsembleKind kind_ = EnsembleKind::gaussian;
  GaussianStorage storage_ = GaussianStorage::stored;
  Index n_ = 0, m_ = 0, q_ = 0;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const std::vector<Mat<T>>> gaussian_;
  std::shared_ptr<const Mat<T>> dft_;
  std::shared_ptr<const std::vector<std::vector<Index>>> rows_;
};

/// Y with column k equal to A_k (U* b*_k + s*_k), formed one column at a time.
template <FieldScalar T>
Mat<T> measure(const MeasurementEnsemble<T> &ens, const GroundTruth &truth);

extern template class MeasurementEnsemble<Real>;
extern template class MeasurementEnsemble<Complex>;

} // namespace altgdmin

#include "altgdmin/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "altgdmin/rng.hpp"

namespace altgdmin {

std::string_view to_string(EnsembleKind kind) {
  switch (kind) {
  case EnsembleKind::gaussian: return "gaussian";
  case EnsembleKind::fourier: return "fourier";
  case EnsembleKind::identity: return "identity";
  }
  return "?";
}

EnsembleKind parse_ensemble_kind(std::string_view text) {
  if (text == "gaussian") return EnsembleKind::gaussian;
  if (text == "fourier") return EnsembleKind::fourier;
  if (text == "identity") return EnsembleKind::identity;
  throw std::invalid_argument("unknown ensemble kind '" + std::string(text) + "'");
}

namespace {

std::uint64_t column_seed(std::uint64_t seed, Index k) {
  return derive_seed(derive_seed(seed, Stream::ensemble), static_cast<std::uint64_t>(k));
}

Mat<Complex> unitary_dft(Index n) {
  Mat<Complex> f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index j = 0; j < n; ++j)
    for (Index l = 0; l < n; ++l) {
      // reduce j*l mod n before forming the angle to keep it accurate for large n
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((j * l) % n) /
                           static_cast<double>(n);
      f(j, l) = std::polar(scale, phase);
    }
  return f;
}

} // namespace

template <FieldScalar T>
void MeasurementEnsemble<T>::generate_gaussian(Index k, Mat<T> &out) const {
  Engine eng(column_seed(seed_, k));
  std::normal_distribution<double> normal;
  out.resize(m_, n_);
  for (Index i = 0; i < m_; ++i)
    for (Index j = 0; j < n_; ++j) out(i, j) = T(normal(eng));
}

template <FieldScalar T>
MeasurementEnsemble<T> MeasurementEnsemble<T>::sample(EnsembleKind kind, Index n, Index m,
                                                      Index q, std::uint64_t seed,
                                                      GaussianStorage storage) {
  if (kind == EnsembleKind::identity) throw std::invalid_argument("use identity() for A_k = I");
  if (!(0 < m && m < n) || q < 1)
    throw DimensionError("sample_ensemble: need 0 < m < n and q >= 1 (got n=" +
                                std::to_string(n) + ", m=" + std::to_string(m) +
                                ", q=" + std::to_string(q) + ")");
  MeasurementEnsemble ens;
  ens.kind_ = kind;
  ens.storage_ = storage;
  ens.n_ = n;
  ens.m_ = m;
  ens.q_ = q;
  ens.seed_ = seed;

  if (kind == EnsembleKind::gaussian) {
    if (storage == GaussianStorage::stored) {
      auto mats = std::make_shared<std::vector<Mat<T>>>(static_cast<std::size_t>(q));
      for (Index k = 0; k < q; ++k) ens.generate_gaussian(k, (*mats)[static_cast<std::size_t>(k)]);
      ens.gaussian_ = std::move(mats);
    }
    return ens;
  }

  if constexpr (std::same_as<T, Real>) {
    throw std::invalid_argument("fourier ensembles require the complex field");
  } else {
    ens.dft_ = std::make_shared<const Mat<Complex>>(unitary_dft(n));
    auto rows = std::make_shared<std::vector<std::vector<Index>>>(static_cast<std::size_t>(q));
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    for (Index k = 0; k < q; ++k) {
      Engine eng(column_seed(seed, k));
      auto &sel = (*rows)[static_cast<std::size_t>(k)];
      sel.reserve(static_cast<std::size_t>(m));
      std::sample(all.begin(), all.end(), std::back_inserter(sel), m, eng);
    }
    ens.rows_ = std::move(rows);
    return ens;
  }
}

template <FieldScalar T> MeasurementEnsemble<T> MeasurementEnsemble<T>::identity(Index n, Index q) {
  if (n < 1 || q < 1) throw std::invalid_argument("identity ensemble: need n, q >= 1");
  MeasurementEnsemble ens;
  ens.kind_ = EnsembleKind::identity;
  ens.n_ = n;
  ens.m_ = n;
  ens.q_ = q;
  return ens;
}

template <FieldScalar T> void MeasurementEnsemble<T>::check_column(Index k) const {
  if (k < 0 || k >= q_)
    throw std::out_of_range("measurement operator index " + std::to_string(k) +
                            " outside [0, " + std::to_string(q_) + ")");
}

template <FieldScalar T>
const Mat<T> &MeasurementEnsemble<T>::matrix(Index k, Mat<T> &scratch) const {
  check_column(k);
  switch (kind_) {
  case EnsembleKind::gaussian:
    if (gaussian_) return (*gaussian_)[static_cast<std::size_t>(k)];
    generate_gaussian(k, scratch);
    return scratch;
  case EnsembleKind::fourier: {
    const auto &sel = (*rows_)[static_cast<std::size_t>(k)];
    scratch.resize(m_, n_);
    for (Index i = 0; i < m_; ++i) scratch.row(i) = dft_->row(sel[static_cast<std::size_t>(i)]);
    return scratch;
  }
  case EnsembleKind::identity:
    scratch = Mat<T>::Identity(n_, n_);
    return scratch;
  }
  return scratch;
}

template <FieldScalar T>
std::span<const Index> MeasurementEnsemble<T>::selected_rows(Index k) const {
  check_column(k);
  if (kind_ != EnsembleKind::fourier) throw std::logic_error("selected_rows: not a fourier ensemble");
  return (*rows_)[static_cast<std::size_t>(k)];
}

template <FieldScalar T>
Vec<T> MeasurementEnsemble<T>::apply(Index k, const Eigen::Ref<const Vec<T>> &x) const {
  check_column(k);
  if (x.size() != n_) throw DimensionError("apply: x has length " + std::to_string(x.size()) +
                                           ", expected " + std::to_string(n_));
  if (kind_ == EnsembleKind::identity) return x;
  if (kind_ == EnsembleKind::fourier) {
    const auto &sel = (*rows_)[static_cast<std::size_t>(k)];
    Vec<T> y(m_);
    for (Index i = 0; i < m_; ++i) y[i] = (dft_->row(sel[static_cast<std::size_t>(i)]) * x).value();
    return y;
  }
  Mat<T> scratch;
  return matrix(k, scratch) * x;
}

template <FieldScalar T>
Vec<T> MeasurementEnsemble<T>::apply_adjoint(Index k, const Eigen::Ref<const Vec<T>> &y) const {
  check_column(k);
  if (y.size() != m_) throw DimensionError("apply_adjoint: y has length " +
                                           std::to_string(y.size()) + ", expected " +
                                           std::to_string(m_));
  if (kind_ == EnsembleKind::identity) return y;
  if (kind_ == EnsembleKind::fourier) {
    const auto &sel = (*rows_)[static_cast<std::size_t>(k)];
    Vec<T> x = Vec<T>::Zero(n_);
    for (Index i = 0; i < m_; ++i)
      x += dft_->row(sel[static_cast<std::size_t>(i)]).adjoint() * y[i];
    return x;
  }
  Mat<T> scratch;
  return matrix(k, scratch).adjoint() * y;
}

template <FieldScalar T>
Mat<T> measure(const MeasurementEnsemble<T> &ens, const GroundTruth &truth) {
  if (truth.rows() != ens.n() || truth.cols() != ens.q())
    throw DimensionError("measure: ground truth is " + std::to_string(truth.rows()) + "x" +
                         std::to_string(truth.cols()) + " but the ensemble expects " +
                         std::to_string(ens.n()) + "x" + std::to_string(ens.q()));
  Mat<T> y(ens.m(), ens.q());
  for (Index k = 0; k < ens.q(); ++k) {
    const Vec<T> x = truth.column(k).template cast<T>();
    y.col(k) = ens.apply(k, x);
  }
  return y;
}

template class MeasurementEnsemble<Real>;
template class MeasurementEnsemble<Complex>;
template Mat<Real> measure(const MeasurementEnsemble<Real> &, const GroundTruth &);
template Mat<Complex> measure(const MeasurementEnsemble<Complex> &, const GroundTruth &);

} // namespace altgdmin

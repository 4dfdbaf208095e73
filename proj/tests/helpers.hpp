#pragma once

#include <random>

#include "altgdmin/types.hpp"

namespace testing_util {

using namespace altgdmin;

template <FieldScalar T> Mat<T> gaussian(Index rows, Index cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> nd;
  Mat<T> out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      if constexpr (std::same_as<T, Real>) out(i, j) = nd(rng);
      else out(i, j) = Complex(nd(rng), nd(rng));
    }
  return out;
}

template <FieldScalar T> Vec<T> gaussian_vec(Index n, std::mt19937_64 &rng) {
  return gaussian<T>(n, 1, rng).col(0);
}

/// Thin orthonormal factor of a Gaussian matrix.
template <FieldScalar T> Mat<T> orthonormal(Index n, Index r, std::mt19937_64 &rng) {
  Eigen::HouseholderQR<Mat<T>> qr(gaussian<T>(n, r, rng));
  return qr.householderQ() * Mat<T>::Identity(n, r);
}

/// ||(I - P_a) b||_F with P_a the projector onto range(a) (a orthonormal).
template <FieldScalar T> double subspace_distance(const Mat<T> &a, const Mat<T> &b) {
  return (b - a * (a.adjoint() * b)).norm();
}

} // namespace testing_util

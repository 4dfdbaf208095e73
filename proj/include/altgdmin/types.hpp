#pragma once

#include <complex>
#include <concepts>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace altgdmin {

using Index = Eigen::Index;
using Real = double;
using Complex = std::complex<double>;

template <class T> using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T> using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// The two scalar fields every model type is instantiated over.
template <class T>
concept FieldScalar = std::same_as<T, Real> || std::same_as<T, Complex>;

enum class Field { real, complex };

template <FieldScalar T> constexpr Field field_of() {
  return std::same_as<T, Real> ? Field::real : Field::complex;
}

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// rel_error called with a zero reference matrix.
class UndefinedMetricError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A_k U (or U - eta*grad) lost column rank. column < 0 means "not column specific".
class RankDeficiencyError : public std::runtime_error {
public:
  RankDeficiencyError(const std::string &what, Index column, int iteration)
    : std::runtime_error(what), column_(column), iteration_(iteration) {}

  Index column() const noexcept { return column_; }
  int iteration() const noexcept { return iteration_; }

private:
  Index column_;
  int iteration_;
};

} // namespace altgdmin

#pragma once

#include <functional>
#include <string_view>

#include "altgdmin/types.hpp"

namespace altgdmin {

/// A matrix-free operator M: C^cols -> C^rows and its adjoint.
template <FieldScalar T> struct LinearOperatorHandle {
  Index rows = 0;
  Index cols = 0;
  std::function<Vec<T>(const Vec<T> &)> forward;
  std::function<Vec<T>(const Vec<T> &)> adjoint;

  static LinearOperatorHandle from_matrix(Mat<T> m);
};

enum class StepRule {
  as_written, // mu = ||g|| / ||M g||
  niht,       // mu = ||g||^2 / ||M g||^2
  niht_support, // mu = ||g_G||^2 / ||M g_G||^2, G = supp(s) (or top-rho of g when s = 0)
};

std::string_view to_string(StepRule rule);
StepRule parse_step_rule(std::string_view text);

struct IhtParams {
  Index rho = 0;
  int tau_max = 1;
  StepRule step_rule = StepRule::as_written;
};

/// Keeps the rho largest-modulus entries; ties go to the lower index.
template <FieldScalar T> Vec<T> hard_threshold(const Vec<T> &s, Index rho);

/// Iterative hard thresholding on ||M s - z||^2 for exactly tau_max iterations,
/// warm-started at s_init. Uses g = M^H (M s - z) (no factor 2). Stops early and
/// returns the current iterate when g or M g vanishes.
template <FieldScalar T>
Vec<T> iht(const Vec<T> &z, const LinearOperatorHandle<T> &op, const IhtParams &params,
           const Vec<T> &s_init);

} // namespace altgdmin

#include "altgdmin/iht.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace altgdmin {

std::string_view to_string(StepRule rule) {
  switch (rule) {
  case StepRule::as_written: return "as_written";
  case StepRule::niht: return "niht";
  case StepRule::niht_support: return "niht_support";
  }
  return "?";
}

StepRule parse_step_rule(std::string_view text) {
  if (text == "as_written") return StepRule::as_written;
  if (text == "niht") return StepRule::niht;
  if (text == "niht_support") return StepRule::niht_support;
  throw std::invalid_argument("unknown step rule '" + std::string(text) + "'");
}

template <FieldScalar T> LinearOperatorHandle<T> LinearOperatorHandle<T>::from_matrix(Mat<T> m) {
  auto shared = std::make_shared<const Mat<T>>(std::move(m));
  LinearOperatorHandle op;
  op.rows = shared->rows();
  op.cols = shared->cols();
  op.forward = [shared](const Vec<T> &x) -> Vec<T> { return *shared * x; };
  op.adjoint = [shared](const Vec<T> &y) -> Vec<T> { return shared->adjoint() * y; };
  return op;
}

template <FieldScalar T> Vec<T> hard_threshold(const Vec<T> &s, Index rho) {
  if (rho < 0) throw std::invalid_argument("hard_threshold: rho must be nonnegative");
  const Index n = s.size();
  if (rho >= n) return s;
  Vec<T> out = Vec<T>::Zero(n);
  if (rho == 0) return out;

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  // strict total order: larger modulus first, then lower index
  const auto before = [&s](Index a, Index b) {
    const double ma = std::abs(s[a]), mb = std::abs(s[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(order.begin(), order.begin() + rho - 1, order.end(), before);
  for (Index i = 0; i < rho; ++i) {
    const Index j = order[static_cast<std::size_t>(i)];
    out[j] = s[j];
  }
  return out;
}

template <FieldScalar T>
Vec<T> iht(const Vec<T> &z, const LinearOperatorHandle<T> &op, const IhtParams &params,
           const Vec<T> &s_init) {
  if (params.rho < 0 || params.tau_max < 1)
    throw std::invalid_argument("iht: need rho >= 0 and tau_max >= 1");
  if (z.size() != op.rows || s_init.size() != op.cols)
    throw DimensionError("iht: z has length " + std::to_string(z.size()) + ", s_init " +
                         std::to_string(s_init.size()) + ", operator is " +
                         std::to_string(op.rows) + "x" + std::to_string(op.cols));

  Vec<T> s = s_init;
  for (int t = 0; t < params.tau_max; ++t) {
    const Vec<T> g = op.adjoint(op.forward(s) - z);
    const double gnorm = g.norm();
    if (gnorm == 0.0) break;
    double mu = 0.0;
    if (params.step_rule == StepRule::niht_support) {
      Vec<T> gs = Vec<T>::Zero(g.size());
      const bool empty = (s.array() == T(0)).all();
      const Vec<T> mask = empty ? hard_threshold<T>(g, params.rho) : s;
      for (Index i = 0; i < g.size(); ++i)
        if (mask[i] != T(0)) gs[i] = g[i];
      const double num = gs.norm(), den = op.forward(gs).norm();
      if (num == 0.0 || den == 0.0) break;
      mu = (num / den) * (num / den);
    } else {
      const double mgnorm = op.forward(g).norm();
      if (mgnorm == 0.0) break;
      const double ratio = gnorm / mgnorm;
      mu = params.step_rule == StepRule::niht ? ratio * ratio : ratio;
    }
    s = hard_threshold<T>(s - mu * g, params.rho);
  }
  // s_init may carry more than rho entries if the loop stopped immediately
  return hard_threshold<T>(s, params.rho);
}

template struct LinearOperatorHandle<Real>;
template struct LinearOperatorHandle<Complex>;
template Vec<Real> hard_threshold(const Vec<Real> &, Index);
template Vec<Complex> hard_threshold(const Vec<Complex> &, Index);
template Vec<Real> iht(const Vec<Real> &, const LinearOperatorHandle<Real> &, const IhtParams &,
                       const Vec<Real> &);
template Vec<Complex> iht(const Vec<Complex> &, const LinearOperatorHandle<Complex> &,
                          const IhtParams &, const Vec<Complex> &);

} // namespace altgdmin

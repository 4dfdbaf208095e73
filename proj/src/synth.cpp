#include "altgdmin/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "altgdmin/rng.hpp"

namespace altgdmin {

std::vector<std::string> GenSpec::violations() const {
  std::vector<std::string> out;
  if (n < 1) out.push_back("n must be >= 1");
  if (q < 1) out.push_back("q must be >= 1");
  if (r < 0 || r > std::min(n, q)) out.push_back("r must lie in [0, min(n, q)]");
  if (rho < 0 || rho > n) out.push_back("rho must lie in [0, n]");
  if (const auto *u = std::get_if<UniformValues>(&values); u && !(u->alpha > 0.0))
    out.push_back("alpha must be > 0");
  if (const auto *s = std::get_if<SetValues>(&values)) {
    if (s->values.empty()) out.push_back("value set must be nonempty");
    if (std::ranges::find(s->values, 0.0) != s->values.end())
      out.push_back("value set must not contain 0");
  }
  return out;
}

GroundTruth gen_ground_truth(const GenSpec &spec) {
  if (const auto v = spec.violations(); !v.empty()) {
    std::ostringstream msg;
    msg << "invalid generation spec:";
    for (const auto &s : v) msg << "\n  " << s;
    throw std::invalid_argument(msg.str());
  }
  std::normal_distribution<double> normal;
  GroundTruth truth;

  {
    Engine eng(derive_seed(spec.seed, Stream::basis));
    Mat<Real> g(spec.n, spec.r);
    for (Index j = 0; j < spec.r; ++j)
      for (Index i = 0; i < spec.n; ++i) g(i, j) = normal(eng);
    Eigen::HouseholderQR<Mat<Real>> qr(g);
    truth.Ustar = qr.householderQ() * Mat<Real>::Identity(spec.n, spec.r);
  }
  {
    Engine eng(derive_seed(spec.seed, Stream::coefficients));
    truth.Bstar.resize(spec.r, spec.q);
    for (Index k = 0; k < spec.q; ++k)
      for (Index i = 0; i < spec.r; ++i) truth.Bstar(i, k) = normal(eng);
  }

  Engine support_eng(derive_seed(spec.seed, Stream::support));
  Engine value_eng(derive_seed(spec.seed, Stream::sparse_values));
  const auto draw_value = [&]() -> double {
    if (const auto *u = std::get_if<UniformValues>(&spec.values)) {
      std::uniform_real_distribution<double> dist(-u->alpha, u->alpha);
      double v = 0.0;
      while (v == 0.0) v = dist(value_eng);
      return v;
    }
    const auto &set = std::get<SetValues>(spec.values).values;
    std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
    return set[pick(value_eng)];
  };

  std::vector<Index> all(static_cast<std::size_t>(spec.n));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<std::vector<SparseEntry<Real>>> cols(static_cast<std::size_t>(spec.q));
  for (auto &col : cols) {
    std::vector<Index> support;
    support.reserve(static_cast<std::size_t>(spec.rho));
    std::sample(all.begin(), all.end(), std::back_inserter(support), spec.rho, support_eng);
    for (Index i : support) col.push_back({i, draw_value()});
  }
  truth.Sstar = ColumnSparseMatrix<Real>(spec.n, std::move(cols));
  return truth;
}

template <FieldScalar T>
std::pair<ProblemInstance<T>, GroundTruth>
gen_instance(const GenSpec &spec, EnsembleKind kind, Index m, std::uint64_t ensemble_seed,
             GaussianStorage storage) {
  GroundTruth truth = gen_ground_truth(spec);
  auto ens = kind == EnsembleKind::identity
                 ? MeasurementEnsemble<T>::identity(spec.n, spec.q)
                 : MeasurementEnsemble<T>::sample(kind, spec.n, m, spec.q, ensemble_seed, storage);
  Mat<T> y = measure(ens, truth);
  return {ProblemInstance<T>{std::move(y), std::move(ens)}, std::move(truth)};
}

template std::pair<ProblemInstance<Real>, GroundTruth>
gen_instance<Real>(const GenSpec &, EnsembleKind, Index, std::uint64_t, GaussianStorage);
template std::pair<ProblemInstance<Complex>, GroundTruth>
gen_instance<Complex>(const GenSpec &, EnsembleKind, Index, std::uint64_t, GaussianStorage);

} // namespace altgdmin

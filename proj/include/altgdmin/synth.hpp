#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "altgdmin/measurement.hpp"
#include "altgdmin/model.hpp"
#include "altgdmin/solver.hpp"

namespace altgdmin {

/// Nonzeros of S* drawn uniformly from [-alpha, alpha].
struct UniformValues {
  double alpha = 6.0;
};

/// Nonzeros of S* drawn uniformly from a fixed set.
struct SetValues {
  std::vector<double> values{-1.0, -10.0, -100.0, 1.0, 10.0, 100.0};
};

using SparseValueModel = std::variant<UniformValues, SetValues>;

struct GenSpec {
  Index n = 0;
  Index q = 0;
  Index r = 0; // 0 gives L* = 0
  Index rho = 0;
  SparseValueModel values = UniformValues{};
  std::uint64_t seed = 0;

  std::vector<std::string> violations() const;
};

/// U* = Q factor of an n x r Gaussian matrix, B* i.i.d. N(0,1), and exactly rho
/// nonzeros per column of S* at a uniformly random support.
GroundTruth gen_ground_truth(const GenSpec &spec);

/// Ground truth, ensemble, and exact measurements Y.
template <FieldScalar T>
std::pair<ProblemInstance<T>, GroundTruth>
gen_instance(const GenSpec &spec, EnsembleKind kind, Index m, std::uint64_t ensemble_seed,
             GaussianStorage storage = GaussianStorage::stored);

} // namespace altgdmin

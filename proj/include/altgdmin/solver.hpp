#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "altgdmin/column_kernels.hpp"
#include "altgdmin/iht.hpp"
#include "altgdmin/measurement.hpp"
#include "altgdmin/model.hpp"

namespace altgdmin {

enum class SolveMode {
  lps,     // low rank + sparse
  lr_only, // S fixed at zero (the LRCCS special case)
};

/// Matrix norm of the first gradient used to set eta.
enum class StepNorm { spectral, frobenius };

std::string_view to_string(SolveMode mode);
SolveMode parse_solve_mode(std::string_view text);
std::string_view to_string(StepNorm norm);
StepNorm parse_step_norm(std::string_view text);

struct RankChoice {
  std::optional<Index> fixed;     // empty: estimate from the spectrum of L0
  double energy_threshold = 0.65; // used when fixed is empty

  static RankChoice of(Index r) { return {r, 0.65}; }
  static RankChoice automatic(double threshold = 0.65) { return {std::nullopt, threshold}; }
};

struct SolverConfig {
  int t_max = 200;
  int tau0_max = 10;
  int tau_max = 3;
  double eta_scale = 0.14;
  Index rho_max = 7;
  RankChoice rank = RankChoice::automatic();
  SolveMode mode = SolveMode::lps;
  StepRule step_rule = StepRule::as_written;
  StepNorm eta_norm = StepNorm::spectral;
  std::optional<double> early_exit_tol;
  std::uint64_t seed = 0;

  // truncated SVD for the spectral initialization
  int power_iterations = 50;
  double power_tolerance = 1e-8;
  Index extra_probes = 4;

  int threads = 0; // OpenMP threads per solve; 0 = runtime default

  /// Every violated constraint, one message each; empty when valid.
  std::vector<std::string> violations() const;
  /// Throws std::invalid_argument listing violations().
  void validate() const;
};

template <FieldScalar T> struct ProblemInstance {
  Mat<T> Y;
  MeasurementEnsemble<T> ensemble;

  Index n() const { return ensemble.n(); }
  Index m() const { return ensemble.m(); }
  Index q() const { return ensemble.q(); }
  static constexpr Field field = field_of<T>();
};

/// Leading singular pairs of L0 = [A_1^H r_1, ..., A_q^H r_q] with r_k = y_k - A_k s_k.
template <FieldScalar T> struct SpectralResult {
  Mat<T> basis;                        // n x leading, orthonormal
  std::vector<double> singular_values; // descending, one per probe
  int iterations = 0;
};

/// Block subspace iteration on L0 L0^H, matrix-free over the columns of L0.
/// Stops after cfg.power_iterations or when the leading subspace moves less
/// than cfg.power_tolerance (sine of the largest principal angle).
template <FieldScalar T>
SpectralResult<T> spectral_decomposition(const Mat<T> &y, const MeasurementEnsemble<T> &ens,
                                         const ColumnSparseMatrix<T> &s0, Index leading,
                                         Index probes, const SolverConfig &cfg);

/// s_k = IHT(y_k, A_k, rho_max, tau0_max, 0); zero in lr_only mode.
template <FieldScalar T>
ColumnSparseMatrix<T> init_sparse(const Mat<T> &y, const MeasurementEnsemble<T> &ens,
                                  const SolverConfig &cfg);

/// Top-r left singular vectors of L0.
template <FieldScalar T>
Mat<T> spectral_init(const Mat<T> &y, const MeasurementEnsemble<T> &ens,
                     const ColumnSparseMatrix<T> &s0, Index r, const SolverConfig &cfg = {});

/// Smallest r whose leading squared singular values reach energy_threshold of
/// the energy in the first K = max(1, floor(min(n, q, m) / 10)) values.
Index estimate_rank(std::span<const double> singular_values, double energy_threshold, Index n,
                    Index m, Index q);

template <FieldScalar T>
Mat<T> ls_update_b(const Mat<T> &u, const MeasurementEnsemble<T> &ens, const Mat<T> &y,
                   const ColumnSparseMatrix<T> &s, int threads = 0);

/// z_k = (I - P_k) y_k and M_k = (I - P_k) A_k, P_k projecting onto range(A_k U).
template <FieldScalar T> struct ResidualProblem {
  Vec<T> z;
  LinearOperatorHandle<T> op;
};

template <FieldScalar T>
ResidualProblem<T> residual_problem(const Mat<T> &u, const MeasurementEnsemble<T> &ens, Index k,
                                    const Vec<T> &y_k);

template <FieldScalar T>
ColumnSparseMatrix<T> update_sparse(const Mat<T> &u, const MeasurementEnsemble<T> &ens,
                                    const Mat<T> &y, const ColumnSparseMatrix<T> &s_prev,
                                    const SolverConfig &cfg);

/// sum_k A_k^H (A_k (U b_k + s_k) - y_k) b_k^H, without the factor 2 of d/dU ||.||^2.
template <FieldScalar T>
Mat<T> gradient_U(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                  const Mat<T> &y, const MeasurementEnsemble<T> &ens, int threads = 0);

/// f(U, B, S) = sum_k ||y_k - A_k (U b_k + s_k)||^2
template <FieldScalar T>
double objective(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                 const Mat<T> &y, const MeasurementEnsemble<T> &ens, int threads = 0);

/// Orthonormal QR factor of U - eta * grad with R's diagonal made real nonnegative.
template <FieldScalar T>
Mat<T> projected_gd_step(const Mat<T> &u, const Mat<T> &grad, double eta);

/// What an observer sees after each GD iteration t >= 1.
template <FieldScalar T> struct IterationView {
  int iteration;
  const Mat<T> &basis_used;  // U_{t-1}, paired with B_t and S_t
  const Mat<T> &basis_next;  // U_t
  const Mat<T> &coefficients;
  const ColumnSparseMatrix<T> &sparse;
};

template <FieldScalar T> using IterationObserver = std::function<void(const IterationView<T> &)>;

/// The full alternating GD / minimization loop. The returned factors are the
/// last consistent triple (U_{t-1}, B_t, S_t) whose objective is recorded.
template <FieldScalar T>
SolveTrace<T> solve(const ProblemInstance<T> &instance, const SolverConfig &cfg,
                    const GroundTruth *truth = nullptr,
                    const IterationObserver<T> &observer = nullptr);

} // namespace altgdmin

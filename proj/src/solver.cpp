#include "altgdmin/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "altgdmin/rng.hpp"

namespace altgdmin {

std::string_view to_string(SolveMode mode) { return mode == SolveMode::lr_only ? "lr_only" : "lps"; }

SolveMode parse_solve_mode(std::string_view text) {
  if (text == "lps") return SolveMode::lps;
  if (text == "lr_only") return SolveMode::lr_only;
  throw std::invalid_argument("unknown solver mode '" + std::string(text) + "'");
}

std::string_view to_string(StepNorm norm) {
  return norm == StepNorm::frobenius ? "frobenius" : "spectral";
}

StepNorm parse_step_norm(std::string_view text) {
  if (text == "spectral") return StepNorm::spectral;
  if (text == "frobenius") return StepNorm::frobenius;
  throw std::invalid_argument("unknown eta norm '" + std::string(text) + "'");
}

std::vector<std::string> SolverConfig::violations() const {
  std::vector<std::string> out;
  if (t_max < 1) out.push_back("t_max must be >= 1");
  if (tau0_max < 1) out.push_back("tau0_max must be >= 1");
  if (tau_max < 1) out.push_back("tau_max must be >= 1");
  if (!(eta_scale > 0.0)) out.push_back("eta_scale must be > 0");
  if (rho_max < 0) out.push_back("rho_max must be >= 0");
  if (rank.fixed && *rank.fixed < 1) out.push_back("rank must be >= 1");
  if (!rank.fixed && !(rank.energy_threshold > 0.0 && rank.energy_threshold < 1.0))
    out.push_back("energy_threshold must lie in (0, 1)");
  if (early_exit_tol && !(*early_exit_tol > 0.0)) out.push_back("early_exit_tol must be > 0");
  if (power_iterations < 1) out.push_back("power_iterations must be >= 1");
  if (!(power_tolerance > 0.0)) out.push_back("power_tolerance must be > 0");
  if (extra_probes < 0) out.push_back("extra_probes must be >= 0");
  return out;
}

void SolverConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::ostringstream msg;
  msg << "invalid solver config:";
  for (const auto &s : v) msg << "\n  " << s;
  throw std::invalid_argument(msg.str());
}

namespace {

IhtParams iht_params(const SolverConfig &cfg, int iterations) {
  return {cfg.rho_max, iterations, cfg.step_rule};
}

template <FieldScalar T> Mat<T> thin_q(const Mat<T> &a) {
  Eigen::HouseholderQR<Mat<T>> qr(a);
  return qr.householderQ() * Mat<T>::Identity(a.rows(), a.cols());
}

template <FieldScalar T> Mat<T> random_block(Index rows, Index cols, std::uint64_t seed) {
  Engine eng(seed);
  std::normal_distribution<double> normal;
  Mat<T> out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      if constexpr (std::same_as<T, Real>) {
        out(i, j) = normal(eng);
      } else {
        const double re = normal(eng);
        out(i, j) = Complex(re, normal(eng));
      }
    }
  return out;
}

template <FieldScalar T> double spectral_norm(const Mat<T> &a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat<T>>(a).singularValues()(0);
}

template <FieldScalar T> double matrix_norm(const Mat<T> &a, StepNorm norm) {
  return norm == StepNorm::spectral ? spectral_norm(a) : a.norm();
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

} // namespace

template <FieldScalar T>
SpectralResult<T> spectral_decomposition(const Mat<T> &y, const MeasurementEnsemble<T> &ens,
                                         const ColumnSparseMatrix<T> &s0, Index leading,
                                         Index probes, const SolverConfig &cfg) {
  const Index n = ens.n(), q = ens.q();
  if (leading < 1 || leading > std::min(n, q))
    throw std::invalid_argument("spectral_init: rank " + std::to_string(leading) +
                                " outside [1, min(n, q)]");
  probes = std::clamp(probes, leading, std::min(n, q));

  const Mat<T> residuals = kernels::sparse_residuals(ens, y, s0, cfg.threads);
  Mat<T> block = thin_q<T>(random_block<T>(n, probes, derive_seed(cfg.seed, Stream::probes)));

  SpectralResult<T> out;
  Mat<T> previous;
  for (int it = 1; it <= cfg.power_iterations; ++it) {
    const Mat<T> image = kernels::gram_apply(ens, residuals, block, cfg.threads);
    Mat<T> h = block.adjoint() * image;
    h = (0.5 * (h + h.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<Mat<T>> eig(h);
    // eigenvalues come ascending; Ritz pairs are wanted in descending order
    const Mat<T> ritz = block * eig.eigenvectors().rowwise().reverse();
    out.singular_values.assign(static_cast<std::size_t>(probes), 0.0);
    for (Index i = 0; i < probes; ++i)
      out.singular_values[static_cast<std::size_t>(i)] =
          std::sqrt(std::max(0.0, eig.eigenvalues()(probes - 1 - i)));
    out.basis = ritz.leftCols(leading);
    out.iterations = it;

    if (previous.size() != 0) {
      const Mat<T> moved = out.basis - previous * (previous.adjoint() * out.basis);
      if (spectral_norm(moved) <= cfg.power_tolerance) break;
    }
    previous = out.basis;
    block = thin_q<T>(image);
  }
  return out;
}

template <FieldScalar T>
ColumnSparseMatrix<T> init_sparse(const Mat<T> &y, const MeasurementEnsemble<T> &ens,
                                  const SolverConfig &cfg) {
  if (y.rows() != ens.m() || y.cols() != ens.q())
    throw DimensionError("init_sparse: Y shape does not match the ensemble");
  if (cfg.mode == SolveMode::lr_only) return ColumnSparseMatrix<T>(ens.n(), ens.q());
  return kernels::initial_sparse(ens, y, iht_params(cfg, cfg.tau0_max), cfg.threads);
}

template <FieldScalar T>
Mat<T> spectral_init(const Mat<T> &y, const MeasurementEnsemble<T> &ens,
                     const ColumnSparseMatrix<T> &s0, Index r, const SolverConfig &cfg) {
  if (r < 1 || r > std::min({ens.n(), ens.q(), ens.m()}))
    throw std::invalid_argument("spectral_init: rank " + std::to_string(r) +
                                " outside [1, min(n, q, m)]");
  return spectral_decomposition(y, ens, s0, r, r + cfg.extra_probes, cfg).basis;
}

Index estimate_rank(std::span<const double> sv, double energy_threshold, Index n, Index m,
                    Index q) {
  if (sv.empty()) throw std::invalid_argument("estimate_rank: empty singular value list");
  for (std::size_t i = 0; i < sv.size(); ++i) {
    if (sv[i] < 0.0) throw std::invalid_argument("estimate_rank: negative singular value");
    if (i > 0 && sv[i] > sv[i - 1])
      throw std::invalid_argument("estimate_rank: singular values not descending");
  }
  const Index window = std::max<Index>(1, std::min({n, q, m}) / 10);
  const std::size_t k = std::min(sv.size(), static_cast<std::size_t>(window));
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += sv[i] * sv[i];
  if (total == 0.0) return 1;
  double partial = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    partial += sv[i] * sv[i];
    if (partial >= energy_threshold * total) return static_cast<Index>(i + 1);
  }
  return static_cast<Index>(k);
}

template <FieldScalar T>
Mat<T> ls_update_b(const Mat<T> &u, const MeasurementEnsemble<T> &ens, const Mat<T> &y,
                   const ColumnSparseMatrix<T> &s, int threads) {
  return kernels::least_squares(u, ens, y, s, threads);
}

template <FieldScalar T>
ResidualProblem<T> residual_problem(const Mat<T> &u, const MeasurementEnsemble<T> &ens, Index k,
                                    const Vec<T> &y_k) {
  if (u.rows() != ens.n()) throw DimensionError("residual_problem: U row count mismatch");
  if (y_k.size() != ens.m()) throw DimensionError("residual_problem: y_k length mismatch");
  Mat<T> scratch;
  auto a = std::make_shared<const Mat<T>>(ens.matrix(k, scratch));
  auto proj = std::make_shared<const kernels::ColumnProjector<T>>(*a * u, k);

  ResidualProblem<T> out;
  out.z = proj->project_out(y_k);
  out.op.rows = a->rows();
  out.op.cols = a->cols();
  out.op.forward = [a, proj](const Vec<T> &x) -> Vec<T> { return proj->project_out(*a * x); };
  out.op.adjoint = [a, proj](const Vec<T> &w) -> Vec<T> {
    return a->adjoint() * proj->project_out(w);
  };
  return out;
}

template <FieldScalar T>
ColumnSparseMatrix<T> update_sparse(const Mat<T> &u, const MeasurementEnsemble<T> &ens,
                                    const Mat<T> &y, const ColumnSparseMatrix<T> &s_prev,
                                    const SolverConfig &cfg) {
  if (cfg.mode == SolveMode::lr_only) return ColumnSparseMatrix<T>(ens.n(), ens.q());
  return kernels::residual_sparse(u, ens, y, s_prev, iht_params(cfg, cfg.tau_max), cfg.threads);
}

template <FieldScalar T>
Mat<T> gradient_U(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                  const Mat<T> &y, const MeasurementEnsemble<T> &ens, int threads) {
  return kernels::gradient(u, b, s, y, ens, threads);
}

template <FieldScalar T>
double objective(const Mat<T> &u, const Mat<T> &b, const ColumnSparseMatrix<T> &s,
                 const Mat<T> &y, const MeasurementEnsemble<T> &ens, int threads) {
  return kernels::objective(u, b, s, y, ens, threads);
}

template <FieldScalar T>
Mat<T> projected_gd_step(const Mat<T> &u, const Mat<T> &grad, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("projected_gd_step: eta must be > 0");
  if (u.rows() != grad.rows() || u.cols() != grad.cols())
    throw DimensionError("projected_gd_step: U and gradient shapes differ");
  const Mat<T> v = u - eta * grad;
  const Index r = v.cols();
  if (r == 0) return v;
  if (r > v.rows()) throw DimensionError("projected_gd_step: more columns than rows");

  Eigen::HouseholderQR<Mat<T>> qr(v);
  Mat<T> out = qr.householderQ() * Mat<T>::Identity(v.rows(), r);
  const double tol = 1e-12 * v.norm();
  for (Index j = 0; j < r; ++j) {
    const T d = qr.matrixQR()(j, j);
    const double mag = std::abs(d);
    if (mag <= tol || mag == 0.0)
      throw RankDeficiencyError("projected_gd_step: U - eta*grad is rank deficient", -1, -1);
    out.col(j) *= d / mag;
  }
  return out;
}

template <FieldScalar T>
SolveTrace<T> solve(const ProblemInstance<T> &instance, const SolverConfig &cfg,
                    const GroundTruth *truth, const IterationObserver<T> &observer) {
  cfg.validate();
  const auto &ens = instance.ensemble;
  const auto &y = instance.Y;
  const Index n = ens.n(), m = ens.m(), q = ens.q();
  if (y.rows() != m || y.cols() != q)
    throw DimensionError("solve: Y is " + std::to_string(y.rows()) + "x" +
                         std::to_string(y.cols()) + ", expected " + std::to_string(m) + "x" +
                         std::to_string(q));
  if (truth && (truth->rows() != n || truth->cols() != q))
    throw DimensionError("solve: ground truth shape mismatch");

  const auto start = std::chrono::steady_clock::now();
  SolveTrace<T> trace;

  ColumnSparseMatrix<T> sparse = init_sparse(y, ens, cfg);

  Mat<T> u;
  const Index max_rank = std::min({n, q, m});
  if (cfg.rank.fixed) {
    u = spectral_init(y, ens, sparse, *cfg.rank.fixed, cfg);
  } else {
    const Index window = std::min(std::max<Index>(1, max_rank / 10), std::min(n, q));
    const auto spec =
        spectral_decomposition(y, ens, sparse, window, window + cfg.extra_probes, cfg);
    const Index r = estimate_rank(spec.singular_values, cfg.rank.energy_threshold, n, m, q);
    u = spec.basis.leftCols(r);
  }
  trace.rank = u.cols();

  Mat<T> coeffs = kernels::least_squares(u, ens, y, sparse, cfg.threads, 0);
  {
    IterationRecord rec;
    rec.iteration = 0;
    rec.objective = kernels::objective(u, coeffs, sparse, y, ens, cfg.threads);
    if (truth) rec.rel_error = rel_error(*truth, FactoredLowRank<T>{u, coeffs}, sparse);
    rec.elapsed_ms = elapsed_ms(start);
    trace.records.push_back(rec);
  }

  kernels::ColumnStageOptions opt;
  opt.update_sparse = cfg.mode == SolveMode::lps;
  opt.iht = iht_params(cfg, cfg.tau_max);
  opt.threads = cfg.threads;
  opt.truth = truth;

  Mat<T> basis_used = u;
  for (int t = 1; t <= cfg.t_max; ++t) {
    opt.iteration = t;
    auto stage = kernels::column_stage(u, ens, y, sparse, opt);

    IterationRecord rec;
    rec.iteration = t;
    rec.objective = stage.objective;
    rec.rel_error = stage.rel_error;
    rec.elapsed_ms = elapsed_ms(start);
    trace.records.push_back(rec);

    basis_used = u;
    coeffs = std::move(stage.coefficients);
    sparse = std::move(stage.sparse);

    if (t == 1) {
      const double norm = matrix_norm(stage.gradient, cfg.eta_norm);
      if (norm == 0.0) break; // U_0 is already stationary
      trace.eta = cfg.eta_scale / norm;
    }

    try {
      u = projected_gd_step(u, stage.gradient, trace.eta);
    } catch (const RankDeficiencyError &e) {
      throw RankDeficiencyError(std::string(e.what()) + " at iteration " + std::to_string(t),
                                -1, t);
    }
    if (observer) observer(IterationView<T>{t, basis_used, u, coeffs, sparse});

    if (cfg.early_exit_tol && t >= 2) {
      const double prev = trace.records[trace.records.size() - 2].objective;
      const double change =
          std::abs(rec.objective - prev) / std::max(prev, std::numeric_limits<double>::min());
      if (change < *cfg.early_exit_tol) {
        trace.early_exit = true;
        break;
      }
    }
  }

  trace.low_rank = FactoredLowRank<T>{basis_used, coeffs};
  trace.sparse = std::move(sparse);
  return trace;
}

#define ALTGDMIN_INSTANTIATE(T)                                                                \
  template SpectralResult<T> spectral_decomposition(const Mat<T> &,                            \
                                                    const MeasurementEnsemble<T> &,            \
                                                    const ColumnSparseMatrix<T> &, Index, Index, \
                                                    const SolverConfig &);                     \
  template ColumnSparseMatrix<T> init_sparse(const Mat<T> &, const MeasurementEnsemble<T> &,   \
                                             const SolverConfig &);                            \
  template Mat<T> spectral_init(const Mat<T> &, const MeasurementEnsemble<T> &,                \
                                const ColumnSparseMatrix<T> &, Index, const SolverConfig &);   \
  template Mat<T> ls_update_b(const Mat<T> &, const MeasurementEnsemble<T> &, const Mat<T> &,  \
                              const ColumnSparseMatrix<T> &, int);                             \
  template ResidualProblem<T> residual_problem(const Mat<T> &, const MeasurementEnsemble<T> &, \
                                               Index, const Vec<T> &);                         \
  template ColumnSparseMatrix<T> update_sparse(const Mat<T> &, const MeasurementEnsemble<T> &, \
                                               const Mat<T> &, const ColumnSparseMatrix<T> &,  \
                                               const SolverConfig &);                          \
  template Mat<T> gradient_U(const Mat<T> &, const Mat<T> &, const ColumnSparseMatrix<T> &,    \
                             const Mat<T> &, const MeasurementEnsemble<T> &, int);             \
  template double objective(const Mat<T> &, const Mat<T> &, const ColumnSparseMatrix<T> &,     \
                            const Mat<T> &, const MeasurementEnsemble<T> &, int);              \
  template Mat<T> projected_gd_step(const Mat<T> &, const Mat<T> &, double);                   \
  template SolveTrace<T> solve(const ProblemInstance<T> &, const SolverConfig &,               \
                               const GroundTruth *, const IterationObserver<T> &);

ALTGDMIN_INSTANTIATE(Real)
ALTGDMIN_INSTANTIATE(Complex)

} // namespace altgdmin

#include <benchmark/benchmark.h>

#include "altgdmin/reference.hpp"
#include "altgdmin/synth.hpp"

using namespace altgdmin;

namespace {

template <FieldScalar T> struct Fixture {
  ProblemInstance<T> instance;
  GroundTruth truth;
  Mat<T> u;
  ColumnSparseMatrix<T> s0;

  Fixture(EnsembleKind kind, Index n, Index q, Index m)
    : Fixture(gen_instance<T>({n, q, 4, 2, UniformValues{6.0}, 7}, kind, m, 7)) {}

private:
  explicit Fixture(std::pair<ProblemInstance<T>, GroundTruth> p)
    : instance(std::move(p.first)), truth(std::move(p.second)), s0(instance.n(), instance.q()) {
    Mat<T> perturbed = truth.Ustar.template cast<T>() + 0.05 * Mat<T>::Random(instance.n(), 4);
    u = Eigen::HouseholderQR<Mat<T>>(perturbed).householderQ() * Mat<T>::Identity(instance.n(), 4);
  }
};

kernels::ColumnStageOptions options(int threads) {
  kernels::ColumnStageOptions opt;
  opt.iht = {5, 3, StepRule::as_written};
  opt.iteration = 1;
  opt.threads = threads;
  return opt;
}

template <FieldScalar T> void BM_kernel(benchmark::State &state, EnsembleKind kind) {
  const Fixture<T> f(kind, state.range(0), state.range(1), state.range(2));
  const auto opt = options(static_cast<int>(state.range(3)));
  for (auto _ : state) {
    auto res = kernels::column_stage(f.u, f.instance.ensemble, f.instance.Y, f.s0, opt);
    benchmark::DoNotOptimize(res.gradient.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <FieldScalar T> void BM_reference(benchmark::State &state, EnsembleKind kind) {
  const Fixture<T> f(kind, state.range(0), state.range(1), state.range(2));
  const auto opt = options(1);
  for (auto _ : state) {
    auto res = reference::column_stage(f.u, f.instance.ensemble, f.instance.Y, f.s0, opt);
    benchmark::DoNotOptimize(res.gradient.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_kernel_gaussian(benchmark::State &s) { BM_kernel<Real>(s, EnsembleKind::gaussian); }
void BM_reference_gaussian(benchmark::State &s) { BM_reference<Real>(s, EnsembleKind::gaussian); }
void BM_kernel_fourier(benchmark::State &s) { BM_kernel<Complex>(s, EnsembleKind::fourier); }
void BM_reference_fourier(benchmark::State &s) { BM_reference<Complex>(s, EnsembleKind::fourier); }

// args: n, q, m, threads (0 = OpenMP default)
BENCHMARK(BM_kernel_gaussian)->Args({300, 128, 40, 1})->Args({300, 128, 40, 0})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reference_gaussian)->Args({300, 128, 40, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kernel_fourier)->Args({200, 64, 40, 1})->Args({200, 64, 40, 0})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reference_fourier)->Args({200, 64, 40, 1})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();

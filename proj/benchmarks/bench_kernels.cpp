#include <random>

#include <benchmark/benchmark.h>

#include "nestanet/nesta.hpp"
#include "nestanet/operators.hpp"
#include "nestanet/phantom.hpp"
#include "nestanet/restart.hpp"
#include "nestanet/sampling.hpp"
#include "nestanet/stability.hpp"

namespace {

using namespace nestanet;

Vec random_vec(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
  return v;
}

SamplingMask mask_for(int side, double rate) {
  MaskDensityConfig cfg;
  cfg.side = side;
  cfg.target_m = static_cast<std::int64_t>(rate * side * side);
  cfg.seed = 1;
  return generate_mask(cfg);
}

void BM_Dft2(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Vec in = random_vec(side * side, 1);
  Vec out(side * side);
  for (auto _ : state) {
    dft2_forward(side, in, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Dft2)->Arg(64)->Arg(256)->Arg(512);

void BM_Haar(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Vec in = random_vec(side * side, 2);
  Vec out(side * side);
  for (auto _ : state) {
    haar_forward(side, in, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Haar)->Arg(64)->Arg(256)->Arg(512);

void BM_NestaStep(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const MeasurementOperator A(mask_for(side, 0.25));
  const AnalysisOperator W(side, 2.5);
  const ImageGrid x = render_phantom(side, shepp_logan_preset());
  const Vec y = A.apply(x.data());
  const NestaConfig cfg{1e-3, 1e-3, 100};
  NestaState s = NestaState::initial(Vec::Zero(A.cols()));
  for (auto _ : state) {
    s = nesta_step(s, A, W, y, cfg);
    if (s.iter > cfg.n_max) s = NestaState::initial(Vec::Zero(A.cols()));
    benchmark::DoNotOptimize(s.x.data());
  }
}
BENCHMARK(BM_NestaStep)->Arg(64)->Arg(256);

void BM_TapeGradient(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const MeasurementOperator A(mask_for(side, 0.25));
  const AnalysisOperator W(side, 2.5);
  const ImageGrid x = render_phantom(side, shepp_logan_preset());
  const Vec y = A.apply(x.data());
  ScheduleParams sp;
  sp.beta = W.frame_bound();
  sp.M = W.output_size();
  sp.delta = delta_for_inner_iterations(17, sp.r, sp.beta, sp.M);
  sp.eps0 = default_eps0(A, y);
  sp.restarts = 4;
  const RestartSchedule schedule = build_schedule(sp);
  const SolverSpec spec{A, W, schedule, 1e-2};
  const TapedSolve rec = record_solve(spec, y);
  const Vec cot = random_vec(A.cols(), 3);
  for (auto _ : state) {
    Vec g = rec.tape.gradient(rec.output, cot, rec.input);
    benchmark::DoNotOptimize(g.data());
  }
  state.counters["iterations"] = static_cast<double>(spec.schedule.total_iterations());
}
BENCHMARK(BM_TapeGradient)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

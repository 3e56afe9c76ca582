#include <complex>
#include <vector>

#include <benchmark/benchmark.h>

#include "ambitlab/ambit.hpp"
#include "ambitlab/levy.hpp"
#include "ambitlab/noise.hpp"
#include "ambitlab/spde.hpp"

using namespace ambitlab;

namespace {

void BM_NoiseSynthesis(benchmark::State& state) {
  noise::SpectralNoiseModel model;
  model.kind = noise::NoiseKind::white;
  const auto m = static_cast<std::size_t>(state.range(0));
  const noise::NoiseSampler sampler(model, noise::Grid{1, m, 8.0});
  Philox rng(StreamKey{1, 1, 1});
  std::vector<std::complex<double>> buf;
  for (auto _ : state) {
    sampler.sample_fourier(1e-3, rng, buf);
    sampler.to_physical(buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NoiseSynthesis)->RangeMultiplier(4)->Range(256, 16384);

void BM_HeatTrace(benchmark::State& state) {
  spde::SpdeProblem p;
  p.noise.kind = noise::NoiseKind::white;
  p.op = Operator::heat;
  const auto m = static_cast<std::size_t>(state.range(0));
  p.grid = noise::Grid{1, m, static_cast<double>(m) / 32.0};
  p.coeffs.sigma = spde::Coefficient::linear(1.0);
  p.t_end = 0.1;
  p.dt = 0.1 / 128.0;
  p.u0 = 1.0;
  const spde::SpdeSolver solver(p);
  std::uint64_t path = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.trace(StreamKey{2, 2, path++}));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_HeatTrace)->Arg(256)->Arg(1024);

void BM_SampleIntegral(benchmark::State& state) {
  levy::LevyBasisModel model;
  model.alpha = static_cast<double>(state.range(0)) / 10.0;
  levy::SamplingOptions options;
  options.tau = 1e-2;
  const levy::IntegralSampler sampler(model, levy::Region::rectangle(0.0, 0.5, -1.0, 1.0),
                                      [](double, double) { return 1.0; }, options);
  Philox rng(StreamKey{3, 3, 3});
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.sample(rng));
  }
}
BENCHMARK(BM_SampleIntegral)->Arg(5)->Arg(10)->Arg(15);

void BM_AmbitDraw(benchmark::State& state) {
  ambit::AmbitSpec spec;
  spec.A = {1.0, 1.0};
  spec.sigma = holder::FieldSpec::parse("expfbm:1,0.5,0.5,0.5");
  levy::LevyBasisModel model;
  model.alpha = 1.2;
  ambit::Discretization disc;
  disc.time_cells = static_cast<std::size_t>(state.range(0));
  disc.space_cells = static_cast<std::size_t>(state.range(0)) / 2;
  disc.jumps_per_row = 32.0;
  const ambit::AmbitEvaluator evaluator(spec, model, 1.0, 0.0, disc);
  std::uint64_t path = 0;
  for (auto _ : state) {
    Philox rng(StreamKey{4, 4, path++});
    benchmark::DoNotOptimize(evaluator.sums(evaluator.draw(rng)));
  }
}
BENCHMARK(BM_AmbitDraw)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();

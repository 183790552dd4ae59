#include <benchmark/benchmark.h>

#include <memory>

#include "gibbslab/clt_lab.hpp"
#include "gibbslab/measure_transport.hpp"

namespace {

using namespace gibbslab;

// Two letters, the pair (1,1) forbidden, uniform weights, zero potential.
AdmissibilitySystem forbidden_pair_system() {
  SpinGrid grid = make_grid({0.0, 1.0}, coordinate_distance({0.0, 1.0}),
                            uniform_weights(2));
  std::vector<std::vector<double>> a = {{0.0, 0.0}, {0.0, 1.0}};
  return build_system(std::move(grid), std::move(a), {Interval{0.0, 0.0}});
}

struct Bench {
  WordSpace ws;
  DepthKFunction phi_bar;
  GibbsSolution solution;

  Bench() : ws(forbidden_pair_system()) {
    DepthKFunction phi = constant_function(ws, 1, 0.0);
    NormalizationData nd = leading_eigendata(ws, phi);
    phi_bar = normalize_potential(ws, phi, nd);
    solution =
        solve_gibbs(ws, phi_bar, uniform_measure(ws, 8), 1e-12, 500);
  }
};

Bench& shared() {
  static Bench b;
  return b;
}

void BM_EnumerateWords(benchmark::State& state) {
  AdmissibilitySystem sys = forbidden_pair_system();
  int depth = static_cast<int>(state.range(0));
  for (auto _ : state) {
    AdmissibleWordTable t = enumerate_words(sys, depth);
    benchmark::DoNotOptimize(t.flat.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          enumerate_words(sys, depth).size());
}
BENCHMARK(BM_EnumerateWords)->Arg(8)->Arg(14)->Arg(20);

void BM_DualApply(benchmark::State& state) {
  Bench& b = shared();
  int depth = static_cast<int>(state.range(0));
  WordMeasure mu = uniform_measure(b.ws, depth);
  for (auto _ : state) {
    mu = dual_apply(b.ws, b.phi_bar, mu);
    benchmark::DoNotOptimize(mu.masses.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(mu.masses.size()));
}
BENCHMARK(BM_DualApply)->Arg(8)->Arg(12)->Arg(16);

void BM_Wasserstein(benchmark::State& state) {
  Bench& b = shared();
  int depth = static_cast<int>(state.range(0));
  MetricConfig cfg = choose_delta(3.1);
  WordMeasure mu = uniform_measure(b.ws, depth);
  WordMeasure eta = dual_apply(b.ws, b.phi_bar, mu);
  for (auto _ : state) {
    WassersteinResult w =
        wasserstein(b.ws, mu, eta, GroundMetric::bounded, cfg, depth);
    benchmark::DoNotOptimize(w.value);
  }
}
BENCHMARK(BM_Wasserstein)->Arg(5)->Arg(7)->Arg(9);

void BM_SampleOrbit(benchmark::State& state) {
  Bench& b = shared();
  std::int64_t length = state.range(0);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    std::vector<int> orbit =
        sample_orbit(b.ws, b.phi_bar, b.solution, length, 100, seed++);
    benchmark::DoNotOptimize(orbit.data());
  }
  state.SetItemsProcessed(state.iterations() * length);
}
BENCHMARK(BM_SampleOrbit)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "vtspf/car.hpp"
#include "vtspf/filter.hpp"

using namespace vtspf;

namespace {

struct Setup {
  car::CarParams params;
  SpatialLayout layout;
  car::CarTrajectory traj;
  car::CarModel model;
  Neighborhoods nb;
  RegionalPartition regions;
  ParticleEnsemble ensemble;

  explicit Setup(std::size_t dim, std::size_t n)
      : params(make_params()),
        layout(SpatialLayout::complete(dim)),
        traj(car::simulate_dataset(params, layout, 2, 7)),
        model(params, layout),
        nb(layout, 1.0),
        regions(RegionalPartition::singletons(dim)) {
    StepOptions opt;
    ensemble = initial_ensemble(model, n, RngPolicy(3), opt, Algorithm::spf);
    const StepContext ctx{model, nb, regions, 1};
    ensemble = spf_step(ensemble, traj.observations[0], &traj.identifiers[1], ctx, RngPolicy(3), opt).ensemble;
  }

  static car::CarParams make_params() {
    car::CarParams p;
    p.sigma2_tilde = {1.5, 1.5};
    return p;
  }
};

Execution mode(const benchmark::State& s) { return s.range(1) ? Execution::parallel : Execution::serial; }

void BM_propagate(benchmark::State& state) {
  Setup s(40, static_cast<std::size_t>(state.range(0)));
  const StepContext ctx{s.model, s.nb, s.regions, 2};
  std::vector<LatentConfiguration> out(s.ensemble.size());
  for (auto _ : state) {
    kernels::propagate(ctx, s.ensemble.particles, &s.traj.identifiers[2], RngPolicy(5), out, mode(state));
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_log_weights(benchmark::State& state) {
  Setup s(40, static_cast<std::size_t>(state.range(0)));
  const StepContext ctx{s.model, s.nb, s.regions, 1};
  for (auto _ : state) {
    auto w = kernels::log_weights(ctx, s.traj.observations[0], s.ensemble.particles, s.ensemble.cluster_of,
                                  s.ensemble.partition.size(), mode(state));
    benchmark::DoNotOptimize(w.joint_log.data());
  }
}

void BM_splice(benchmark::State& state) {
  Setup s(40, static_cast<std::size_t>(state.range(0)));
  const auto anc = draw_ancestors(s.ensemble, 2, RngPolicy(5), ResamplingScheme::multinomial);
  std::vector<LatentConfiguration> out(s.ensemble.size());
  for (auto _ : state) {
    kernels::splice(s.ensemble.particles, s.ensemble.partition, anc, out, mode(state));
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_propagate)->ArgsProduct({{200, 2000}, {0, 1}});
BENCHMARK(BM_log_weights)->ArgsProduct({{200, 2000}, {0, 1}});
BENCHMARK(BM_splice)->ArgsProduct({{200, 2000}, {0, 1}});

BENCHMARK_MAIN();

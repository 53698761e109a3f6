#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vtspf/bounds.hpp"
#include "vtspf/exact.hpp"
#include "vtspf/filter.hpp"

namespace vtspf::testing {

inline exact::FiniteInstance fixture(const std::string& name) {
  return exact::load_instance(std::string(VTSPF_FIXTURES) + "/" + name);
}

/// Clusters laid over the whole universe regardless of the active set.
inline Partitioner universe_partitioner(std::size_t m) {
  return [m](const Identifier&, std::size_t c) { return build_cluster_partition(Identifier::universe(m), c); };
}

struct ParticleRun {
  ParticleEnsemble last;
  std::vector<double> spf_increments;
  std::vector<double> pf_increments;
  double spf_total = 0.0;
  double pf_total = 0.0;
};

/// Latent-identifier run of SPF or PF on a finite instance.
inline ParticleRun run_on_instance(const exact::FiniteInstance& inst, std::size_t n, std::uint64_t seed,
                                   Algorithm alg, std::size_t c, Execution exec = Execution::parallel,
                                   ResamplingScheme scheme = ResamplingScheme::multinomial) {
  const exact::FiniteModel model(inst);
  const Neighborhoods nb(inst.layout, inst.radius);
  const RngPolicy rng(seed);
  StepOptions opt;
  opt.cluster_size = c;
  opt.execution = exec;
  opt.resampling = scheme;
  opt.partitioner = universe_partitioner(inst.num_vertices());
  ParticleRun out;
  out.last = initial_ensemble(model, n, rng, opt, alg);
  for (int t = 1; t <= inst.horizon(); ++t) {
    const StepContext ctx{model, nb, inst.regions, t};
    const auto y = inst.observation_frame(t);
    auto s = alg == Algorithm::spf ? spf_step(out.last, y, nullptr, ctx, rng, opt)
                                   : pf_step(out.last, y, nullptr, ctx, rng, opt);
    out.last = std::move(s.ensemble);
    out.spf_increments.push_back(s.spf_increment);
    out.pf_increments.push_back(s.pf_increment);
    out.spf_total += s.spf_increment;
    out.pf_total += s.pf_increment;
  }
  return out;
}

/// Law of vertex v's extended symbol (0 inactive, s + 1 active in state s).
inline std::vector<double> particle_marginal(const ParticleEnsemble& e, VertexId v, std::size_t states) {
  std::vector<double> out(states + 1, 0.0);
  const auto w = e.weights_for(v);
  for (std::size_t n = 0; n < e.size(); ++n) {
    const auto& x = e.particles[n];
    const std::size_t sym = x.contains(v) ? static_cast<std::size_t>(x.raw(v).first) + 1 : 0;
    out[sym] += w[n];
  }
  return out;
}

inline double tv_to_exact(const ParticleEnsemble& e, const exact::ExactDistribution& d, VertexId v) {
  const VertexId j[] = {v};
  const auto exact_marg = d.marginal(j);
  const auto pm = particle_marginal(e, v, d.states());
  double acc = 0.0;
  for (std::size_t s = 0; s < pm.size(); ++s) acc += std::abs(pm[s] - exact_marg[s]);
  return acc;
}

/// f = a, f~ = b (whole factor, 1 without neighbours), g = c, region factor = p.
class ConstModel final : public Model {
 public:
  ConstModel(std::size_t m, double a, double b, double c, double p = 0.5) : m_(m), a_(a), b_(b), c_(c), p_(p) {}
  std::size_t universe_size() const override { return m_; }
  double log_region_transition(int, std::span<const VertexId>, const Identifier&,
                               const LatentConfiguration&) const override {
    return std::log(p_);
  }
  Identifier sample_identifier(int, const LatentConfiguration& prev, const RegionalPartition&,
                               Rng&) const override {
    return prev.identifier();
  }
  double log_transition(int, VertexId, const Identifier&, const VertexState&,
                        const std::optional<VertexState>&) const override {
    return std::log(a_);
  }
  VertexState sample_transition(int, VertexId, const Identifier&, const std::optional<VertexState>&,
                                Rng&) const override {
    return {};
  }
  double log_interaction(int, VertexId, const LatentConfiguration&,
                         std::span<const VertexId> nb) const override {
    return nb.empty() ? 0.0 : std::log(b_);
  }
  double log_observation(int, VertexId, double, const VertexState&) const override { return std::log(c_); }
  LatentConfiguration sample_initial(Rng&) const override {
    return LatentConfiguration(Identifier::universe(m_), m_);
  }

 private:
  std::size_t m_;
  double a_, b_, c_, p_;
};

/// Bound inputs for vertex v of a finite instance, with clusters of size c
/// laid over the whole universe at every time.
inline BoundInputs fixture_bounds(const exact::FiniteInstance& inst, std::size_t c, VertexId v) {
  const Identifier all = Identifier::universe(inst.num_vertices());
  const std::vector<Identifier> ks(static_cast<std::size_t>(inst.horizon()) + 1, all);
  const std::vector<ClusterPartition> cs(ks.size(), build_cluster_partition(all, c));
  BoundInputs in;
  in.densities = empirical_bounds_for_instance(inst);
  in.graph = graph_quantities(inst.layout, inst.regions, ks, cs, inst.radius);
  const VertexId j[] = {v};
  in.min_boundary_distance = min_boundary_distance(inst.layout, ks, cs, j, inst.radius);
  return in;
}

}  // namespace vtspf::testing

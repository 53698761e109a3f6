#include "vtspf/model.hpp"

#include "vtspf/errors.hpp"

namespace vtspf {

LatentConfiguration::LatentConfiguration(Identifier k, std::size_t universe)
    : identifier_(std::move(k)), states_(universe) {
  if (!identifier_.empty() && identifier_.members().back() >= universe)
    throw DomainError("identifier member outside universe");
}

const VertexState& LatentConfiguration::at(VertexId v) const {
  if (!identifier_.contains(v))
    throw DomainError("no state for inactive vertex " + std::to_string(v));
  return states_[v];
}

void LatentConfiguration::set(VertexId v, VertexState s) {
  if (!identifier_.contains(v))
    throw DomainError("cannot set state of inactive vertex " + std::to_string(v));
  states_[v] = s;
}

double ObservationFrame::at(VertexId v) const {
  if (!has(v)) throw DomainError("missing observation for vertex " + std::to_string(v));
  return values_[v];
}

namespace {

std::optional<VertexState> ancestor_of(const LatentConfiguration& prev, VertexId v) {
  if (prev.contains(v)) return prev.raw(v);
  return std::nullopt;
}

double log_vertex_factor(const StepContext& ctx, VertexId v, const LatentConfiguration& x_t,
                         const LatentConfiguration& x_prev, std::vector<VertexId>& nb) {
  ctx.neighborhoods.active_neighbors(x_t.identifier(), v, nb);
  return ctx.model.log_transition(ctx.t, v, x_t.identifier(), x_t.at(v), ancestor_of(x_prev, v)) +
         ctx.model.log_interaction(ctx.t, v, x_t, nb);
}

}  // namespace

double log_joint_transition_density(const StepContext& ctx, const LatentConfiguration& x_t,
                                    const LatentConfiguration& x_prev) {
  std::vector<VertexId> nb;
  double acc = 0.0;
  for (VertexId v : x_t.identifier()) acc += log_vertex_factor(ctx, v, x_t, x_prev, nb);
  return acc;
}

double joint_transition_density(const StepContext& ctx, const LatentConfiguration& x_t,
                                const LatentConfiguration& x_prev) {
  return std::exp(log_joint_transition_density(ctx, x_t, x_prev));
}

double identifier_transition_density(const StepContext& ctx, const Identifier& k_t,
                                     const LatentConfiguration& x_prev) {
  double acc = 0.0;
  for (const auto& region : ctx.regions.regions)
    acc += ctx.model.log_region_transition(ctx.t, region, k_t, x_prev);
  return std::exp(acc);
}

double log_vertex_observation(const StepContext& ctx, VertexId v, const ObservationFrame& y,
                              const LatentConfiguration& x_t) {
  return y.has(v) ? ctx.model.log_observation(ctx.t, v, y.at(v), x_t.raw(v)) : 0.0;
}

double log_joint_observation_density(const StepContext& ctx, const ObservationFrame& y,
                                     const LatentConfiguration& x_t) {
  double acc = 0.0;
  for (VertexId v : x_t.identifier())
    acc += log_vertex_observation(ctx, v, y, x_t);
  return acc;
}

double joint_observation_density(const StepContext& ctx, const ObservationFrame& y,
                                 const LatentConfiguration& x_t) {
  return std::exp(log_joint_observation_density(ctx, y, x_t));
}

double log_cluster_conditional_density(const StepContext& ctx, std::span<const VertexId> cluster,
                                       const LatentConfiguration& x_t,
                                       const LatentConfiguration& x_prev,
                                       const ObservationFrame& y) {
  std::vector<VertexId> nb;
  double acc = 0.0;
  for (VertexId v : cluster) {
    if (!x_t.contains(v)) throw DomainError("cluster member not in identifier");
    acc += log_vertex_factor(ctx, v, x_t, x_prev, nb) +
           log_vertex_observation(ctx, v, y, x_t);
  }
  return acc;
}

double cluster_conditional_density(const StepContext& ctx, std::span<const VertexId> cluster,
                                   const LatentConfiguration& x_t,
                                   const LatentConfiguration& x_prev, const ObservationFrame& y) {
  return std::exp(log_cluster_conditional_density(ctx, cluster, x_t, x_prev, y));
}

double gibbs_unnormalized_density(std::span<const CliquePotential> potentials,
                                  std::span<const double> x) {
  double energy = 0.0;
  std::vector<double> local;
  for (const auto& p : potentials) {
    local.clear();
    for (VertexId v : p.clique) local.push_back(x[v]);
    energy += p.energy(local);
  }
  return std::exp(-energy);
}

}  // namespace vtspf

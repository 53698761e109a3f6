#include "vtspf/kernels.hpp"

#include <exception>
#include <mutex>

namespace vtspf::kernels {

namespace {

LatentConfiguration propagate_one(const StepContext& ctx, const LatentConfiguration& anc,
                                  const Identifier* observed, const RngPolicy& policy,
                                  std::size_t n) {
  Identifier k;
  if (observed) {
    k = *observed;
  } else {
    Rng r = policy.stream(ctx.t, n, 0, StreamPurpose::identifier);
    k = ctx.model.sample_identifier(ctx.t, anc, ctx.regions, r);
  }
  Rng r = policy.stream(ctx.t, n, 0, StreamPurpose::propagate);
  LatentConfiguration x(k, ctx.model.universe_size());
  for (VertexId v : x.identifier()) {
    std::optional<VertexState> ancestor;
    if (anc.contains(v)) ancestor = anc.raw(v);
    x.raw(v) = ctx.model.sample_transition(ctx.t, v, x.identifier(), ancestor, r);
  }
  return x;
}

void weigh_one(const StepContext& ctx, const ObservationFrame& y, const LatentConfiguration& x,
               std::span<const std::size_t> cluster_of, WeightTable& table, std::size_t n,
               std::vector<VertexId>& nb) {
  double joint = 0.0;
  for (std::size_t j = 0; j < table.clusters; ++j) table.at(j, n) = 0.0;
  for (VertexId v : x.identifier()) {
    ctx.neighborhoods.active_neighbors(x.identifier(), v, nb);
    const double term = log_vertex_observation(ctx, v, y, x) +
                        ctx.model.log_interaction(ctx.t, v, x, nb);
    joint += term;
    const std::size_t j = v < cluster_of.size() ? cluster_of[v] : ClusterPartition::npos;
    if (j != ClusterPartition::npos) table.at(j, n) += term;
  }
  table.joint_log[n] = joint;
}

LatentConfiguration splice_one(std::span<const LatentConfiguration> parents,
                               const ClusterPartition& partition,
                               const std::vector<std::vector<std::size_t>>& ancestors,
                               std::size_t n, std::size_t universe) {
  std::vector<VertexId> members;
  for (std::size_t j = 0; j < partition.size(); ++j) {
    const auto& parent = parents[ancestors[j][n]];
    for (VertexId v : partition.clusters[j])
      if (parent.contains(v)) members.push_back(v);
  }
  LatentConfiguration child(Identifier(std::move(members)), universe);
  for (std::size_t j = 0; j < partition.size(); ++j) {
    const auto& parent = parents[ancestors[j][n]];
    for (VertexId v : partition.clusters[j])
      if (parent.contains(v)) child.raw(v) = parent.raw(v);
  }
  return child;
}

/// Runs body(i) for i in [0, n) across OpenMP threads, rethrowing the first
/// exception on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr error;
  std::mutex guard;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

void propagate(const StepContext& ctx, std::span<const LatentConfiguration> ancestors,
               const Identifier* observed, const RngPolicy& rng,
               std::span<LatentConfiguration> out, Execution exec) {
  if (exec == Execution::serial) {
    for (std::size_t n = 0; n < out.size(); ++n)
      out[n] = propagate_one(ctx, ancestors[n], observed, rng, n);
    return;
  }
  parallel_for(out.size(),
               [&](std::size_t n) { out[n] = propagate_one(ctx, ancestors[n], observed, rng, n); });
}

WeightTable log_weights(const StepContext& ctx, const ObservationFrame& y,
                        std::span<const LatentConfiguration> particles,
                        std::span<const std::size_t> cluster_of, std::size_t num_clusters,
                        Execution exec) {
  WeightTable table;
  table.clusters = num_clusters;
  table.particles = particles.size();
  table.cluster_log.assign(num_clusters * particles.size(), 0.0);
  table.joint_log.assign(particles.size(), 0.0);
  if (exec == Execution::serial) {
    std::vector<VertexId> nb;
    for (std::size_t n = 0; n < particles.size(); ++n)
      weigh_one(ctx, y, particles[n], cluster_of, table, n, nb);
    return table;
  }
  std::exception_ptr error;
  std::mutex guard;
#pragma omp parallel
  {
    std::vector<VertexId> nb;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(particles.size()); ++i) {
      try {
        weigh_one(ctx, y, particles[static_cast<std::size_t>(i)], cluster_of, table,
                  static_cast<std::size_t>(i), nb);
      } catch (...) {
        std::lock_guard lock(guard);
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return table;
}

void splice(std::span<const LatentConfiguration> parents, const ClusterPartition& partition,
            const std::vector<std::vector<std::size_t>>& ancestors,
            std::span<LatentConfiguration> out, Execution exec) {
  const std::size_t universe = parents.empty() ? 0 : parents.front().universe_size();
  if (exec == Execution::serial) {
    for (std::size_t n = 0; n < out.size(); ++n)
      out[n] = splice_one(parents, partition, ancestors, n, universe);
    return;
  }
  parallel_for(out.size(),
               [&](std::size_t n) { out[n] = splice_one(parents, partition, ancestors, n, universe); });
}

}  // namespace vtspf::kernels

#pragma once

// Data-parallel particle kernels. Each kernel has an OpenMP version and a
// plain serial reference; both consume the same RNG streams and sum in the
// same order, so their outputs are bit-identical.

#include <cstddef>
#include <span>
#include <vector>

#include "vtspf/graph.hpp"
#include "vtspf/model.hpp"
#include "vtspf/rng.hpp"

namespace vtspf {

enum class Execution { serial, parallel };

/// Raw log weights: per cluster (row-major clusters x particles) and joint.
struct WeightTable {
  std::size_t clusters = 0;
  std::size_t particles = 0;
  std::vector<double> cluster_log;
  std::vector<double> joint_log;

  double& at(std::size_t j, std::size_t n) { return cluster_log[j * particles + n]; }
  double at(std::size_t j, std::size_t n) const { return cluster_log[j * particles + n]; }
  std::span<const double> row(std::size_t j) const {
    return std::span<const double>(cluster_log).subspan(j * particles, particles);
  }
};

namespace kernels {

/// Steps 2-4: identifier (sampled, or fixed to `observed`) then staying and
/// entering vertices from f_t^v. Particle n draws from stream
/// (t, n, 0, identifier) and (t, n, 0, propagate).
void propagate(const StepContext& ctx, std::span<const LatentConfiguration> ancestors,
               const Identifier* observed, const RngPolicy& rng,
               std::span<LatentConfiguration> out, Execution exec);

/// Step 6: w^{B,(n)} = prod_{v in B ∩ k^(n)} g f~, in log space, plus the
/// joint product over all active vertices. `cluster_of` maps vertices to
/// cluster ordinals; vertices outside every cluster only enter the joint weight.
WeightTable log_weights(const StepContext& ctx, const ObservationFrame& y,
                        std::span<const LatentConfiguration> particles,
                        std::span<const std::size_t> cluster_of, std::size_t num_clusters,
                        Execution exec);

/// Blockwise splice: child n takes cluster j's identifier fragment and states
/// from particle ancestors[j][n].
void splice(std::span<const LatentConfiguration> parents, const ClusterPartition& partition,
            const std::vector<std::vector<std::size_t>>& ancestors,
            std::span<LatentConfiguration> out, Execution exec);

}  // namespace kernels
}  // namespace vtspf

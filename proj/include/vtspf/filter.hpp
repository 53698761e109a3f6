#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vtspf/graph.hpp"
#include "vtspf/kernels.hpp"
#include "vtspf/model.hpp"
#include "vtspf/rng.hpp"

namespace vtspf {

enum class Algorithm { spf, pf };
enum class ResamplingScheme { multinomial, systematic };

std::string to_string(Algorithm a);

/// Weighted particle approximation at one time. In product form (SPF) every
/// cluster of `partition` carries its own normalized weight vector; in joint
/// form (PF) a single weight vector covers all vertices.
struct ParticleEnsemble {
  int t = 0;
  std::vector<LatentConfiguration> particles;
  ClusterPartition partition;
  bool joint = false;
  /// cluster ordinal of every universe vertex (npos outside the template)
  std::vector<std::size_t> cluster_of;
  /// normalized weights, one row per cluster (product form) or a single row
  std::vector<std::vector<double>> weights;

  std::size_t size() const { return particles.size(); }
  /// weight row governing vertex v
  std::size_t row_of(VertexId v) const;
  std::span<const double> weights_for(VertexId v) const { return weights[row_of(v)]; }

  /// Filtered probability that the predicate holds for x^v, where inactive
  /// particles count as a separate outcome passed as nullptr.
  template <typename Pred>
  double vertex_probability(VertexId v, Pred&& pred) const {
    const auto w = weights_for(v);
    double acc = 0.0;
    for (std::size_t n = 0; n < particles.size(); ++n) {
      const auto& x = particles[n];
      if (x.contains(v) ? pred(&x.raw(v)) : pred(nullptr)) acc += w[n];
    }
    return acc;
  }
};

/// 1 / sum w^2 of a normalized weight vector.
double effective_sample_size(std::span<const double> normalized);

/// log((1/N) sum exp(lw)). Throws DegeneracyError when every weight is zero.
double log_mean_exp(std::span<const double> log_weights, int t = 0, std::size_t cluster = 0);

/// sum over clusters of log((1/N) sum_n w^{B,(n)}).
double spf_loglik_increment(const WeightTable& table, int t = 0);
/// log((1/N) sum_n prod_B w^{B,(n)}), using the joint weights.
double pf_loglik_increment(const WeightTable& table, int t = 0);

struct StepOptions {
  std::size_t cluster_size = 2;
  ResamplingScheme resampling = ResamplingScheme::multinomial;
  Execution execution = Execution::parallel;
  Partitioner partitioner = build_cluster_partition;
};

struct StepOutcome {
  ParticleEnsemble ensemble;
  double spf_increment = 0.0;
  double pf_increment = 0.0;
};

/// pi_0 sampled N times from stream (0, n, 0, initial).
ParticleEnsemble initial_ensemble(const Model& model, std::size_t n, const RngPolicy& rng,
                                  const StepOptions& options, Algorithm algorithm);

/// Ancestor indices per cluster ordinal: row j holds N draws from cluster j's
/// weights on stream (t, 0, j, resample), where t is the new time.
std::vector<std::vector<std::size_t>> draw_ancestors(const ParticleEnsemble& ensemble, int t,
                                                     const RngPolicy& rng,
                                                     ResamplingScheme scheme);

/// Line 1: N i.i.d. draws from the product of per-cluster weighted
/// empirical measures, assembled blockwise.
std::vector<LatentConfiguration> sample_from_product(const ParticleEnsemble& ensemble, int t,
                                                     const RngPolicy& rng,
                                                     ResamplingScheme scheme,
                                                     Execution exec = Execution::parallel);

/// One VT-MRF-SPF step to time ctx.t. `observed` fixes every particle's
/// identifier; null samples it per particle from the model.
StepOutcome spf_step(const ParticleEnsemble& prev, const ObservationFrame& y,
                     const Identifier* observed, const StepContext& ctx, const RngPolicy& rng,
                     const StepOptions& options);

/// Baseline joint-weight, joint-resampling step. The ensemble still carries
/// the cluster template so the SPF log-likelihood can be reported for it.
StepOutcome pf_step(const ParticleEnsemble& prev, const ObservationFrame& y,
                    const Identifier* observed, const StepContext& ctx, const RngPolicy& rng,
                    const StepOptions& options);

class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(int t)
      : std::runtime_error("wall-clock budget exceeded at t=" + std::to_string(t)), time_(t) {}
  int time() const { return time_; }

 private:
  int time_;
};

struct FilterConfig {
  Algorithm algorithm = Algorithm::spf;
  std::size_t particles = 800;
  double radius = 1.0;
  std::uint64_t seed = 0;
  StepOptions step;
  std::optional<std::chrono::milliseconds> budget;
};

struct FilterOutput {
  std::vector<double> pf_increments;
  std::vector<double> spf_increments;
  /// per time, one entry per weight row
  std::vector<std::vector<double>> ess;
  /// per time, dense over the universe; NaN where no particle has the vertex active
  std::vector<std::vector<double>> posterior_means;
  double pf_total = 0.0;
  double spf_total = 0.0;

  double scaled_pf(double dim) const { return pf_total / dim; }
  double scaled_spf(double dim) const { return spf_total / dim; }
};

/// Runs the configured filter over t = 1..T. `observed` is either empty
/// (latent identifiers) or holds k_t for t = 1..T.
FilterOutput run_filter(const Model& model, const SpatialLayout& layout,
                        const RegionalPartition& regions,
                        std::span<const ObservationFrame> observations,
                        std::span<const Identifier> observed, const FilterConfig& config);

}  // namespace vtspf

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "vtspf/graph.hpp"
#include "vtspf/rng.hpp"

namespace vtspf {

/// Per-vertex latent value. Two slots cover every model shipped here: the
/// CAR model stores (phi, varphi); finite models store the symbol in `first`.
struct VertexState {
  double first = 0.0;
  double second = 0.0;

  friend bool operator==(const VertexState&, const VertexState&) = default;
};

/// (k_t, x_t^{k_t}). States are stored densely over the universe; only the
/// entries of active vertices are meaningful and only those are readable.
class LatentConfiguration {
 public:
  LatentConfiguration() = default;
  LatentConfiguration(Identifier k, std::size_t universe);

  const Identifier& identifier() const { return identifier_; }
  std::size_t universe_size() const { return states_.size(); }
  bool contains(VertexId v) const { return identifier_.contains(v); }

  /// Throws DomainError when v is not active.
  const VertexState& at(VertexId v) const;
  /// Throws DomainError when v is not active.
  void set(VertexId v, VertexState s);

  /// Unchecked access for kernels that already know v is active.
  const VertexState& raw(VertexId v) const { return states_[v]; }
  VertexState& raw(VertexId v) { return states_[v]; }

  void set_identifier(Identifier k) { identifier_ = std::move(k); }

 private:
  Identifier identifier_;
  std::vector<VertexState> states_;
};

/// y_t over the universe; NaN marks a vertex without an observation.
class ObservationFrame {
 public:
  ObservationFrame() = default;
  explicit ObservationFrame(std::size_t universe)
      : values_(universe, std::numeric_limits<double>::quiet_NaN()) {}

  std::size_t universe_size() const { return values_.size(); }
  bool has(VertexId v) const { return v < values_.size() && !std::isnan(values_[v]); }
  /// Throws DomainError when missing.
  double at(VertexId v) const;
  void set(VertexId v, double y) { values_.at(v) = y; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// The four density families of a hidden spatiotemporal MRF with varying
/// dimension. All evaluators return log densities, must be pure, and must be
/// safe to call concurrently. Samplers draw only from the generator passed in.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t universe_size() const = 0;

  /// log p_t^R(k_t ∩ R | k_{t-1}, x_{t-1} restricted to k_{t-1} ∩ R).
  virtual double log_region_transition(int t, std::span<const VertexId> region,
                                       const Identifier& next,
                                       const LatentConfiguration& prev) const = 0;
  virtual Identifier sample_identifier(int t, const LatentConfiguration& prev,
                                       const RegionalPartition& regions, Rng& rng) const = 0;

  /// log f_t^v(x | k_t, ancestor). An empty ancestor selects the entering branch.
  virtual double log_transition(int t, VertexId v, const Identifier& next, const VertexState& x,
                                const std::optional<VertexState>& ancestor) const = 0;
  virtual VertexState sample_transition(int t, VertexId v, const Identifier& next,
                                        const std::optional<VertexState>& ancestor,
                                        Rng& rng) const = 0;

  /// log f~_t^v(x_t^v, x_t^{N_t(v)}); `neighbors` is N_t(v) within x's identifier.
  virtual double log_interaction(int t, VertexId v, const LatentConfiguration& x,
                                 std::span<const VertexId> neighbors) const = 0;

  /// log g_t^v(y | k_t, x_t^v).
  virtual double log_observation(int t, VertexId v, double y, const VertexState& x) const = 0;

  /// Draw from pi_0.
  virtual LatentConfiguration sample_initial(Rng& rng) const = 0;

  /// Scalar reported as the filtered mean of a vertex.
  virtual double summary(const VertexState& x) const { return x.first; }
};

/// Everything needed to evaluate the factorized densities at one time step.
struct StepContext {
  const Model& model;
  const Neighborhoods& neighborhoods;
  const RegionalPartition& regions;
  int t = 1;
};

double log_joint_transition_density(const StepContext& ctx, const LatentConfiguration& x_t,
                                    const LatentConfiguration& x_prev);
double joint_transition_density(const StepContext& ctx, const LatentConfiguration& x_t,
                                const LatentConfiguration& x_prev);

double identifier_transition_density(const StepContext& ctx, const Identifier& k_t,
                                     const LatentConfiguration& x_prev);

/// log g_t^v(y^v | x^v); 0 when y carries no value for v (missing data is marginalized).
double log_vertex_observation(const StepContext& ctx, VertexId v, const ObservationFrame& y,
                              const LatentConfiguration& x_t);

double log_joint_observation_density(const StepContext& ctx, const ObservationFrame& y,
                                     const LatentConfiguration& x_t);
double joint_observation_density(const StepContext& ctx, const ObservationFrame& y,
                                 const LatentConfiguration& x_t);

/// One cluster's factor of q_t: prod over the cluster of f * f~ * g.
double log_cluster_conditional_density(const StepContext& ctx, std::span<const VertexId> cluster,
                                       const LatentConfiguration& x_t,
                                       const LatentConfiguration& x_prev,
                                       const ObservationFrame& y);
double cluster_conditional_density(const StepContext& ctx, std::span<const VertexId> cluster,
                                   const LatentConfiguration& x_t,
                                   const LatentConfiguration& x_prev, const ObservationFrame& y);

struct CliquePotential {
  std::vector<VertexId> clique;
  std::function<double(std::span<const double>)> energy;
};

/// exp(-sum_c V_c(x_c)); the partition function is not computed.
double gibbs_unnormalized_density(std::span<const CliquePotential> potentials,
                                  std::span<const double> x);

}  // namespace vtspf

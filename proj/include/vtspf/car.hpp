#pragma once

// Leroux-CAR spatial component with an AR(1) temporal component, normal or
// Poisson observations, and a per-vertex enter/stay identifier process.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtspf/graph.hpp"
#include "vtspf/model.hpp"
#include "vtspf/rng.hpp"

namespace vtspf::car {

enum class ObservationModel { normal, poisson };

ObservationModel parse_observation_model(const std::string& s);
std::string to_string(ObservationModel m);

struct CarParams {
  double rho_spatial = 0.5;   // vartheta in [0,1]
  double rho_temporal = 0.5;  // bar-vartheta in (-1,1)
  double sigma2 = 0.1;        // AR(1) innovation variance
  std::vector<double> sigma2_tilde;  // spatial variance per time, index t-1
  double nu2 = 1.0;           // normal observation variance
  ObservationModel obs_model = ObservationModel::normal;
  double p_enter = 0.9;
  double p_stay = 0.9;

  /// Throws DomainError on out-of-range values or fewer than T spatial variances.
  void validate(int T) const;
  double sigma2_tilde_at(int t) const;

  /// Benchmark draws: varphi_0 handled by the simulator; vartheta and
  /// bar-vartheta ~ U[0,1); sigma^2 = 0.1; sigma~_t^2 ~ U[1,2].
  static CarParams draw(Rng& rng, int T, ObservationModel obs, double p_enter, double p_stay,
                        double nu2 = 1.0);
};

struct CarLatentState {
  double phi = 0.0;
  double varphi = 0.0;

  double psi() const { return phi + varphi; }
  VertexState to_vertex_state() const { return {phi, varphi}; }
  static CarLatentState from(const VertexState& s) { return {s.first, s.second}; }
};

struct NormalLaw {
  double mean = 0.0;
  double variance = 1.0;

  double log_density(double x) const;
};

/// T*T row-major 0/1 matrix with d(t,t') = 1 iff |t - t'| = 1.
std::vector<std::uint8_t> temporal_matrix(std::size_t T);

/// w_ii'(t) over the members of k_t (in sorted order), row-major |k|*|k|.
std::vector<std::uint8_t> effective_adjacency(const SpatialLayout& base, const Identifier& k);

/// Normal full conditional of phi_t^i given its active neighbours.
/// `phi` is dense over the universe; only active neighbours are read.
NormalLaw phi_full_conditional(VertexId i, const Identifier& k, std::span<const double> phi,
                               const SpatialLayout& layout, const CarParams& params, int t);
NormalLaw phi_full_conditional(double neighbor_sum, std::size_t degree, const CarParams& params,
                               int t);

/// Q = [vartheta (D_w - W) + (1 - vartheta) I] / sigma~_t^2 over the members of k.
/// Throws SingularPrecisionError when Q is not positive definite.
Eigen::MatrixXd leroux_precision(const SpatialLayout& layout, const Identifier& k,
                                 const CarParams& params, int t);

/// AR(1) step; the stationary law when the ancestor is absent.
NormalLaw varphi_step(const std::optional<double>& prev, const CarParams& params);

double log_observation_density(double y, double psi, const CarParams& params);
double observation_density(double y, double psi, const CarParams& params);

/// Bernoulli stay/enter product over the region's vertices.
double identifier_step_density(std::span<const VertexId> region, const Identifier& k_t,
                               const Identifier& k_prev, const CarParams& params);

struct CarTrajectory {
  std::size_t universe = 0;
  /// index 0 is the initial time; 1..T follow
  std::vector<Identifier> identifiers;
  std::vector<std::vector<CarLatentState>> states;
  /// index t-1 holds y_t
  std::vector<ObservationFrame> observations;

  int horizon() const { return static_cast<int>(observations.size()); }
};

/// varphi_0 ~ U[1,2] per vertex with every vertex active at t=0; the
/// spatial layer starts at t=1. Fully determined by `seed`.
CarTrajectory simulate_dataset(const CarParams& params, const SpatialLayout& layout, int T,
                               std::uint64_t seed);

/// Columns t,vertex,active,phi,varphi,psi,y with a header row; inactive
/// entries and the t=0 observation are left empty.
void write_trajectory_csv(const CarTrajectory& traj, const std::string& path);
CarTrajectory read_trajectory_csv(const std::string& path);

/// key=value lines; sigma2_tilde is a comma-separated list.
void write_params(const CarParams& params, const std::string& path);
CarParams read_params(const std::string& path);

class CarModel final : public Model {
 public:
  CarModel(CarParams params, SpatialLayout layout);

  const CarParams& params() const { return params_; }
  const SpatialLayout& layout() const { return layout_; }

  std::size_t universe_size() const override { return layout_.size(); }
  double log_region_transition(int t, std::span<const VertexId> region, const Identifier& next,
                               const LatentConfiguration& prev) const override;
  Identifier sample_identifier(int t, const LatentConfiguration& prev,
                               const RegionalPartition& regions, Rng& rng) const override;
  double log_transition(int t, VertexId v, const Identifier& next, const VertexState& x,
                        const std::optional<VertexState>& ancestor) const override;
  VertexState sample_transition(int t, VertexId v, const Identifier& next,
                                const std::optional<VertexState>& ancestor,
                                Rng& rng) const override;
  double log_interaction(int t, VertexId v, const LatentConfiguration& x,
                         std::span<const VertexId> neighbors) const override;
  double log_observation(int t, VertexId v, double y, const VertexState& x) const override;
  LatentConfiguration sample_initial(Rng& rng) const override;
  double summary(const VertexState& x) const override { return x.first + x.second; }

  /// Proposal law of phi_t^v: the single-vertex factor of the Leroux precision.
  NormalLaw phi_marginal_factor(int t, VertexId v, const Identifier& next) const;

 private:
  std::size_t active_degree(VertexId v, const Identifier& k) const;

  CarParams params_;
  SpatialLayout layout_;
};

CarModel as_model_spec(const CarParams& params, const SpatialLayout& layout);

}  // namespace vtspf::car

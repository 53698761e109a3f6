#pragma once

// Exhaustive-enumeration filters for small finite instances. Each vertex
// takes an extended symbol: 0 = inactive, s + 1 = active in state s, so a
// distribution over (identifier, states) is a table over (S+1)^m atoms.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vtspf/graph.hpp"
#include "vtspf/model.hpp"

namespace vtspf::exact {

inline constexpr std::size_t kMaxVertices = 5;
inline constexpr std::size_t kMaxStates = 4;
inline constexpr std::size_t kMaxHorizon = 4;

/// Tabulated HSTMRF-VD with time-homogeneous densities shared by all vertices:
///   f (entering)  enter[s]
///   f (staying)   stay[s_prev * S + s]
///   f~            prod over active r-neighbours w of interaction[s_v * S + s_w]
///   g             emission[s * Y + y]
///   p^R           per-vertex Bernoulli(p_stay / p_enter) product over the region
/// pi_0 is the point mass at (initial_identifier, initial_states).
struct FiniteInstance {
  std::size_t num_states = 2;
  std::size_t num_symbols = 2;
  SpatialLayout layout;
  double radius = 1.0;
  RegionalPartition regions;
  std::vector<double> enter;
  std::vector<double> stay;
  std::vector<double> interaction;
  std::vector<double> emission;
  double p_enter = 0.5;
  double p_stay = 0.5;
  Identifier initial_identifier;
  std::vector<std::size_t> initial_states;  // dense over the universe
  std::vector<std::vector<std::size_t>> observations;  // [t-1][v], every vertex

  std::size_t num_vertices() const { return layout.size(); }
  int horizon() const { return static_cast<int>(observations.size()); }

  /// Enforces the size caps, positivity and table shapes. Throws DomainError.
  void validate() const;

  double f_enter(std::size_t s) const { return enter[s]; }
  double f_stay(std::size_t prev, std::size_t s) const { return stay[prev * num_states + s]; }
  double pair(std::size_t a, std::size_t b) const { return interaction[a * num_states + b]; }
  double g(std::size_t s, std::size_t y) const { return emission[s * num_symbols + y]; }

  ObservationFrame observation_frame(int t) const;
};

FiniteInstance parse_instance_json(const std::string& text);
FiniteInstance load_instance(const std::string& path);
std::string to_json(const FiniteInstance& instance);

class ExactDistribution {
 public:
  ExactDistribution() = default;
  ExactDistribution(std::size_t vertices, std::size_t states);

  std::size_t vertices() const { return vertices_; }
  std::size_t states() const { return states_; }
  std::size_t atoms() const { return prob_.size(); }
  std::size_t base() const { return states_ + 1; }

  double& operator[](std::size_t atom) { return prob_[atom]; }
  double operator[](std::size_t atom) const { return prob_[atom]; }
  std::span<const double> table() const { return prob_; }

  /// Extended symbol of vertex v in an atom.
  std::size_t symbol(std::size_t atom, std::size_t v) const;
  std::size_t encode(std::span<const std::size_t> symbols) const;
  std::size_t encode(const Identifier& k, std::span<const std::size_t> states) const;

  /// P(K = k, X^k = states); states dense over the universe.
  double probability(const Identifier& k, std::span<const std::size_t> states) const;

  /// Joint law of the extended symbols of J (in the order given), flattened
  /// with the first member as the least significant digit.
  std::vector<double> marginal(std::span<const VertexId> j) const;

  double total() const;

 private:
  std::size_t vertices_ = 0;
  std::size_t states_ = 0;
  std::vector<std::size_t> stride_;
  std::vector<double> prob_;
};

struct ExactStep {
  ExactDistribution distribution;
  double log_normalizer = 0.0;
};

ExactDistribution initial_distribution(const FiniteInstance& instance);

/// Prediction operator P_s by enumeration of predecessors.
ExactDistribution predict(const ExactDistribution& prev, const FiniteInstance& instance);
/// Correction operator C_s.
ExactStep correct(const ExactDistribution& predicted, int t, const FiniteInstance& instance);
/// Clustering operator B_s: product of the cluster marginals. Every vertex
/// must belong to exactly one cluster.
ExactDistribution cluster_product(const ExactDistribution& rho, const ClusterPartition& partition);

/// F_s = C_s P_s
ExactStep exact_filter_step(const ExactDistribution& prev, int t, const FiniteInstance& instance);
/// F~_s = C_s B_s P_s
ExactStep exact_cluster_filter_step(const ExactDistribution& prev, int t,
                                    const FiniteInstance& instance,
                                    const ClusterPartition& partition);
/// Large-N limit of the particle recursion with per-cluster weights: predict,
/// reweight each cluster marginal by its own local weight, take the product.
/// log_normalizer is the sum of the per-cluster normalizers.
ExactStep exact_blocked_filter_step(const ExactDistribution& prev, int t,
                                    const FiniteInstance& instance,
                                    const ClusterPartition& partition);

struct ExactRun {
  std::vector<ExactDistribution> filters;  // index t-1
  double log_likelihood = 0.0;
};

ExactRun run_exact_filter(const FiniteInstance& instance);
ExactRun run_exact_cluster_filter(const FiniteInstance& instance, const ClusterPartition& partition);
ExactRun run_exact_blocked_filter(const FiniteInstance& instance, const ClusterPartition& partition);

double exact_marginal_loglik(const FiniteInstance& instance);

/// sup_{|h| <= 1, h depending on x^J} |rho(h) - rho'(h)|, i.e. the L1
/// distance of the J-marginals. Values lie in [0, 2].
double local_total_variation(const ExactDistribution& rho, const ExactDistribution& rho_prime,
                             std::span<const VertexId> j);

/// Model adapter so the particle filters can run on a finite instance.
class FiniteModel final : public Model {
 public:
  explicit FiniteModel(FiniteInstance instance);

  const FiniteInstance& instance() const { return instance_; }

  std::size_t universe_size() const override { return instance_.num_vertices(); }
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

 private:
  FiniteInstance instance_;
};

}  // namespace vtspf::exact

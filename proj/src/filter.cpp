#include "vtspf/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vtspf/errors.hpp"

namespace vtspf {

namespace {

Identifier union_of(std::span<const LatentConfiguration> particles) {
  std::vector<VertexId> all;
  for (const auto& p : particles) all.insert(all.end(), p.identifier().begin(), p.identifier().end());
  return Identifier(std::move(all));
}

void set_template(ParticleEnsemble& e, ClusterPartition partition, std::size_t universe) {
  e.partition = std::move(partition);
  e.cluster_of = e.partition.cluster_index(universe);
}

std::vector<double> normalize(std::span<const double> log_w, int t, std::size_t cluster) {
  double max = -std::numeric_limits<double>::infinity();
  for (double x : log_w) max = std::max(max, x);
  if (!std::isfinite(max)) throw DegeneracyError(t, cluster);
  std::vector<double> w(log_w.size());
  double sum = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    w[n] = std::exp(log_w[n] - max);
    sum += w[n];
  }
  for (double& x : w) x /= sum;
  return w;
}

std::vector<double> uniform(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<std::size_t> draw_row(std::span<const double> w, std::size_t n, Rng& rng,
                                  ResamplingScheme scheme) {
  std::vector<std::size_t> out(n);
  if (scheme == ResamplingScheme::multinomial) {
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    for (auto& a : out) a = pick(rng);
    return out;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0 / static_cast<double>(n));
  const double start = u(rng);
  double cum = w.empty() ? 0.0 : w[0];
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double point = start + static_cast<double>(i) / static_cast<double>(n);
    while (point > cum && idx + 1 < w.size()) cum += w[++idx];
    out[i] = idx;
  }
  return out;
}

std::vector<LatentConfiguration> resample_joint(const ParticleEnsemble& e, int t,
                                                const RngPolicy& rng, ResamplingScheme scheme) {
  Rng r = rng.stream(t, 0, 0, StreamPurpose::resample);
  const auto anc = draw_row(e.weights.front(), e.size(), r, scheme);
  std::vector<LatentConfiguration> out;
  out.reserve(anc.size());
  for (std::size_t a : anc) out.push_back(e.particles[a]);
  return out;
}

struct Weighted {
  WeightTable table;
  ClusterPartition partition;
  std::vector<std::size_t> cluster_of;
};

Weighted propagate_and_weigh(const std::vector<LatentConfiguration>& resampled,
                             const ObservationFrame& y, const Identifier* observed,
                             const StepContext& ctx, const RngPolicy& rng,
                             const StepOptions& options, std::vector<LatentConfiguration>& out) {
  out.resize(resampled.size());
  kernels::propagate(ctx, resampled, observed, rng, out, options.execution);
  Weighted w;
  w.partition = observed ? options.partitioner(*observed, options.cluster_size)
                         : options.partitioner(union_of(out), options.cluster_size);
  w.cluster_of = w.partition.cluster_index(ctx.model.universe_size());
  w.table = kernels::log_weights(ctx, y, out, w.cluster_of, w.partition.size(), options.execution);
  return w;
}

}  // namespace

std::string to_string(Algorithm a) { return a == Algorithm::spf ? "spf" : "pf"; }

std::size_t ParticleEnsemble::row_of(VertexId v) const {
  if (joint || weights.size() == 1) return 0;
  const std::size_t j = v < cluster_of.size() ? cluster_of[v] : ClusterPartition::npos;
  return j == ClusterPartition::npos ? 0 : j;
}

double effective_sample_size(std::span<const double> normalized) {
  double sq = 0.0;
  for (double w : normalized) sq += w * w;
  return 1.0 / sq;
}

double log_mean_exp(std::span<const double> log_weights, int t, std::size_t cluster) {
  double max = -std::numeric_limits<double>::infinity();
  for (double x : log_weights) max = std::max(max, x);
  if (!std::isfinite(max)) throw DegeneracyError(t, cluster);
  double sum = 0.0;
  for (double x : log_weights) sum += std::exp(x - max);
  return max + std::log(sum) - std::log(static_cast<double>(log_weights.size()));
}

double spf_loglik_increment(const WeightTable& table, int t) {
  double acc = 0.0;
  for (std::size_t j = 0; j < table.clusters; ++j) acc += log_mean_exp(table.row(j), t, j);
  return acc;
}

double pf_loglik_increment(const WeightTable& table, int t) {
  return log_mean_exp(table.joint_log, t, 0);
}

ParticleEnsemble initial_ensemble(const Model& model, std::size_t n, const RngPolicy& rng,
                                  const StepOptions& options, Algorithm algorithm) {
  if (n == 0) throw DomainError("particle count must be positive");
  ParticleEnsemble e;
  e.t = 0;
  e.particles.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng r = rng.stream(0, i, 0, StreamPurpose::initial);
    e.particles.push_back(model.sample_initial(r));
  }
  set_template(e, options.partitioner(union_of(e.particles), options.cluster_size),
               model.universe_size());
  e.joint = algorithm == Algorithm::pf;
  const std::size_t rows = e.joint ? 1 : std::max<std::size_t>(1, e.partition.size());
  e.weights.assign(rows, uniform(n));
  return e;
}

std::vector<std::vector<std::size_t>> draw_ancestors(const ParticleEnsemble& ensemble, int t,
                                                     const RngPolicy& rng,
                                                     ResamplingScheme scheme) {
  std::vector<std::vector<std::size_t>> anc(ensemble.weights.size());
  for (std::size_t j = 0; j < anc.size(); ++j) {
    Rng r = rng.stream(t, 0, j, StreamPurpose::resample);
    anc[j] = draw_row(ensemble.weights[j], ensemble.size(), r, scheme);
  }
  return anc;
}

std::vector<LatentConfiguration> sample_from_product(const ParticleEnsemble& ensemble, int t,
                                                     const RngPolicy& rng,
                                                     ResamplingScheme scheme, Execution exec) {
  if (ensemble.joint) return resample_joint(ensemble, t, rng, scheme);
  const auto anc = draw_ancestors(ensemble, t, rng, scheme);
  std::vector<LatentConfiguration> out(ensemble.size());
  if (ensemble.partition.size() == 0) {
    for (auto& x : out) x = LatentConfiguration(Identifier{}, ensemble.particles.front().universe_size());
    return out;
  }
  kernels::splice(ensemble.particles, ensemble.partition, anc, out, exec);
  return out;
}

StepOutcome spf_step(const ParticleEnsemble& prev, const ObservationFrame& y,
                     const Identifier* observed, const StepContext& ctx, const RngPolicy& rng,
                     const StepOptions& options) {
  const auto resampled = sample_from_product(prev, ctx.t, rng, options.resampling, options.execution);
  StepOutcome out;
  auto& e = out.ensemble;
  e.t = ctx.t;
  Weighted w = propagate_and_weigh(resampled, y, observed, ctx, rng, options, e.particles);

  out.spf_increment = spf_loglik_increment(w.table, ctx.t);
  out.pf_increment = pf_loglik_increment(w.table, ctx.t);

  e.joint = false;
  e.weights.clear();
  for (std::size_t j = 0; j < w.partition.size(); ++j)
    e.weights.push_back(normalize(w.table.row(j), ctx.t, j));
  if (e.weights.empty()) e.weights.push_back(uniform(e.size()));
  e.partition = std::move(w.partition);
  e.cluster_of = std::move(w.cluster_of);
  return out;
}

StepOutcome pf_step(const ParticleEnsemble& prev, const ObservationFrame& y,
                    const Identifier* observed, const StepContext& ctx, const RngPolicy& rng,
                    const StepOptions& options) {
  const auto resampled = resample_joint(prev, ctx.t, rng, options.resampling);
  StepOutcome out;
  auto& e = out.ensemble;
  e.t = ctx.t;
  Weighted w = propagate_and_weigh(resampled, y, observed, ctx, rng, options, e.particles);

  out.pf_increment = pf_loglik_increment(w.table, ctx.t);
  out.spf_increment = spf_loglik_increment(w.table, ctx.t);

  e.joint = true;
  e.weights = {normalize(w.table.joint_log, ctx.t, 0)};
  e.partition = std::move(w.partition);
  e.cluster_of = std::move(w.cluster_of);
  return out;
}

FilterOutput run_filter(const Model& model, const SpatialLayout& layout,
                        const RegionalPartition& regions,
                        std::span<const ObservationFrame> observations,
                        std::span<const Identifier> observed, const FilterConfig& config) {
  if (!observed.empty() && observed.size() != observations.size())
    throw DomainError("observed identifiers must align with observations");
  if (layout.size() != model.universe_size()) throw DomainError("layout does not match model universe");

  const auto started = std::chrono::steady_clock::now();
  const RngPolicy rng(config.seed);
  const Neighborhoods neighborhoods(layout, config.radius);
  FilterOutput out;
  if (observations.empty()) return out;

  ParticleEnsemble ensemble =
      initial_ensemble(model, config.particles, rng, config.step, config.algorithm);
  const std::size_t m = model.universe_size();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const int t = static_cast<int>(i) + 1;
    const StepContext ctx{model, neighborhoods, regions, t};
    const Identifier* k = observed.empty() ? nullptr : &observed[i];
    StepOutcome step = config.algorithm == Algorithm::spf
                           ? spf_step(ensemble, observations[i], k, ctx, rng, config.step)
                           : pf_step(ensemble, observations[i], k, ctx, rng, config.step);
    ensemble = std::move(step.ensemble);
    out.spf_increments.push_back(step.spf_increment);
    out.pf_increments.push_back(step.pf_increment);
    out.spf_total += step.spf_increment;
    out.pf_total += step.pf_increment;

    std::vector<double> ess;
    for (const auto& w : ensemble.weights) ess.push_back(effective_sample_size(w));
    out.ess.push_back(std::move(ess));

    std::vector<double> means(m, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t v = 0; v < m; ++v) {
      const auto id = static_cast<VertexId>(v);
      const auto w = ensemble.weights_for(id);
      double num = 0.0, den = 0.0;
      for (std::size_t n = 0; n < ensemble.size(); ++n) {
        const auto& x = ensemble.particles[n];
        if (!x.contains(id)) continue;
        num += w[n] * model.summary(x.raw(id));
        den += w[n];
      }
      if (den > 0.0) means[v] = num / den;
    }
    out.posterior_means.push_back(std::move(means));

    if (config.budget &&
        std::chrono::steady_clock::now() - started > *config.budget) {
      throw BudgetExceeded(t);
    }
  }
  return out;
}

}  // namespace vtspf

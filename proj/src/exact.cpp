#include "vtspf/exact.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "vtspf/errors.hpp"

namespace vtspf::exact {

namespace {

using nlohmann::json;

/// Extended symbols of every atom, atoms x vertices.
std::vector<std::size_t> symbol_table(const ExactDistribution& d) {
  std::vector<std::size_t> out(d.atoms() * d.vertices());
  for (std::size_t a = 0; a < d.atoms(); ++a)
    for (std::size_t v = 0; v < d.vertices(); ++v) out[a * d.vertices() + v] = d.symbol(a, v);
  return out;
}

/// g * f~ over the given vertices for one atom (symbols of that atom).
double local_weight(const FiniteInstance& inst, const Neighborhoods& nb, int t,
                    const std::size_t* sym, std::span<const VertexId> vertices) {
  const auto& y = inst.observations[static_cast<std::size_t>(t - 1)];
  double w = 1.0;
  for (VertexId v : vertices) {
    if (sym[v] == 0) continue;
    const std::size_t s = sym[v] - 1;
    w *= inst.g(s, y[v]);
    for (VertexId u : nb.ball(v))
      if (sym[u] != 0) w *= inst.pair(s, sym[u] - 1);
  }
  return w;
}

std::vector<VertexId> all_vertices(std::size_t m) {
  std::vector<VertexId> v(m);
  std::iota(v.begin(), v.end(), VertexId{0});
  return v;
}

void require_cover(const ClusterPartition& p, std::size_t m) {
  const auto idx = p.cluster_index(m);
  std::size_t count = 0;
  for (const auto& b : p.clusters) count += b.size();
  for (std::size_t v = 0; v < m; ++v)
    if (idx[v] == ClusterPartition::npos) throw DomainError("cluster partition must cover every vertex");
  if (count != m) throw DomainError("cluster partition has overlapping clusters");
}

std::vector<double> flatten(const json& rows, const char* name) {
  std::vector<double> out;
  if (!rows.is_array()) throw DomainError(std::string(name) + " must be an array");
  for (const auto& r : rows) {
    if (r.is_array()) for (const auto& x : r) out.push_back(x.get<double>());
    else out.push_back(r.get<double>());
  }
  return out;
}

}  // namespace

void FiniteInstance::validate() const {
  const std::size_t m = num_vertices();
  if (m == 0 || m > kMaxVertices) throw DomainError("finite instance needs 1..5 vertices");
  if (num_states == 0 || num_states > kMaxStates) throw DomainError("finite instance needs 1..4 states");
  if (num_symbols == 0) throw DomainError("observation alphabet is empty");
  if (observations.size() > kMaxHorizon) throw DomainError("finite instance horizon is capped at 4");
  regions.validate(m);
  const std::size_t s = num_states;
  if (enter.size() != s || stay.size() != s * s || interaction.size() != s * s ||
      emission.size() != s * num_symbols)
    throw DomainError("table shapes do not match the alphabets");
  for (const auto* table : {&enter, &stay, &interaction, &emission})
    for (double x : *table)
      if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("tables must be strictly positive");
  auto row_sum_one = [](std::span<const double> row) {
    return std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) < 1e-9;
  };
  if (!row_sum_one(enter)) throw DomainError("enter table must sum to one");
  for (std::size_t a = 0; a < s; ++a) {
    if (!row_sum_one(std::span(stay).subspan(a * s, s))) throw DomainError("stay rows must sum to one");
    if (!row_sum_one(std::span(emission).subspan(a * num_symbols, num_symbols)))
      throw DomainError("emission rows must sum to one");
    for (std::size_t b = 0; b < s; ++b)
      if (pair(a, b) != pair(b, a)) throw DomainError("interaction table must be symmetric");
  }
  if (!(p_enter >= 0.0 && p_enter <= 1.0 && p_stay >= 0.0 && p_stay <= 1.0))
    throw DomainError("enter/stay probabilities outside [0,1]");
  if (initial_states.size() != m) throw DomainError("initial_states must cover every vertex");
  for (VertexId v : initial_identifier) {
    if (v >= m) throw DomainError("initial identifier outside universe");
    if (initial_states[v] >= s) throw DomainError("initial state outside alphabet");
  }
  for (const auto& y : observations) {
    if (y.size() != m) throw DomainError("each observation row must cover every vertex");
    for (std::size_t sym : y)
      if (sym >= num_symbols) throw DomainError("observation symbol outside alphabet");
  }
}

ObservationFrame FiniteInstance::observation_frame(int t) const {
  ObservationFrame y(num_vertices());
  const auto& row = observations.at(static_cast<std::size_t>(t - 1));
  for (std::size_t v = 0; v < row.size(); ++v) y.set(static_cast<VertexId>(v), static_cast<double>(row[v]));
  return y;
}

FiniteInstance parse_instance_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(std::string("instance is not valid JSON: ") + e.what());
  }
  try {
    FiniteInstance inst;
    const auto m = j.at("vertices").get<std::size_t>();
    inst.num_states = j.at("states").get<std::size_t>();
    inst.num_symbols = j.at("symbols").get<std::size_t>();
    std::vector<std::uint8_t> adj;
    for (const auto& row : j.at("adjacency"))
      for (const auto& x : row) adj.push_back(x.get<std::uint8_t>());
    inst.layout = SpatialLayout::from_adjacency(m, adj);
    inst.radius = j.value("radius", 1.0);
    if (j.contains("regions")) {
      inst.regions.regions = j.at("regions").get<std::vector<std::vector<VertexId>>>();
    } else {
      inst.regions = RegionalPartition::singletons(m);
    }
    inst.enter = flatten(j.at("enter"), "enter");
    inst.stay = flatten(j.at("stay"), "stay");
    inst.interaction = flatten(j.at("interaction"), "interaction");
    inst.emission = flatten(j.at("emission"), "emission");
    inst.p_enter = j.at("p_enter").get<double>();
    inst.p_stay = j.at("p_stay").get<double>();
    inst.initial_identifier = Identifier(j.at("initial_identifier").get<std::vector<VertexId>>());
    inst.initial_states = j.at("initial_states").get<std::vector<std::size_t>>();
    inst.observations = j.at("observations").get<std::vector<std::vector<std::size_t>>>();
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed instance: ") + e.what());
  }
}

FiniteInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance_json(ss.str());
}

std::string to_json(const FiniteInstance& inst) {
  const std::size_t m = inst.num_vertices();
  const std::size_t s = inst.num_states;
  json j;
  j["vertices"] = m;
  j["states"] = s;
  j["symbols"] = inst.num_symbols;
  json adj = json::array();
  for (std::size_t a = 0; a < m; ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < m; ++b)
      row.push_back(inst.layout.adjacent(static_cast<VertexId>(a), static_cast<VertexId>(b)) ? 1 : 0);
    adj.push_back(row);
  }
  j["adjacency"] = adj;
  j["radius"] = inst.radius;
  j["regions"] = inst.regions.regions;
  auto rows = [](const std::vector<double>& flat, std::size_t width) {
    json out = json::array();
    for (std::size_t i = 0; i < flat.size(); i += width)
      out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i),
                                        flat.begin() + static_cast<std::ptrdiff_t>(i + width)));
    return out;
  };
  j["enter"] = inst.enter;
  j["stay"] = rows(inst.stay, s);
  j["interaction"] = rows(inst.interaction, s);
  j["emission"] = rows(inst.emission, inst.num_symbols);
  j["p_enter"] = inst.p_enter;
  j["p_stay"] = inst.p_stay;
  j["initial_identifier"] = std::vector<VertexId>(inst.initial_identifier.begin(), inst.initial_identifier.end());
  j["initial_states"] = inst.initial_states;
  j["observations"] = inst.observations;
  return j.dump(2);
}

ExactDistribution::ExactDistribution(std::size_t vertices, std::size_t states)
    : vertices_(vertices), states_(states) {
  std::size_t n = 1;
  stride_.resize(vertices);
  for (std::size_t v = 0; v < vertices; ++v) {
    stride_[v] = n;
    n *= states + 1;
  }
  prob_.assign(n, 0.0);
}

std::size_t ExactDistribution::symbol(std::size_t atom, std::size_t v) const {
  return (atom / stride_[v]) % base();
}

std::size_t ExactDistribution::encode(std::span<const std::size_t> symbols) const {
  std::size_t a = 0;
  for (std::size_t v = 0; v < vertices_; ++v) a += symbols[v] * stride_[v];
  return a;
}

std::size_t ExactDistribution::encode(const Identifier& k, std::span<const std::size_t> states) const {
  std::vector<std::size_t> sym(vertices_, 0);
  for (VertexId v : k) sym[v] = states[v] + 1;
  return encode(sym);
}

double ExactDistribution::probability(const Identifier& k, std::span<const std::size_t> states) const {
  return prob_[encode(k, states)];
}

std::vector<double> ExactDistribution::marginal(std::span<const VertexId> j) const {
  std::size_t size = 1;
  for (std::size_t i = 0; i < j.size(); ++i) size *= base();
  std::vector<double> out(size, 0.0);
  for (std::size_t a = 0; a < prob_.size(); ++a) {
    if (prob_[a] == 0.0) continue;
    std::size_t idx = 0, mult = 1;
    for (VertexId v : j) {
      idx += symbol(a, v) * mult;
      mult *= base();
    }
    out[idx] += prob_[a];
  }
  return out;
}

double ExactDistribution::total() const { return std::accumulate(prob_.begin(), prob_.end(), 0.0); }

ExactDistribution initial_distribution(const FiniteInstance& inst) {
  inst.validate();
  ExactDistribution d(inst.num_vertices(), inst.num_states);
  d[d.encode(inst.initial_identifier, inst.initial_states)] = 1.0;
  return d;
}

ExactDistribution predict(const ExactDistribution& prev, const FiniteInstance& inst) {
  const std::size_t m = inst.num_vertices();
  const std::size_t b = prev.base();
  // per-vertex kernel over extended symbols: p(activity) * f(state)
  std::vector<double> kernel(b * b, 0.0);
  kernel[0] = 1.0 - inst.p_enter;
  for (std::size_t s = 0; s < inst.num_states; ++s) kernel[s + 1] = inst.p_enter * inst.f_enter(s);
  for (std::size_t sp = 0; sp < inst.num_states; ++sp) {
    kernel[(sp + 1) * b] = 1.0 - inst.p_stay;
    for (std::size_t s = 0; s < inst.num_states; ++s)
      kernel[(sp + 1) * b + s + 1] = inst.p_stay * inst.f_stay(sp, s);
  }
  const auto sym = symbol_table(prev);
  ExactDistribution out(m, inst.num_states);
  for (std::size_t from = 0; from < prev.atoms(); ++from) {
    const double p = prev[from];
    if (p == 0.0) continue;
    const std::size_t* sf = &sym[from * m];
    for (std::size_t to = 0; to < out.atoms(); ++to) {
      const std::size_t* st = &sym[to * m];
      double k = p;
      for (std::size_t v = 0; v < m; ++v) k *= kernel[sf[v] * b + st[v]];
      out[to] += k;
    }
  }
  return out;
}

ExactStep correct(const ExactDistribution& predicted, int t, const FiniteInstance& inst) {
  const std::size_t m = inst.num_vertices();
  const Neighborhoods nb(inst.layout, inst.radius);
  const auto sym = symbol_table(predicted);
  const auto everyone = all_vertices(m);
  ExactStep step{ExactDistribution(m, inst.num_states), 0.0};
  double z = 0.0;
  for (std::size_t a = 0; a < predicted.atoms(); ++a) {
    if (predicted[a] == 0.0) continue;
    const double w = predicted[a] * local_weight(inst, nb, t, &sym[a * m], everyone);
    step.distribution[a] = w;
    z += w;
  }
  if (!(z > 0.0)) throw DomainError("correction normalizer vanished");
  for (std::size_t a = 0; a < predicted.atoms(); ++a) step.distribution[a] /= z;
  step.log_normalizer = std::log(z);
  return step;
}

ExactDistribution cluster_product(const ExactDistribution& rho, const ClusterPartition& partition) {
  const std::size_t m = rho.vertices();
  require_cover(partition, m);
  std::vector<std::vector<double>> marg;
  for (const auto& c : partition.clusters) marg.push_back(rho.marginal(c));
  ExactDistribution out(m, rho.states());
  for (std::size_t a = 0; a < out.atoms(); ++a) {
    double p = 1.0;
    for (std::size_t j = 0; j < partition.size(); ++j) {
      std::size_t idx = 0, mult = 1;
      for (VertexId v : partition.clusters[j]) {
        idx += rho.symbol(a, v) * mult;
        mult *= rho.base();
      }
      p *= marg[j][idx];
    }
    out[a] = p;
  }
  return out;
}

ExactStep exact_filter_step(const ExactDistribution& prev, int t, const FiniteInstance& inst) {
  return correct(predict(prev, inst), t, inst);
}

ExactStep exact_cluster_filter_step(const ExactDistribution& prev, int t,
                                    const FiniteInstance& inst, const ClusterPartition& partition) {
  return correct(cluster_product(predict(prev, inst), partition), t, inst);
}

ExactStep exact_blocked_filter_step(const ExactDistribution& prev, int t,
                                    const FiniteInstance& inst, const ClusterPartition& partition) {
  const std::size_t m = inst.num_vertices();
  require_cover(partition, m);
  const ExactDistribution rho = predict(prev, inst);
  const Neighborhoods nb(inst.layout, inst.radius);
  const auto sym = symbol_table(rho);
  ExactStep step{ExactDistribution(m, inst.num_states), 0.0};

  std::vector<std::vector<double>> marg;
  for (const auto& cluster : partition.clusters) {
    ExactDistribution weighted(m, inst.num_states);
    double z = 0.0;
    for (std::size_t a = 0; a < rho.atoms(); ++a) {
      if (rho[a] == 0.0) continue;
      weighted[a] = rho[a] * local_weight(inst, nb, t, &sym[a * m], cluster);
      z += weighted[a];
    }
    if (!(z > 0.0)) throw DomainError("cluster normalizer vanished");
    step.log_normalizer += std::log(z);
    auto mg = weighted.marginal(cluster);
    for (double& x : mg) x /= z;
    marg.push_back(std::move(mg));
  }
  for (std::size_t a = 0; a < step.distribution.atoms(); ++a) {
    double p = 1.0;
    for (std::size_t j = 0; j < partition.size(); ++j) {
      std::size_t idx = 0, mult = 1;
      for (VertexId v : partition.clusters[j]) {
        idx += step.distribution.symbol(a, v) * mult;
        mult *= step.distribution.base();
      }
      p *= marg[j][idx];
    }
    step.distribution[a] = p;
  }
  return step;
}

namespace {

template <typename Step>
ExactRun run(const FiniteInstance& inst, Step&& step) {
  ExactRun out;
  ExactDistribution current = initial_distribution(inst);
  for (int t = 1; t <= inst.horizon(); ++t) {
    ExactStep s = step(current, t);
    out.log_likelihood += s.log_normalizer;
    current = s.distribution;
    out.filters.push_back(std::move(s.distribution));
  }
  return out;
}

}  // namespace

ExactRun run_exact_filter(const FiniteInstance& inst) {
  return run(inst, [&](const ExactDistribution& d, int t) { return exact_filter_step(d, t, inst); });
}

ExactRun run_exact_cluster_filter(const FiniteInstance& inst, const ClusterPartition& partition) {
  return run(inst, [&](const ExactDistribution& d, int t) {
    return exact_cluster_filter_step(d, t, inst, partition);
  });
}

ExactRun run_exact_blocked_filter(const FiniteInstance& inst, const ClusterPartition& partition) {
  return run(inst, [&](const ExactDistribution& d, int t) {
    return exact_blocked_filter_step(d, t, inst, partition);
  });
}

double exact_marginal_loglik(const FiniteInstance& inst) { return run_exact_filter(inst).log_likelihood; }

double local_total_variation(const ExactDistribution& rho, const ExactDistribution& rho_prime,
                             std::span<const VertexId> j) {
  if (rho.vertices() != rho_prime.vertices() || rho.states() != rho_prime.states())
    throw DomainError("distributions belong to different instances");
  const auto a = rho.marginal(j);
  const auto b = rho_prime.marginal(j);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

FiniteModel::FiniteModel(FiniteInstance instance) : instance_(std::move(instance)) {
  instance_.validate();
}

double FiniteModel::log_region_transition(int, std::span<const VertexId> region,
                                          const Identifier& next,
                                          const LatentConfiguration& prev) const {
  double acc = 0.0;
  for (VertexId v : region) {
    const double p = prev.contains(v) ? instance_.p_stay : instance_.p_enter;
    acc += std::log(next.contains(v) ? p : 1.0 - p);
  }
  return acc;
}

Identifier FiniteModel::sample_identifier(int, const LatentConfiguration& prev,
                                          const RegionalPartition&, Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<VertexId> next;
  for (std::size_t v = 0; v < universe_size(); ++v) {
    const auto id = static_cast<VertexId>(v);
    const double p = prev.contains(id) ? instance_.p_stay : instance_.p_enter;
    if (u(rng) < p) next.push_back(id);
  }
  return Identifier(std::move(next));
}

double FiniteModel::log_transition(int, VertexId, const Identifier&, const VertexState& x,
                                   const std::optional<VertexState>& ancestor) const {
  const auto s = static_cast<std::size_t>(x.first);
  if (ancestor) return std::log(instance_.f_stay(static_cast<std::size_t>(ancestor->first), s));
  return std::log(instance_.f_enter(s));
}

VertexState FiniteModel::sample_transition(int, VertexId, const Identifier&,
                                           const std::optional<VertexState>& ancestor,
                                           Rng& rng) const {
  const std::size_t s = instance_.num_states;
  std::span<const double> row = instance_.enter;
  if (ancestor) row = std::span(instance_.stay).subspan(static_cast<std::size_t>(ancestor->first) * s, s);
  std::discrete_distribution<std::size_t> pick(row.begin(), row.end());
  return {static_cast<double>(pick(rng)), 0.0};
}

double FiniteModel::log_interaction(int, VertexId v, const LatentConfiguration& x,
                                    std::span<const VertexId> neighbors) const {
  const auto s = static_cast<std::size_t>(x.raw(v).first);
  double acc = 0.0;
  for (VertexId w : neighbors) acc += std::log(instance_.pair(s, static_cast<std::size_t>(x.raw(w).first)));
  return acc;
}

double FiniteModel::log_observation(int, VertexId, double y, const VertexState& x) const {
  return std::log(instance_.g(static_cast<std::size_t>(x.first), static_cast<std::size_t>(y)));
}

LatentConfiguration FiniteModel::sample_initial(Rng&) const {
  LatentConfiguration x(instance_.initial_identifier, universe_size());
  for (VertexId v : instance_.initial_identifier)
    x.raw(v) = {static_cast<double>(instance_.initial_states[v]), 0.0};
  return x;
}

}  // namespace vtspf::exact

// vtspf: simulate CAR datasets, run the particle filters, sweep spatial
// dimensions, evaluate error bounds and check filters against the exact oracle.

#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include "vtspf/bounds.hpp"
#include "vtspf/car.hpp"
#include "vtspf/errors.hpp"
#include "vtspf/exact.hpp"
#include "vtspf/filter.hpp"
#include "vtspf/scenario.hpp"

using namespace vtspf;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kDegenerate = 4 };

/// Flags mirroring ScenarioConfig, applied over an optional config file.
struct ScenarioFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool record_runtime = false;

  void attach(CLI::App& app, std::initializer_list<const char*> keys) {
    app.add_option("--config", config_path, "key=value file; flags override it");
    for (const char* key : keys) {
      options[key] = app.add_option(std::string("--") + key, values[key]);
    }
  }

  ScenarioConfig resolve(ScenarioConfig base = {}) const {
    ScenarioConfig c = config_path.empty() ? base : load_config_file(config_path, base);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) apply_setting(c, key, values.at(key));
    if (record_runtime) c.record_runtime = true;
    c.validate();
    return c;
  }
};

void set_threads(int threads) {
  if (threads < 0) throw ConfigError("--threads must be non-negative");
  if (threads > 0) omp_set_num_threads(threads);
}

Algorithm algorithm_from(const std::string& s) {
  if (s == "spf") return Algorithm::spf;
  if (s == "pf") return Algorithm::pf;
  throw ConfigError("unknown algorithm '" + s + "'");
}

SpatialLayout layout_from(const std::string& adjacency, std::size_t dim) {
  if (adjacency == "complete") return SpatialLayout::complete(dim);
  SpatialLayout base = load_adjacency_csv(adjacency);
  if (dim > base.size()) throw ConfigError("dim exceeds adjacency size");
  return dim == base.size() ? base : base.leading_block(dim);
}

int cmd_simulate(const ScenarioConfig& c) {
  const std::size_t dim = c.dims.front();
  const SpatialLayout layout = layout_from(c.adjacency, dim);
  const car::CarParams params = scenario_params(c, c.seed);
  const car::CarTrajectory traj =
      car::simulate_dataset(params, layout, c.T, cell_seeds(c.seed, dim).data);
  car::write_trajectory_csv(traj, c.out);
  car::write_params(params, c.out + ".params");
  std::cout << "wrote " << c.out << " and " << c.out << ".params\n";
  return kOk;
}

struct FilterArgs {
  std::string data;
  std::string params;
  std::string algorithm = "spf";
  bool latent = false;
};

int cmd_filter(const ScenarioConfig& c, const FilterArgs& a) {
  if (a.data.empty()) throw ConfigError("--data is required");
  const car::CarTrajectory traj = car::read_trajectory_csv(a.data);
  const car::CarParams params = car::read_params(a.params.empty() ? a.data + ".params" : a.params);
  params.validate(static_cast<int>(traj.observations.size()));
  const SpatialLayout layout = layout_from(c.adjacency, traj.universe);
  const car::CarModel model(params, layout);

  FilterConfig fc;
  fc.algorithm = algorithm_from(a.algorithm);
  fc.particles = c.N;
  fc.radius = c.r;
  fc.seed = c.seed;
  fc.step.cluster_size = c.cluster_size;
  if (c.budget_ms) fc.budget = std::chrono::milliseconds(*c.budget_ms);
  std::span<const Identifier> observed;
  if (!a.latent) observed = {traj.identifiers.data() + 1, traj.observations.size()};

  const FilterOutput out = run_filter(model, layout, RegionalPartition::singletons(traj.universe),
                                      traj.observations, observed, fc);
  std::ofstream csv(c.out, std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot open " + c.out);
  csv << "t,pf_increment,spf_increment,min_ess\n";
  csv.precision(17);
  for (std::size_t i = 0; i < out.pf_increments.size(); ++i) {
    double ess = out.ess[i].empty() ? 0.0 : out.ess[i].front();
    for (double e : out.ess[i]) ess = std::min(ess, e);
    csv << i + 1 << ',' << out.pf_increments[i] << ',' << out.spf_increments[i] << ',' << ess << '\n';
  }
  std::cout.precision(10);
  std::cout << "pf_loglik: " << out.pf_total << "\nspf_loglik: " << out.spf_total
            << "\nscaled_pf_loglik: " << out.scaled_pf(static_cast<double>(traj.universe))
            << "\nscaled_spf_loglik: " << out.scaled_spf(static_cast<double>(traj.universe)) << '\n';
  return kOk;
}

int cmd_bench(const ScenarioConfig& c) {
  const auto rows = run_scenario(c);
  write_results(rows, c.out);
  bool degenerate = false;
  for (const auto& r : rows) degenerate = degenerate || r.degenerate != Degenerate::no;
  std::cout << "wrote " << rows.size() << " rows to " << c.out << '\n';
  return degenerate ? kDegenerate : kOk;
}

struct BoundsArgs {
  std::string instance;
  std::string car_params;
  std::size_t cluster_size = 1;
  std::size_t particles = 100;
  std::size_t card_j = 1;
  double distance = 1.0;
  std::vector<double> densities;  // eps_d eps_u epsp_d epsp_u gamma_d gamma_u kappa_d kappa_u
  std::vector<double> graph;      // r max_degree max_region_size max_region_diameter max_cluster_size
  std::vector<double> box;        // phi_lo phi_hi varphi_lo varphi_hi y_lo y_hi
  std::size_t max_neighbors = 1;
  int time = 1;
  bool csv = false;
};

int cmd_bounds(const BoundsArgs& a) {
  BoundInputs in;
  in.particles = a.particles;
  in.card_j = a.card_j;
  in.min_boundary_distance = a.distance;
  std::string caveat;
  if (!a.instance.empty()) {
    const exact::FiniteInstance inst = exact::load_instance(a.instance);
    in.densities = empirical_bounds_for_instance(inst);
    const Identifier all = Identifier::universe(inst.num_vertices());
    const ClusterPartition clusters = build_cluster_partition(all, a.cluster_size);
    const std::vector<Identifier> ks(static_cast<std::size_t>(inst.horizon()) + 1, all);
    const std::vector<ClusterPartition> cs(ks.size(), clusters);
    in.graph = graph_quantities(inst.layout, inst.regions, ks, cs, inst.radius);
  } else if (!a.car_params.empty()) {
    const car::CarParams p = car::read_params(a.car_params);
    CarBox box;
    if (!a.box.empty()) {
      if (a.box.size() != 6) throw ConfigError("--box takes 6 values");
      box = {a.box[0], a.box[1], a.box[2], a.box[3], a.box[4], a.box[5]};
    }
    const CarParamsView view{p.rho_spatial, p.rho_temporal, p.sigma2, p.sigma2_tilde_at(a.time),
                             p.nu2, p.obs_model == car::ObservationModel::poisson,
                             p.p_enter, p.p_stay, a.max_neighbors, 1};
    in.densities = car_truncated_bounds(view, box);
    in.graph.max_degree = a.max_neighbors + 1;
    in.graph.max_cluster_size = a.cluster_size;
    caveat = kCarCaveat;
  } else {
    if (a.densities.size() != 8) throw ConfigError("--densities takes 8 values");
    in.densities = {a.densities[0], a.densities[1], a.densities[2], a.densities[3],
                    a.densities[4], a.densities[5], a.densities[6], a.densities[7]};
  }
  if (!a.graph.empty()) {
    if (a.graph.size() != 5) throw ConfigError("--graph takes 5 values");
    in.graph.r = a.graph[0];
    in.graph.max_degree = static_cast<std::size_t>(a.graph[1]);
    in.graph.max_region_size = static_cast<std::size_t>(a.graph[2]);
    in.graph.max_region_diameter = a.graph[3];
    in.graph.max_cluster_size = static_cast<std::size_t>(a.graph[4]);
  }
  BoundReport report = make_report(in);
  report.caveat = caveat;
  if (a.csv) {
    std::cout << report_csv_header() << '\n' << report_csv_row(report) << '\n';
  } else {
    std::cout << format_report(report);
  }
  return kOk;
}

struct OracleArgs {
  std::string instance;
  std::size_t particles = 20000;
  std::size_t cluster_size = 1;
  std::uint64_t seed = 1;
};

int cmd_oracle_check(const OracleArgs& a) {
  if (a.instance.empty()) throw ConfigError("--instance is required");
  const exact::FiniteInstance inst = exact::load_instance(a.instance);
  const std::size_t m = inst.num_vertices();
  const ClusterPartition clusters = build_cluster_partition(Identifier::universe(m), a.cluster_size);
  const auto exact_run = exact::run_exact_filter(inst);
  const auto cluster_run = exact::run_exact_cluster_filter(inst, clusters);
  const auto blocked_run = exact::run_exact_blocked_filter(inst, clusters);

  const exact::FiniteModel model(inst);
  std::vector<ObservationFrame> ys;
  for (int t = 1; t <= inst.horizon(); ++t) ys.push_back(inst.observation_frame(t));
  FilterConfig fc;
  fc.particles = a.particles;
  fc.radius = inst.radius;
  fc.seed = a.seed;
  fc.step.cluster_size = a.cluster_size;
  fc.step.partitioner = [m](const Identifier&, std::size_t c) {
    return build_cluster_partition(Identifier::universe(m), c);
  };
  FilterConfig pf = fc;
  pf.algorithm = Algorithm::pf;
  const FilterOutput spf_out = run_filter(model, inst.layout, inst.regions, ys, {}, fc);
  const FilterOutput pf_out = run_filter(model, inst.layout, inst.regions, ys, {}, pf);

  std::cout.precision(8);
  std::cout << "exact_loglik: " << exact_run.log_likelihood
            << "\npf_loglik: " << pf_out.pf_total << "\nspf_loglik: " << spf_out.spf_total
            << "\nblocked_limit_loglik: " << blocked_run.log_likelihood << '\n';
  const auto& pi = exact_run.filters.back();
  const auto& cl = cluster_run.filters.back();
  const auto& bl = blocked_run.filters.back();
  for (std::size_t v = 0; v < m; ++v) {
    const VertexId j[] = {static_cast<VertexId>(v)};
    std::cout << "vertex " << v << ": tv(cluster, exact) = "
              << exact::local_total_variation(cl, pi, j)
              << ", tv(blocked, exact) = " << exact::local_total_variation(bl, pi, j) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scalable particle filtering for variable-dimension spatiotemporal MRFs"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP worker count (0 = runtime default)");

  const auto scenario_keys = {"T", "N", "dims", "cluster-size", "obs-model", "p-enter", "p-stay",
                              "adjacency", "coordinates", "r", "seed", "out", "replicates",
                              "algorithms", "loglik-methods", "budget-ms", "nu2", "scenario"};

  ScenarioFlags sim_flags, filter_flags, bench_flags;
  auto* sim = app.add_subcommand("simulate", "simulate a CAR dataset (first of --dims)");
  sim_flags.attach(*sim, scenario_keys);

  FilterArgs fargs;
  auto* filt = app.add_subcommand("filter", "run SPF or PF on a simulated dataset");
  filter_flags.attach(*filt, scenario_keys);
  filt->add_option("--data", fargs.data, "trajectory CSV from `simulate`")->required();
  filt->add_option("--params", fargs.params, "parameter file (default: <data>.params)");
  filt->add_option("--algorithm", fargs.algorithm, "spf or pf");
  filt->add_flag("--latent", fargs.latent, "sample identifiers instead of observing them");

  auto* bench = app.add_subcommand("bench", "sweep spatial dimensions and write the results CSV");
  bench_flags.attach(*bench, scenario_keys);
  bench->add_flag("--record-runtime", bench_flags.record_runtime,
                  "write wall-clock runtimes (output is then not byte-reproducible)");

  BoundsArgs bargs;
  auto* bnd = app.add_subcommand("bounds", "evaluate the assumption, beta and error bounds");
  bnd->add_option("--instance", bargs.instance, "finite instance JSON (table scan)");
  bnd->add_option("--car-params", bargs.car_params, "CAR parameter file (truncated bounds)");
  bnd->add_option("--densities", bargs.densities, "eps_d eps_u epsp_d epsp_u gamma_d gamma_u kappa_d kappa_u")
      ->expected(8);
  bnd->add_option("--graph", bargs.graph, "r max_degree max_region_size max_region_diameter max_cluster_size")
      ->expected(5);
  bnd->add_option("--box", bargs.box, "phi_lo phi_hi varphi_lo varphi_hi y_lo y_hi")->expected(6);
  bnd->add_option("--max-neighbors", bargs.max_neighbors);
  bnd->add_option("--time", bargs.time);
  bnd->add_option("--cluster-size", bargs.cluster_size);
  bnd->add_option("--N", bargs.particles);
  bnd->add_option("--card-j", bargs.card_j);
  bnd->add_option("--distance", bargs.distance, "min boundary distance d(J, dB')");
  bnd->add_flag("--csv", bargs.csv, "print one CSV row instead of key: value lines");

  OracleArgs oargs;
  auto* orc = app.add_subcommand("oracle-check", "compare the particle filters with exact filtering");
  orc->add_option("--instance", oargs.instance)->required();
  orc->add_option("--N", oargs.particles);
  orc->add_option("--cluster-size", oargs.cluster_size);
  orc->add_option("--seed", oargs.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    set_threads(threads);
    if (*sim) return cmd_simulate(sim_flags.resolve());
    if (*filt) return cmd_filter(filter_flags.resolve(), fargs);
    if (*bench) return cmd_bench(bench_flags.resolve());
    if (*bnd) return cmd_bounds(bargs);
    if (*orc) return cmd_oracle_check(oargs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const LoadError& e) {
    std::cerr << "data error: " << e.what();
    if (e.row() != LoadError::npos) std::cerr << " (row " << e.row();
    if (e.col() != LoadError::npos) std::cerr << ", column " << e.col();
    if (e.row() != LoadError::npos) std::cerr << ')';
    std::cerr << '\n';
    return kData;
  } catch (const DegeneracyError& e) {
    std::cerr << e.what() << '\n';
    return kDegenerate;
  } catch (const BudgetExceeded& e) {
    std::cerr << e.what() << '\n';
    return kDegenerate;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const SingularPrecisionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

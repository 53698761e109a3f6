#include "vtspf/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vtspf/errors.hpp"

namespace vtspf {

namespace {

std::string number(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const char* degenerate_label(Degenerate d) {
  switch (d) {
    case Degenerate::yes: return "1";
    case Degenerate::budget: return "budget";
    default: return "0";
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Algorithm parse_algorithm(const std::string& s, std::size_t row) {
  if (s == "spf") return Algorithm::spf;
  if (s == "pf") return Algorithm::pf;
  throw LoadError("unknown algorithm '" + s + "'", row, 2);
}

}  // namespace

SpatialLayout scenario_layout(const ScenarioConfig& config) {
  if (config.adjacency == "complete") {
    const std::size_t m = *std::max_element(config.dims.begin(), config.dims.end());
    return SpatialLayout::complete(m);
  }
  SpatialLayout layout = load_adjacency_csv(config.adjacency);
  if (!config.coordinates.empty())
    layout = layout.with_coordinates(load_coordinates_csv(config.coordinates, layout.size()));
  for (std::size_t d : config.dims)
    if (d > layout.size())
      throw ConfigError("dim " + std::to_string(d) + " exceeds adjacency size " +
                        std::to_string(layout.size()));
  return layout;
}

SpatialLayout layout_for_dim(const ScenarioConfig& config, const SpatialLayout& base, std::size_t dim) {
  if (config.adjacency == "complete") return SpatialLayout::complete(dim);
  return dim == base.size() ? base : base.leading_block(dim);
}

CellSeeds cell_seeds(std::uint64_t master, std::size_t dim) {
  const RngPolicy root(master);
  return {root.derive(dim, 1).seed(), root.derive(dim, 2).seed()};
}

car::CarParams scenario_params(const ScenarioConfig& config, std::uint64_t master) {
  Rng rng = RngPolicy(master).stream(0, 0, 0, StreamPurpose::parameters);
  return car::CarParams::draw(rng, config.T, config.obs_model, config.p_enter, config.p_stay,
                              config.nu2);
}

std::vector<ResultRow> run_scenario(const ScenarioConfig& config) {
  config.validate();
  const SpatialLayout base = scenario_layout(config);
  std::vector<ResultRow> rows;
  for (std::size_t rep = 0; rep < config.replicates; ++rep) {
    const std::uint64_t master = config.seed + rep;
    const car::CarParams params = scenario_params(config, master);
    for (std::size_t dim : config.dims) {
      const SpatialLayout layout = layout_for_dim(config, base, dim);
      const CellSeeds seeds = cell_seeds(master, dim);
      const car::CarTrajectory data = car::simulate_dataset(params, layout, config.T, seeds.data);
      const car::CarModel model(params, layout);
      const RegionalPartition regions = RegionalPartition::singletons(dim);
      const std::span<const Identifier> observed(data.identifiers.data() + 1, data.observations.size());

      for (Algorithm alg : config.algorithms) {
        FilterConfig fc;
        fc.algorithm = alg;
        fc.particles = config.N;
        fc.radius = config.r;
        fc.seed = seeds.filter;
        fc.step.cluster_size = config.cluster_size;
        if (config.budget_ms) fc.budget = std::chrono::milliseconds(*config.budget_ms);

        Degenerate flag = Degenerate::no;
        double spf_total = std::numeric_limits<double>::quiet_NaN();
        double pf_total = spf_total;
        const auto started = std::chrono::steady_clock::now();
        try {
          const FilterOutput out = run_filter(model, layout, regions, data.observations, observed, fc);
          spf_total = out.spf_total;
          pf_total = out.pf_total;
          if (!std::isfinite(spf_total) || !std::isfinite(pf_total)) flag = Degenerate::yes;
        } catch (const DegeneracyError&) {
          flag = Degenerate::yes;
        } catch (const BudgetExceeded&) {
          flag = Degenerate::budget;
        }
        const auto elapsed = std::chrono::steady_clock::now() - started;
        if (flag != Degenerate::no) spf_total = pf_total = std::numeric_limits<double>::quiet_NaN();

        for (Algorithm method : config.loglik_methods) {
          ResultRow row;
          row.scenario = config.scenario;
          row.dim = dim;
          row.algorithm = alg;
          row.loglik_method = method;
          row.total_loglik = method == Algorithm::spf ? spf_total : pf_total;
          row.scaled_loglik = row.total_loglik / static_cast<double>(dim);
          row.runtime_ms = config.record_runtime
                               ? std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count()
                               : 0;
          row.seed = master;
          row.degenerate = flag;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

std::string format_results(const std::vector<ResultRow>& rows) {
  std::string out = kResultsHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.scenario + ',' + std::to_string(r.dim) + ',' + to_string(r.algorithm) + ',' +
           to_string(r.loglik_method) + ',' + number(r.total_loglik) + ',' +
           number(r.scaled_loglik) + ',' + std::to_string(r.runtime_ms) + ',' +
           std::to_string(r.seed) + ',' + degenerate_label(r.degenerate) + '\n';
  }
  return out;
}

void write_results(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << format_results(rows);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<ResultRow> parse_results(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw LoadError("unexpected results header", 0);
  std::vector<ResultRow> rows;
  std::size_t row_no = 0;
  auto to_double = [](const std::string& s) {
    return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
  };
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 9) throw LoadError("expected 9 columns", row_no);
    try {
      ResultRow r;
      r.scenario = cells[0];
      r.dim = std::stoull(cells[1]);
      r.algorithm = parse_algorithm(cells[2], row_no);
      r.loglik_method = parse_algorithm(cells[3], row_no);
      r.total_loglik = to_double(cells[4]);
      r.scaled_loglik = to_double(cells[5]);
      r.runtime_ms = std::stoll(cells[6]);
      r.seed = std::stoull(cells[7]);
      if (cells[8] == "0") r.degenerate = Degenerate::no;
      else if (cells[8] == "1") r.degenerate = Degenerate::yes;
      else if (cells[8] == "budget") r.degenerate = Degenerate::budget;
      else throw LoadError("bad degenerate flag", row_no, 8);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw LoadError("unparseable results row", row_no);
    }
  }
  return rows;
}

std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_results(ss.str());
}

}  // namespace vtspf

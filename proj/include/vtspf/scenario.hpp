#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vtspf/car.hpp"
#include "vtspf/filter.hpp"
#include "vtspf/graph.hpp"

namespace vtspf {

struct ScenarioConfig {
  std::string scenario = "scenario";
  int T = 100;
  std::size_t N = 200;
  std::vector<std::size_t> dims{20, 40, 60, 80};
  std::size_t cluster_size = 2;
  car::ObservationModel obs_model = car::ObservationModel::normal;
  double p_enter = 0.9;
  double p_stay = 0.9;
  double nu2 = 1.0;
  /// "complete" or the path of an adjacency CSV
  std::string adjacency = "complete";
  /// optional "id,x,y" file; switches distances to euclidean
  std::string coordinates;
  double r = 1.0;
  std::uint64_t seed = 1;
  std::vector<Algorithm> algorithms{Algorithm::spf, Algorithm::pf};
  std::vector<Algorithm> loglik_methods{Algorithm::spf, Algorithm::pf};
  std::size_t replicates = 1;
  std::optional<long long> budget_ms;
  bool record_runtime = false;
  std::string out = "results.csv";

  /// Throws ConfigError on non-positive counts or out-of-range probabilities.
  void validate() const;
};

/// Sets one field from its flag name ("T", "cluster-size", "p_enter", ...).
/// Dashes and underscores are interchangeable. Throws ConfigError.
void apply_setting(ScenarioConfig& config, const std::string& key, const std::string& value);

/// Flat key=value lines; '#' starts a comment.
ScenarioConfig parse_config_text(const std::string& text, ScenarioConfig base = {});
ScenarioConfig load_config_file(const std::string& path, ScenarioConfig base = {});

enum class Degenerate { no, yes, budget };

struct ResultRow {
  std::string scenario;
  std::size_t dim = 0;
  Algorithm algorithm = Algorithm::spf;
  Algorithm loglik_method = Algorithm::spf;
  double total_loglik = 0.0;
  double scaled_loglik = 0.0;
  long long runtime_ms = 0;
  std::uint64_t seed = 0;
  Degenerate degenerate = Degenerate::no;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Base layout for the sweep: complete on max(dims) vertices or the file.
SpatialLayout scenario_layout(const ScenarioConfig& config);

/// Layout used for one dimension.
SpatialLayout layout_for_dim(const ScenarioConfig& config, const SpatialLayout& base, std::size_t dim);

/// Replicate i runs under master seed `seed + i`. Model parameters depend on
/// the master seed only, so every dim of a replicate shares them.
struct CellSeeds {
  std::uint64_t data;
  std::uint64_t filter;
};
CellSeeds cell_seeds(std::uint64_t master, std::size_t dim);
car::CarParams scenario_params(const ScenarioConfig& config, std::uint64_t master);

/// One dataset per (dim, replicate), shared by every algorithm; observed
/// identifiers; one row per (algorithm, loglik method). Both algorithms of a
/// cell use the same filter seed.
std::vector<ResultRow> run_scenario(const ScenarioConfig& config);

inline constexpr const char* kResultsHeader =
    "scenario,dim,algorithm,loglik_method,total_loglik,scaled_loglik,runtime_ms,seed,degenerate";

std::string format_results(const std::vector<ResultRow>& rows);
void write_results(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> parse_results(const std::string& text);
std::vector<ResultRow> read_results(const std::string& path);

}  // namespace vtspf

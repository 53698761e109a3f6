#include <doctest.h>

#include <cmath>
#include <filesystem>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vtspf/errors.hpp"
#include "vtspf/scenario.hpp"

using namespace vtspf;

namespace {

ScenarioConfig small() {
  ScenarioConfig c;
  c.scenario = "small";
  c.T = 5;
  c.N = 40;
  c.dims = {2};
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("a single dimension yields one row per algorithm pair") {
  const auto rows = run_scenario(small());
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.dim == 2);
    CHECK(r.scenario == "small");
    CHECK(r.runtime_ms == 0);
    CHECK(r.degenerate == Degenerate::no);
    CHECK(std::abs(r.scaled_loglik - r.total_loglik / 2.0) < 1e-9);
  }
}

TEST_CASE("same configuration gives identical bytes") {
  auto c = small();
  c.dims = {3, 5};
  c.replicates = 2;
  const auto a = format_results(run_scenario(c));
  const auto b = format_results(run_scenario(c));
  CHECK(a == b);
  c.seed = 4;
  CHECK(format_results(run_scenario(c)) != a);
}

TEST_CASE("results are independent of the thread count") {
#ifdef _OPENMP
  auto c = small();
  c.dims = {4, 6};
  c.N = 120;
  const int before = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = format_results(run_scenario(c));
  omp_set_num_threads(4);
  const auto four = format_results(run_scenario(c));
  omp_set_num_threads(before);
  CHECK(one == four);
#endif
}

TEST_CASE("results CSV") {
  CHECK(format_results({}) == std::string(kResultsHeader) + "\n");
  const auto rows = run_scenario(small());
  const auto path = (std::filesystem::temp_directory_path() / "vtspf_results_test.csv").string();
  write_results(rows, path);
  const auto back = read_results(path);
  CHECK(back == rows);
  std::filesystem::remove(path);

  ResultRow degenerate;
  degenerate.scenario = "x";
  degenerate.dim = 7;
  degenerate.total_loglik = degenerate.scaled_loglik = std::nan("");
  degenerate.degenerate = Degenerate::yes;
  const auto text = format_results({degenerate});
  const auto parsed = parse_results(text);
  REQUIRE(parsed.size() == 1);
  CHECK(std::isnan(parsed[0].total_loglik));
  CHECK(parsed[0].degenerate == Degenerate::yes);

  CHECK_THROWS_AS(parse_results("wrong,header\n"), LoadError);
  try {
    parse_results(std::string(kResultsHeader) + "\nsmall,2,spf\n");
    FAIL("short row accepted");
  } catch (const LoadError& e) {
    CHECK(e.row() == 1);
  }
}

TEST_CASE("config parsing") {
  const auto c = parse_config_text(
      "# sweep\nT = 7\nN=50\ndims = 10, 20\ncluster_size=3\nobs-model=poisson\n"
      "--seed=9\nalgorithms=spf\nrecord-runtime=yes\nbudget-ms=500\n");
  CHECK(c.T == 7);
  CHECK(c.N == 50);
  CHECK(c.dims == std::vector<std::size_t>{10, 20});
  CHECK(c.cluster_size == 3);
  CHECK(c.obs_model == car::ObservationModel::poisson);
  CHECK(c.seed == 9);
  CHECK(c.algorithms == std::vector<Algorithm>{Algorithm::spf});
  CHECK(c.record_runtime);
  CHECK(c.budget_ms == 500);
  CHECK_NOTHROW(c.validate());

  auto o = c;
  apply_setting(o, "N", "80");
  CHECK(o.N == 80);
  CHECK(o.T == 7);
}

TEST_CASE("config errors") {
  ScenarioConfig c;
  CHECK_THROWS_AS(apply_setting(c, "colour", "red"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "N", "0"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "N", "12x"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "dims", ""), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "obs-model", "gamma"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "algorithms", "smc"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "seed", "-1"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("T 5\n"), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/config.txt"), ConfigError);
  c.p_enter = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ScenarioConfig{};
  c.scenario = "a,b";
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("seeds and parameters") {
  const auto a = cell_seeds(1, 20), b = cell_seeds(1, 40), c = cell_seeds(2, 20);
  CHECK(a.data != a.filter);
  CHECK(a.data != b.data);
  CHECK(a.data != c.data);
  const auto cfg = small();
  const auto p1 = scenario_params(cfg, 5), p2 = scenario_params(cfg, 5), p3 = scenario_params(cfg, 6);
  CHECK(p1.rho_spatial == p2.rho_spatial);
  CHECK(p1.sigma2_tilde == p2.sigma2_tilde);
  CHECK(p1.rho_spatial != p3.rho_spatial);
  CHECK(p1.sigma2_tilde.size() == 5);
}

TEST_CASE("real adjacency layouts take leading blocks") {
  auto c = small();
  c.adjacency = std::string(VTSPF_DATA) + "/synthetic_ggc_271.csv";
  c.dims = {50};
  const auto base = scenario_layout(c);
  CHECK(base.size() == 271);
  const auto l = layout_for_dim(c, base, 50);
  CHECK(l.size() == 50);
  c.adjacency = "complete";
  c.dims = {6};
  CHECK(scenario_layout(c).edge_count() == 15);
}

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "support.hpp"
#include "vtspf/car.hpp"
#include "vtspf/errors.hpp"

using namespace vtspf;
using vtspf::testing::ConstModel;

namespace {

WeightTable table(std::size_t clusters, std::size_t n, std::vector<double> cluster_log) {
  WeightTable w;
  w.clusters = clusters;
  w.particles = n;
  w.cluster_log = std::move(cluster_log);
  w.joint_log.assign(n, 0.0);
  for (std::size_t j = 0; j < clusters; ++j)
    for (std::size_t i = 0; i < n; ++i) w.joint_log[i] += w.at(j, i);
  return w;
}

ParticleEnsemble weighted_ensemble(std::vector<double> w) {
  ParticleEnsemble e;
  e.particles.assign(w.size(), LatentConfiguration(Identifier{0}, 1));
  e.partition = build_cluster_partition(Identifier{0}, 1);
  e.cluster_of = e.partition.cluster_index(1);
  e.weights = {std::move(w)};
  return e;
}

exact::FiniteInstance flat_instance() {
  auto inst = vtspf::testing::fixture("toy3.json");
  inst.emission = {0.5, 0.5, 0.5, 0.5};
  inst.interaction = {1.0, 1.0, 1.0, 1.0};
  inst.p_enter = inst.p_stay = 1.0;
  inst.initial_identifier = Identifier::universe(3);
  return inst;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("effective sample size") {
  CHECK(effective_sample_size(std::vector<double>(8, 0.125)) == doctest::Approx(8.0));
  CHECK(effective_sample_size(std::vector<double>{1.0, 0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(effective_sample_size(std::vector<double>{0.5, 0.5}) == doctest::Approx(2.0));
}

TEST_CASE("log mean exp") {
  CHECK(log_mean_exp(std::vector<double>{0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(log_mean_exp(std::vector<double>{std::log(1.0), std::log(3.0)}) == doctest::Approx(std::log(2.0)));
  CHECK(log_mean_exp(std::vector<double>{1000.0, 1000.0}) == doctest::Approx(1000.0));
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(log_mean_exp(std::vector<double>{ninf, ninf}, 3, 1), DegeneracyError);
}

TEST_CASE("log-likelihood increments") {
  CHECK(spf_loglik_increment(table(3, 4, std::vector<double>(12, 0.0))) == 0.0);
  CHECK(pf_loglik_increment(table(3, 4, std::vector<double>(12, 0.0))) == 0.0);
  const auto one = table(1, 3, {0.1, -0.4, 0.7});
  CHECK(spf_loglik_increment(one) == doctest::Approx(pf_loglik_increment(one)).epsilon(1e-14));
  const auto single = table(2, 1, {0.3, -1.1});
  CHECK(spf_loglik_increment(single) == doctest::Approx(-0.8));
  CHECK(pf_loglik_increment(single) == doctest::Approx(-0.8));
  const auto two = table(2, 2, {std::log(1.0), std::log(3.0), std::log(1.0), std::log(3.0)});
  CHECK(spf_loglik_increment(two) == doctest::Approx(std::log(4.0)));
  CHECK(pf_loglik_increment(two) == doctest::Approx(std::log(5.0)));
}

TEST_CASE("blockwise splice") {
  std::vector<LatentConfiguration> parents(2, LatentConfiguration(Identifier{0, 1}, 2));
  parents[0].set(0, {10.0, 0.0});
  parents[0].set(1, {11.0, 0.0});
  parents[1].set(0, {20.0, 0.0});
  parents[1].set(1, {21.0, 0.0});
  const auto partition = build_cluster_partition(Identifier{0, 1}, 1);
  const std::vector<std::vector<std::size_t>> anc{{1, 0}, {0, 1}};
  for (auto exec : {Execution::serial, Execution::parallel}) {
    std::vector<LatentConfiguration> out(2);
    kernels::splice(parents, partition, anc, out, exec);
    CHECK(out[0].at(0).first == 20.0);
    CHECK(out[0].at(1).first == 11.0);
    CHECK(out[1].at(0).first == 10.0);
    CHECK(out[1].at(1).first == 21.0);
  }

  SUBCASE("fragments carry the parent's activity") {
    std::vector<LatentConfiguration> ps{LatentConfiguration(Identifier{0}, 2), LatentConfiguration(Identifier{1}, 2)};
    std::vector<LatentConfiguration> out(1);
    kernels::splice(ps, partition, {{1}, {1}}, out, Execution::serial);
    CHECK(out[0].identifier() == Identifier{1});
    kernels::splice(ps, partition, {{0}, {1}}, out, Execution::serial);
    CHECK(out[0].identifier() == Identifier{0, 1});
  }
}

TEST_CASE("ancestor frequencies match the weights") {
  const std::size_t n = 4000;
  std::vector<double> w(n, 0.7 / static_cast<double>(n - 1));
  w[0] = 0.3;
  const auto e = weighted_ensemble(w);
  for (auto scheme : {ResamplingScheme::multinomial, ResamplingScheme::systematic}) {
    const auto anc = draw_ancestors(e, 1, RngPolicy(17), scheme);
    REQUIRE(anc.size() == 1);
    const double hits = static_cast<double>(std::count(anc[0].begin(), anc[0].end(), 0u));
    const double se = std::sqrt(static_cast<double>(n) * 0.3 * 0.7);
    CHECK(std::abs(hits - 0.3 * static_cast<double>(n)) < 3.0 * se);
  }
}

TEST_CASE("one cluster makes SPF and PF coincide") {
  const auto inst = vtspf::testing::fixture("toy3.json");
  const auto spf = vtspf::testing::run_on_instance(inst, 500, 3, Algorithm::spf, 3);
  const auto pf = vtspf::testing::run_on_instance(inst, 500, 3, Algorithm::pf, 3);
  REQUIRE(spf.last.weights.size() == 1);
  for (std::size_t n = 0; n < 500; ++n) CHECK(std::abs(spf.last.weights[0][n] - pf.last.weights[0][n]) < 1e-12);
  for (std::size_t t = 0; t < spf.spf_increments.size(); ++t) {
    CHECK(std::abs(spf.spf_increments[t] - pf.pf_increments[t]) < 1e-12);
    CHECK(std::abs(spf.spf_increments[t] - spf.pf_increments[t]) < 1e-12);
  }
}

TEST_CASE("constant local densities leave the weights uniform") {
  const auto inst = flat_instance();
  const auto run = vtspf::testing::run_on_instance(inst, 64, 5, Algorithm::spf, 1);
  for (const auto& row : run.last.weights)
    for (double w : row) CHECK(w == doctest::Approx(1.0 / 64.0));
  for (double inc : run.spf_increments) CHECK(inc == doctest::Approx(3.0 * std::log(0.5)));
}

TEST_CASE("empty horizon") {
  const ConstModel model(2, 1.0, 1.0, 1.0);
  FilterConfig cfg;
  cfg.particles = 10;
  const auto out = run_filter(model, SpatialLayout::path(2), RegionalPartition::singletons(2), {}, {}, cfg);
  CHECK(out.spf_increments.empty());
  CHECK(out.pf_total == 0.0);
  cfg.particles = 0;
  std::vector<ObservationFrame> ys(1, ObservationFrame(2));
  CHECK_THROWS_AS(run_filter(model, SpatialLayout::path(2), RegionalPartition::singletons(2), ys, {}, cfg),
                  DomainError);
}

TEST_CASE("particle filter on the toy instance approaches the exact filter") {
  const auto inst = vtspf::testing::fixture("toy3.json");
  const auto exact_run = exact::run_exact_filter(inst);
  const auto run = vtspf::testing::run_on_instance(inst, 20000, 11, Algorithm::spf, 3);
  for (VertexId v = 0; v < 3; ++v)
    CHECK(vtspf::testing::tv_to_exact(run.last, exact_run.filters.back(), v) < 0.05);
  CHECK(run.spf_total == doctest::Approx(exact_run.log_likelihood).epsilon(0.01));
}

TEST_CASE("CAR runs are reproducible and thread-independent") {
  const auto layout = SpatialLayout::path(6);
  car::CarParams p;
  p.rho_spatial = 0.6;
  p.sigma2_tilde.assign(8, 1.3);
  const auto traj = car::simulate_dataset(p, layout, 8, 2);
  const car::CarModel model(p, layout);
  std::vector<Identifier> observed(traj.identifiers.begin() + 1, traj.identifiers.end());
  FilterConfig cfg;
  cfg.particles = 300;
  cfg.seed = 9;
  const auto regions = RegionalPartition::singletons(6);

  FilterConfig serial = cfg;
  serial.step.execution = Execution::serial;
  const auto a = run_filter(model, layout, regions, traj.observations, observed, cfg);
  const auto b = run_filter(model, layout, regions, traj.observations, observed, cfg);
  const auto c = run_filter(model, layout, regions, traj.observations, observed, serial);
  for (std::size_t t = 0; t < a.spf_increments.size(); ++t) {
    CHECK(same_bits(a.spf_increments[t], b.spf_increments[t]));
    CHECK(same_bits(a.spf_increments[t], c.spf_increments[t]));
    CHECK(same_bits(a.pf_increments[t], c.pf_increments[t]));
    for (std::size_t v = 0; v < 6; ++v) CHECK(same_bits(a.posterior_means[t][v], c.posterior_means[t][v]));
  }
  cfg.seed = 10;
  const auto d = run_filter(model, layout, regions, traj.observations, observed, cfg);
  CHECK(d.spf_total != a.spf_total);
}

TEST_CASE("impossible observations raise degeneracy") {
  const ConstModel model(2, 1.0, 1.0, 0.0);
  FilterConfig cfg;
  cfg.particles = 5;
  std::vector<ObservationFrame> ys(2, ObservationFrame(2));
  for (auto& y : ys) y.set(0, 0.0), y.set(1, 0.0);
  try {
    run_filter(model, SpatialLayout::path(2), RegionalPartition::singletons(2), ys, {}, cfg);
    FAIL("no degeneracy raised");
  } catch (const DegeneracyError& e) {
    CHECK(e.time() == 1);
  }
}

TEST_CASE("wall-clock budget") {
  const ConstModel model(3, 1.0, 1.0, 1.0);
  FilterConfig cfg;
  cfg.particles = 2000;
  cfg.budget = std::chrono::milliseconds(0);
  std::vector<ObservationFrame> ys(3, ObservationFrame(3));
  for (auto& y : ys)
    for (VertexId v = 0; v < 3; ++v) y.set(v, 0.0);
  CHECK_THROWS_AS(run_filter(model, SpatialLayout::path(3), RegionalPartition::singletons(3), ys, {}, cfg),
                  BudgetExceeded);
}

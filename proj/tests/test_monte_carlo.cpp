#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "vuix/errors.hpp"
#include "vuix/grid_model.hpp"
#include "vuix/monte_carlo.hpp"
#include "vuix/vulnerability.hpp"

using namespace vuix;

namespace {

SystemModel case9_model(double snr = 30.0, double rho = 0.1) {
  const auto grid = load_case_file(std::string(VUIX_DATA_DIR) + "/case9.m");
  auto jacobian = build_dc_jacobian(grid, {});
  auto sxx = toeplitz_state_covariance(jacobian.states(), rho);
  const auto noise = sigma2_from_snr(jacobian, sxx, snr);
  return build_system_model(std::move(jacobian), std::move(sxx), noise);
}

}  // namespace

TEST_CASE("attacked-set sampler") {
  auto rng = trial_stream(0, 0);
  CHECK(sample_attacked_set(5, 0, rng).attacked_set().empty());
  CHECK(sample_attacked_set(5, 0, rng).free_set().size() == 5);
  CHECK_THROWS_AS(sample_attacked_set(5, 5, rng), InvalidK);
  CHECK_THROWS_AS(sample_attacked_set(5, 9, rng), InvalidK);

  const auto state = sample_attacked_set(7, 3, rng, 2.5);
  CHECK(state.attacked_set().size() == 3);
  for (auto i : state.attacked_set()) CHECK(state.diagonal()(static_cast<Eigen::Index>(i)) == 2.5);
}

TEST_CASE("uniform_below stays in range") {
  auto rng = trial_stream(5, 1);
  for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL, (1ULL << 63) + 5}) {
    for (int t = 0; t < 1000; ++t) CHECK(uniform_below(rng, bound) < bound);
  }
}

TEST_CASE("attacked sets are uniform over k-subsets") {
  // m = 5, k = 2: ten subsets of probability 0.1 each.
  constexpr int draws = 100000;
  std::map<std::vector<std::size_t>, int> counts;
  for (int t = 0; t < draws; ++t) {
    auto rng = trial_stream(42, static_cast<std::uint64_t>(t));
    ++counts[sample_attacked_set(5, 2, rng).attacked_set()];
  }
  REQUIRE(counts.size() == 10);
  double chi2 = 0.0;
  for (const auto& [subset, count] : counts) {
    const double p = static_cast<double>(count) / draws;
    CHECK(std::abs(p - 0.1) <= 0.01);
    chi2 += std::pow(count - 0.1 * draws, 2) / (0.1 * draws);
  }
  // Upper 0.001 quantile of chi-square with 9 degrees of freedom.
  CHECK(chi2 < 27.877);
}

TEST_CASE("trial streams are reproducible and distinct") {
  auto a = trial_stream(7, 3), b = trial_stream(7, 3), c = trial_stream(7, 4), d = trial_stream(8, 3);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}

TEST_CASE("k = 0 reproduces the closed-form ranking with zero variance") {
  const auto model = case9_model();
  const auto reference = closed_form_ranking(model);
  const auto report = monte_carlo_vuix(model, 0, {2.0, 1.0}, {50, 3, 1.0, 1});
  REQUIRE(report.per_measurement.size() == 18);
  for (std::size_t i = 0; i < 18; ++i) {
    CHECK(report.per_measurement[i].coverage == 50);
    CHECK(report.per_measurement[i].variance == 0.0);
    CHECK(report.per_measurement[i].mean == static_cast<double>(reference.vuix_of[i]));
  }
}

TEST_CASE("results do not depend on the thread count") {
  const auto model = case9_model(10.0, 0.3);
  const auto one = monte_carlo_vuix(model, 3, {2.0, 1.0}, {300, 17, 1.0, 1});
  const auto four = monte_carlo_vuix(model, 3, {2.0, 1.0}, {300, 17, 1.0, 4});
  REQUIRE(one.per_measurement.size() == four.per_measurement.size());
  for (std::size_t i = 0; i < one.per_measurement.size(); ++i) {
    CHECK(one.per_measurement[i].mean == four.per_measurement[i].mean);
    CHECK(one.per_measurement[i].variance == four.per_measurement[i].variance);
    CHECK(one.per_measurement[i].coverage == four.per_measurement[i].coverage);
  }
  CHECK(one.flow_pmf == four.flow_pmf);
  CHECK(one.injection_pmf == four.injection_pmf);
}

TEST_CASE("report bookkeeping") {
  const auto model = case9_model();
  const std::size_t trials = 400, k = 2;
  const auto report = monte_carlo_vuix(model, k, {2.0, 1.0}, {trials, 1, 1.0, 2});
  const std::size_t m = 18;
  CHECK(report.positions.size() == m - k);
  CHECK(report.flow_pmf.size() == m - k);
  CHECK(report.injection_pmf.size() == m - k);

  std::size_t total_coverage = 0;
  for (const auto& s : report.per_measurement) {
    total_coverage += s.coverage;
    if (s.coverage > 0) {
      CHECK(s.mean >= 1.0);
      CHECK(s.mean <= static_cast<double>(m - k));
      CHECK(s.variance >= 0.0);
    }
  }
  CHECK(total_coverage == trials * (m - k));
  CHECK(report.flow_samples + report.injection_samples == trials * (m - k));

  double flow_mass = 0.0, inj_mass = 0.0;
  for (std::size_t j = 0; j < m - k; ++j) {
    const auto& p = report.positions[j];
    CHECK(p.flow_count + p.injection_count == trials);
    CHECK(p.p_flow + p.p_injection == doctest::Approx(1.0).epsilon(1e-15));
    flow_mass += report.flow_pmf[j];
    inj_mass += report.injection_pmf[j];
  }
  CHECK(flow_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(inj_mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("case9: injections are the most vulnerable and a flow the least") {
  const auto model = case9_model();
  const auto report = monte_carlo_vuix(model, 2, {2.0, 1.0}, {1000, 0, 1.0, 0});
  CHECK(report.positions.front().p_injection == 1.0);
  CHECK(report.positions.back().p_flow == 1.0);
}

TEST_CASE("per-measurement statistics match a serial recomputation") {
  std::mt19937_64 rng(12);
  const auto sys = oracle::random_system(rng, 4, 7);
  const auto model = build_system_model(sys.h, sys.sxx, sys.sigma2);
  const auto m = static_cast<std::size_t>(model.measurements());
  const std::size_t trials = 200, k = 2;
  const CostParams params{3.0, 0.5};
  const auto report = monte_carlo_vuix(model, k, params, {trials, 99, 1.0, 3});
  CHECK(report.positions.empty());

  std::vector<double> sum(m, 0.0), sum2(m, 0.0);
  std::vector<std::size_t> cov(m, 0);
  for (std::size_t t = 0; t < trials; ++t) {
    auto stream = trial_stream(99, t);
    const auto state = sample_attacked_set(m, k, stream);
    const auto ranking = vuix_ranking(model, state, params);
    for (auto i : state.free_set()) {
      const auto r = static_cast<double>(ranking.vuix_of[i]);
      sum[i] += r, sum2[i] += r * r, ++cov[i];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    CHECK(report.per_measurement[i].coverage == cov[i]);
    if (cov[i] == 0) {
      CHECK(std::isnan(report.per_measurement[i].mean));
      continue;
    }
    const double mean = sum[i] / static_cast<double>(cov[i]);
    CHECK(report.per_measurement[i].mean == doctest::Approx(mean).epsilon(1e-12));
    if (cov[i] >= 2) {
      const double var = (sum2[i] - static_cast<double>(cov[i]) * mean * mean) / static_cast<double>(cov[i] - 1);
      CHECK(report.per_measurement[i].variance == doctest::Approx(var).epsilon(1e-9));
    }
  }
}

TEST_CASE("invalid arguments") {
  const auto model = case9_model();
  CHECK_THROWS_AS(monte_carlo_vuix(model, 18, {2.0, 1.0}, {}), InvalidK);
  CHECK_THROWS_AS(monte_carlo_vuix(model, 1, {2.0, 1.0}, {0, 0, 1.0, 1}), InvalidTrials);
}

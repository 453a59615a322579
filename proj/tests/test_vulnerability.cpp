#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "vuix/errors.hpp"
#include "vuix/vulnerability.hpp"

using namespace vuix;

namespace {

SystemModel scalar_model() {
  return build_system_model(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1), 1.0);
}

SystemModel diagonal_toy() {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
  h.diagonal() << std::sqrt(0.5), std::sqrt(1.5), std::sqrt(2.5);
  return build_system_model(h, Eigen::MatrixXd::Identity(3, 3), 0.5);
}

SystemModel random_model(std::mt19937_64& rng, Eigen::Index max_n, Eigen::Index max_m) {
  const auto sys = oracle::random_system(rng, max_n, max_m);
  return build_system_model(sys.h, sys.sxx, sys.sigma2);
}

ExistingAttackState random_state(std::mt19937_64& rng, Eigen::Index m, std::size_t k) {
  std::vector<std::size_t> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(k);
  std::uniform_real_distribution<double> var(0.1, 3.0);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
  for (auto i : all) d(static_cast<Eigen::Index>(i)) = var(rng);
  return ExistingAttackState(d);
}

std::vector<std::size_t> argsort(const Eigen::VectorXd& keys) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(keys.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return keys(static_cast<Eigen::Index>(a)) < keys(static_cast<Eigen::Index>(b));
  });
  return idx;
}

}  // namespace

TEST_CASE("zero probe variance gives zero vulnerability") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = random_model(rng, 5, 8);
    const auto state = random_state(rng, model.measurements(), trial % 2);
    for (auto i : state.free_set()) {
      CHECK(delta(model, state, {2.0, 0.0}, i).delta == 0.0);
    }
  }
}

TEST_CASE("scalar vulnerability: rank-one form and two cost evaluations") {
  const auto model = scalar_model();
  const ExistingAttackState none(1);
  const double expected = -0.5 * std::log(1.5) - 0.5 * std::log(2.0) + 0.5;
  const auto score = delta(model, none, {2.0, 1.0}, 0);
  CHECK(score.measurement == 0);
  CHECK(score.delta == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::abs(score.delta - (-0.0493062)) <= 1e-7);
  CHECK(delta_direct(model, none, {2.0, 1.0}, 0) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("compromised inverse diagonal matches a direct inverse") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = random_model(rng, 6, 10);
    const auto m = model.measurements();
    const auto state = random_state(rng, m, static_cast<std::size_t>(trial % std::min<Eigen::Index>(4, m)));
    const DeltaEvaluator evaluator(model, state);
    Eigen::MatrixXd compromised = model.obs_cov();
    compromised.diagonal() += state.diagonal();
    const Eigen::VectorXd direct = compromised.inverse().diagonal();
    CHECK((evaluator.compromised_inverse_diagonal() - direct).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("rank-one fast path equals the cost difference") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lam(0.0, 10.0), var(0.0, 10.0);
  for (std::size_t k = 0; k <= 3; ++k) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto model = random_model(rng, 6, 10);
      if (static_cast<Eigen::Index>(k) >= model.measurements()) continue;
      const auto state = random_state(rng, model.measurements(), k);
      const CostParams params{lam(rng), var(rng)};
      for (auto i : state.free_set()) {
        const double fast = delta(model, state, params, i).delta;
        const double direct = delta_direct(model, state, params, i);
        CHECK(std::abs(fast - direct) <= 1e-9 * std::max(1.0, std::abs(direct)));
      }
    }
  }
}

TEST_CASE("six-measurement model with two attacked sensors") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd h = oracle::gaussian_matrix(rng, 6, 4);
  const auto model = build_system_model(h, oracle::random_psd(rng, 4, 4), 0.3);
  const auto state = ExistingAttackState::from_set(6, {1, 4});
  const CostParams params{2.0, 1.0};
  for (auto i : state.free_set()) {
    const double direct = delta_direct(model, state, params, i);
    CHECK(std::abs(delta(model, state, params, i).delta - direct) <= 1e-9 * std::max(1.0, std::abs(direct)));
  }
  const auto ranking = vuix_ranking(model, state, params);
  CHECK(ranking.size() == 4);
  CHECK(std::is_sorted(ranking.deltas.begin(), ranking.deltas.end()));
  auto sorted_order = ranking.order;
  std::sort(sorted_order.begin(), sorted_order.end());
  CHECK(sorted_order == state.free_set());
  for (std::size_t j = 0; j < ranking.size(); ++j) {
    CHECK(ranking.vuix_of[ranking.order[j]] == j + 1);
    CHECK(ranking.deltas[j] == delta(model, state, params, ranking.order[j]).delta);
  }
  CHECK(ranking.vuix_of[1] == 0);
  CHECK(ranking.vuix_of[4] == 0);
}

TEST_CASE("most vulnerable measurement") {
  CHECK(most_vulnerable(diagonal_toy(), ExistingAttackState(3), {2.0, 1.0}) == 2);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> param(0.01, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = random_model(rng, 6, 10);
    const CostParams params{param(rng), param(rng)};
    CHECK(most_vulnerable(model, ExistingAttackState(model.measurements()), params) ==
          argmin_lowest_index(model.obs_cov_inverse().diagonal()));
  }

  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::MatrixXd h = oracle::gaussian_matrix(rng, 8, 5);
    const auto model = build_system_model(h, oracle::random_psd(rng, 5, 3), 0.2);
    const auto state = random_state(rng, 8, 3);
    const CostParams params{param(rng), param(rng)};
    std::size_t expected = state.free_set().front();
    for (auto i : state.free_set()) {
      if (delta_direct(model, state, params, i) < delta_direct(model, state, params, expected)) expected = i;
    }
    CHECK(most_vulnerable(model, state, params) == expected);
  }
}

TEST_CASE("closed-form ranking") {
  const auto toy = closed_form_ranking(diagonal_toy());
  CHECK(toy.order == std::vector<std::size_t>{2, 1, 0});
  CHECK(toy.vuix_of == std::vector<std::size_t>{3, 2, 1});

  // Syy = 2 I: every inverse diagonal ties, so the order is by index.
  const auto flat = closed_form_ranking(
      build_system_model(Eigen::MatrixXd::Identity(5, 5), Eigen::MatrixXd::Identity(5, 5), 1.0));
  CHECK(flat.order == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("closed-form ranking is the vulnerability ranking of an uncompromised system") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = random_model(rng, 6, 10);
    const auto reference = closed_form_ranking(model);
    CHECK(reference.order == argsort(model.obs_cov_inverse().diagonal()));
    for (double lambda : {0.5, 1.0, 2.0, 5.0}) {
      for (double v : {0.1, 1.0, 10.0}) {
        const auto ranking = vuix_ranking(model, ExistingAttackState(model.measurements()), {lambda, v});
        CHECK(ranking.order == reference.order);
      }
    }
  }
}

TEST_CASE("vulnerability is monotone in the inverse diagonal for lambda >= 1") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> lam(1.0, 10.0), var(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = random_model(rng, 6, 10);
    const ExistingAttackState none(model.measurements());
    const CostParams params{lam(rng), var(rng)};
    Eigen::VectorXd deltas(model.measurements());
    for (Eigen::Index i = 0; i < deltas.size(); ++i) {
      deltas(i) = delta(model, none, params, static_cast<std::size_t>(i)).delta;
    }
    CHECK(argsort(deltas) == argsort(model.obs_cov_inverse().diagonal()));
  }
}

TEST_CASE("ranking with one free measurement") {
  const auto model = build_system_model(Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(1, 1), 1.0);
  const auto ranking = vuix_ranking(model, ExistingAttackState::from_set(2, {0}), {2.0, 1.0});
  CHECK(ranking.order == std::vector<std::size_t>{1});
  CHECK(ranking.vuix_of == std::vector<std::size_t>{0, 1});
}

TEST_CASE("error paths") {
  const auto model = diagonal_toy();
  const auto all = ExistingAttackState::from_set(3, {0, 1, 2});
  CHECK_THROWS_AS(vuix_ranking(model, all, {2.0, 1.0}), EmptyFreeSet);
  CHECK_THROWS_AS(most_vulnerable(model, all, {2.0, 1.0}), EmptyFreeSet);
  CHECK_THROWS_AS(delta(model, ExistingAttackState::from_set(3, {1}), {2.0, 1.0}, 1), IndexAttacked);
  CHECK_THROWS_AS(vuix_ranking(model, ExistingAttackState(4), {2.0, 1.0}), DimensionMismatch);
}

#include "vuix/vulnerability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "vuix/errors.hpp"

namespace vuix {

namespace {

void check_state(const SystemModel& model, const ExistingAttackState& state) {
  if (state.measurements() != model.measurements()) {
    throw DimensionMismatch("attack state has " + std::to_string(state.measurements()) +
                            " entries, model has " + std::to_string(model.measurements()) +
                            " measurements");
  }
}

void check_free(const ExistingAttackState& state, std::size_t i) {
  if (static_cast<Eigen::Index>(i) >= state.measurements()) {
    throw DimensionMismatch("measurement index " + std::to_string(i) + " out of range");
  }
  if (!state.is_free(i)) {
    throw IndexAttacked("measurement " + std::to_string(i + 1) + " is already attacked");
  }
}

VuIxRanking rank_by(const std::vector<std::size_t>& candidates, const std::vector<double>& keys,
                    std::size_t m) {
  std::vector<std::size_t> perm(candidates.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Candidates are ascending, so a stable sort breaks ties by lowest index.
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  VuIxRanking ranking;
  ranking.vuix_of.assign(m, 0);
  for (std::size_t j = 0; j < perm.size(); ++j) {
    const auto measurement = candidates[perm[j]];
    ranking.order.push_back(measurement);
    ranking.deltas.push_back(keys[perm[j]]);
    ranking.vuix_of[measurement] = j + 1;
  }
  return ranking;
}

}  // namespace

DeltaEvaluator::DeltaEvaluator(const SystemModel& model, const ExistingAttackState& state)
    : state_(state),
      sigma2_(model.sigma2()),
      obs_inv_diag_(model.obs_cov_inverse().diagonal()) {
  check_state(model, state);
  const auto& attacked = state.attacked_set();
  if (attacked.empty()) {
    compromised_inv_diag_ = obs_inv_diag_;
    return;
  }
  // Woodbury: (W^-1 + U D U^T)^-1 = W - W U (D^-1 + U^T W U)^-1 U^T W with
  // W = Syy^-1 and U the attacked columns of the identity.
  const auto& w = model.obs_cov_inverse();
  const auto m = model.measurements();
  const auto k = static_cast<Eigen::Index>(attacked.size());
  Eigen::MatrixXd w_cols(m, k);
  Eigen::MatrixXd core(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto ia = static_cast<Eigen::Index>(attacked[a]);
    w_cols.col(a) = w.col(ia);
    for (Eigen::Index b = 0; b < k; ++b) {
      core(a, b) = w(ia, static_cast<Eigen::Index>(attacked[b]));
    }
    core(a, a) += 1.0 / state.diagonal()(ia);
  }
  Eigen::LLT<Eigen::MatrixXd> core_factor(core);
  if (core_factor.info() != Eigen::Success) {
    throw NotPositiveDefinite("attacked-set update is not positive definite");
  }
  const Eigen::MatrixXd solved = core_factor.solve(w_cols.transpose());
  compromised_inv_diag_ =
      obs_inv_diag_ - (w_cols.array() * solved.transpose().array()).rowwise().sum().matrix();
}

double DeltaEvaluator::operator()(const CostParams& params, std::size_t i) const {
  check_free(state_, i);
  if (!(params.v >= 0.0) || !(params.lambda >= 0.0)) {
    throw ConfigError("lambda and v must be nonnegative");
  }
  const auto idx = static_cast<Eigen::Index>(i);
  const double v = params.v;
  const double lambda = params.lambda;
  return 0.5 * (1.0 - lambda) * std::log1p(v * compromised_inv_diag_(idx)) -
         0.5 * std::log1p(v / sigma2_) + 0.5 * lambda * v * obs_inv_diag_(idx);
}

VulnerabilityScore delta(const SystemModel& model, const ExistingAttackState& state,
                         const CostParams& params, std::size_t i) {
  return {i, DeltaEvaluator(model, state)(params, i)};
}

double delta_direct(const SystemModel& model, const ExistingAttackState& state,
                    const CostParams& params, std::size_t i) {
  return cost_f(model, state, params, i) - cost_f(model, state, {params.lambda, 0.0}, i);
}

std::size_t most_vulnerable(const SystemModel& model, const ExistingAttackState& state,
                            const CostParams& params) {
  check_state(model, state);
  if (state.free_set().empty()) throw EmptyFreeSet("every measurement is already attacked");
  const DeltaEvaluator evaluate(model, state);
  std::size_t best = state.free_set().front();
  double best_delta = evaluate(params, best);
  for (auto i : state.free_set()) {
    const double d = evaluate(params, i);
    if (d < best_delta) {
      best = i;
      best_delta = d;
    }
  }
  return best;
}

VuIxRanking closed_form_ranking(const SystemModel& model) {
  const auto m = static_cast<std::size_t>(model.measurements());
  std::vector<std::size_t> all(m);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Eigen::VectorXd inv_diag = model.obs_cov_inverse().diagonal();
  return rank_by(all, std::vector<double>(inv_diag.data(), inv_diag.data() + inv_diag.size()), m);
}

VuIxRanking vuix_ranking(const SystemModel& model, const ExistingAttackState& state,
                         const CostParams& params) {
  check_state(model, state);
  const auto& candidates = state.free_set();
  if (candidates.empty()) throw EmptyFreeSet("every measurement is already attacked");
  const DeltaEvaluator evaluate(model, state);
  std::vector<double> deltas;
  deltas.reserve(candidates.size());
  for (auto i : candidates) deltas.push_back(evaluate(params, i));
  return rank_by(candidates, deltas, static_cast<std::size_t>(model.measurements()));
}

}  // namespace vuix

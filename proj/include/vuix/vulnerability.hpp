#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "vuix/attack_theory.hpp"
#include "vuix/stochastic_model.hpp"

namespace vuix {

struct VulnerabilityScore {
  std::size_t measurement = 0;
  double delta = 0.0;  // nats
};

/// Uncompromised measurements sorted by ascending vulnerability; position j
/// (zero-based) holds the measurement whose VuIx is j + 1.
struct VuIxRanking {
  std::vector<std::size_t> order;
  std::vector<double> deltas;  // aligned with `order`
  /// VuIx (1-based) of every measurement; 0 for attacked ones.
  std::vector<std::size_t> vuix_of;

  std::size_t size() const { return order.size(); }
};

/// Evaluates the change in attacker cost from also attacking a free sensor,
/// reusing one factorization of Syy + S for every candidate.
class DeltaEvaluator {
 public:
  DeltaEvaluator(const SystemModel& model, const ExistingAttackState& state);

  /// Rank-one form:
  /// 1/2 (1 - lambda) log(1 + v [(Syy + S)^-1]_ii) - 1/2 log(1 + v / sigma^2)
  ///   + 1/2 lambda v [Syy^-1]_ii.
  double operator()(const CostParams& params, std::size_t i) const;

  const ExistingAttackState& state() const { return state_; }
  /// diag((Syy + S)^-1), from a low-rank update of Syy^-1 over the attacked set.
  const Eigen::VectorXd& compromised_inverse_diagonal() const { return compromised_inv_diag_; }

 private:
  ExistingAttackState state_;
  double sigma2_;
  Eigen::VectorXd obs_inv_diag_;
  Eigen::VectorXd compromised_inv_diag_;
};

/// Rank-one vulnerability of free measurement i.
VulnerabilityScore delta(const SystemModel& model, const ExistingAttackState& state,
                         const CostParams& params, std::size_t i);

/// f(S, lambda, v, i) - f(S, lambda, 0, i) by two full cost evaluations.
double delta_direct(const SystemModel& model, const ExistingAttackState& state,
                    const CostParams& params, std::size_t i);

/// argmin of delta over the free set, lowest index on ties.
std::size_t most_vulnerable(const SystemModel& model, const ExistingAttackState& state,
                            const CostParams& params);

/// Ranking of all measurements by ascending diag(Syy^-1), valid for an
/// uncompromised system and any lambda, v. `deltas` holds the diagonal values.
VuIxRanking closed_form_ranking(const SystemModel& model);

/// Computes delta for every free measurement and sorts ascending, ties by index.
VuIxRanking vuix_ranking(const SystemModel& model, const ExistingAttackState& state,
                         const CostParams& params);

}  // namespace vuix

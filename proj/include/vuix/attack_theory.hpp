#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "vuix/stochastic_model.hpp"

namespace vuix {

/// Covariance of a zero-mean Gaussian attack vector added to the measurements.
struct AttackCovariance {
  Eigen::MatrixXd matrix;

  /// Rows with a strictly positive diagonal entry.
  std::vector<std::size_t> support() const;

  static AttackCovariance zero(Eigen::Index m);
  static AttackCovariance diagonal(const Eigen::VectorXd& variances);
};

/// Sensors already under attack: a diagonal covariance whose positive
/// entries mark the attacked set. The free set is everything else.
class ExistingAttackState {
 public:
  /// No sensor attacked.
  explicit ExistingAttackState(Eigen::Index m);
  /// Throws ConfigError on negative or non-finite entries.
  explicit ExistingAttackState(Eigen::VectorXd diagonal);
  /// Each index in `attacked` gets variance `variance` (> 0).
  static ExistingAttackState from_set(Eigen::Index m, const std::vector<std::size_t>& attacked,
                                      double variance = 1.0);

  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  Eigen::MatrixXd matrix() const { return diagonal_.asDiagonal(); }
  Eigen::Index measurements() const { return diagonal_.size(); }
  /// Ascending attacked indices.
  const std::vector<std::size_t>& attacked_set() const { return attacked_; }
  /// Ascending uncompromised indices.
  const std::vector<std::size_t>& free_set() const { return free_; }
  bool is_free(std::size_t i) const;
  std::size_t k() const { return attacked_.size(); }

 private:
  Eigen::VectorXd diagonal_;
  std::vector<std::size_t> attacked_;
  std::vector<std::size_t> free_;
};

struct CostParams {
  double lambda = 2.0;  // weight on the detection (KL) term
  double v = 1.0;       // variance of the probe attack on one more sensor
};

/// I(X; Y_A) in nats, computed as 1/2 log|Syy + Saa| - 1/2 log|sigma^2 I + Saa|.
double mutual_information(const SystemModel& model, const AttackCovariance& attack);

/// I(X; Y_A) from the joint covariance of (X, Y_A):
/// 1/2 log(|Sxx| |Syaya| / |joint|). Requires Sxx positive definite.
double mutual_information_joint_form(const SystemModel& model, const AttackCovariance& attack);

/// D(P_{Y_A} || P_Y) in nats for zero-mean Gaussians.
double kl_divergence(const SystemModel& model, const AttackCovariance& attack);

/// Attacker cost f(S, lambda, v, i) with S the existing attack and v e_i e_i^T
/// added on the free sensor i. Equal to I + lambda D + lambda m / 2; the
/// constant is dropped when the trace term is rewritten in terms of S + v e_i e_i^T.
double cost_f(const SystemModel& model, const ExistingAttackState& state,
              const CostParams& params, std::size_t i);

/// Exponent of lambda scaling H Sxx H^T in the optimal Gaussian attack.
inline constexpr double kOptimalAttackLambdaExponent = -0.5;

/// Saa = lambda^(-1/2) H Sxx H^T for lambda >= 1.
AttackCovariance optimal_gaussian_attack(const SystemModel& model, double lambda);

struct SingleSensorAttack {
  std::size_t index = 0;
  double variance = 0.0;

  AttackCovariance covariance(Eigen::Index m) const;
};

/// Optimal attack on exactly one sensor: the smallest diagonal entry w of
/// Syy^-1 (lowest index on ties) and
/// v = -sigma^2/2 + 1/2 sqrt(sigma^4 - 4 (w sigma^2 - 1) / (lambda w^2)).
SingleSensorAttack single_sensor_attack(const SystemModel& model, double lambda);

/// Lowest index attaining the minimum of `values`.
std::size_t argmin_lowest_index(const Eigen::VectorXd& values);

}  // namespace vuix

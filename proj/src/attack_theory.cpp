#include "vuix/attack_theory.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "vuix/errors.hpp"

namespace vuix {

namespace {

void check_attack_dims(const SystemModel& model, const AttackCovariance& attack) {
  const auto m = model.measurements();
  if (attack.matrix.rows() != m || attack.matrix.cols() != m) {
    throw DimensionMismatch("attack covariance is " + std::to_string(attack.matrix.rows()) + "x" +
                            std::to_string(attack.matrix.cols()) + ", expected " +
                            std::to_string(m) + "x" + std::to_string(m));
  }
  if ((attack.matrix.diagonal().array() < 0.0).any()) {
    throw ConfigError("attack covariance has a negative variance");
  }
}

bool is_diagonal(const Eigen::MatrixXd& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j && a(i, j) != 0.0) return false;
    }
  }
  return true;
}

// log|sigma^2 I + S|, summing scalar logs when S is diagonal.
double log_det_noise_plus(double sigma2, const Eigen::MatrixXd& s) {
  if (is_diagonal(s)) {
    return (s.diagonal().array() + sigma2).log().sum();
  }
  Eigen::MatrixXd a = s;
  a.diagonal().array() += sigma2;
  return log_det_spd(a);
}

void check_params(const CostParams& params) {
  if (!(params.lambda >= 0.0) || !std::isfinite(params.lambda)) {
    throw ConfigError("lambda must be a nonnegative number");
  }
  if (!(params.v >= 0.0) || !std::isfinite(params.v)) {
    throw ConfigError("v must be a nonnegative number");
  }
}

}  // namespace

std::vector<std::size_t> AttackCovariance::support() const {
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    if (matrix(i, i) > 0.0) out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

AttackCovariance AttackCovariance::zero(Eigen::Index m) {
  return {Eigen::MatrixXd::Zero(m, m)};
}

AttackCovariance AttackCovariance::diagonal(const Eigen::VectorXd& variances) {
  return {variances.asDiagonal()};
}

ExistingAttackState::ExistingAttackState(Eigen::Index m)
    : ExistingAttackState(Eigen::VectorXd::Zero(m)) {}

ExistingAttackState::ExistingAttackState(Eigen::VectorXd diagonal) : diagonal_(std::move(diagonal)) {
  for (Eigen::Index i = 0; i < diagonal_.size(); ++i) {
    const double d = diagonal_(i);
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw ConfigError("existing attack variance must be finite and nonnegative");
    }
    (d > 0.0 ? attacked_ : free_).push_back(static_cast<std::size_t>(i));
  }
}

ExistingAttackState ExistingAttackState::from_set(Eigen::Index m,
                                                  const std::vector<std::size_t>& attacked,
                                                  double variance) {
  if (!(variance > 0.0)) throw ConfigError("existing attack variance must be positive");
  Eigen::VectorXd diagonal = Eigen::VectorXd::Zero(m);
  for (auto i : attacked) {
    if (static_cast<Eigen::Index>(i) >= m) {
      throw DimensionMismatch("attacked index " + std::to_string(i) + " out of range");
    }
    diagonal(static_cast<Eigen::Index>(i)) = variance;
  }
  return ExistingAttackState(std::move(diagonal));
}

bool ExistingAttackState::is_free(std::size_t i) const {
  return static_cast<Eigen::Index>(i) < diagonal_.size() &&
         diagonal_(static_cast<Eigen::Index>(i)) == 0.0;
}

double mutual_information(const SystemModel& model, const AttackCovariance& attack) {
  check_attack_dims(model, attack);
  const double log_det_compromised = log_det_spd(model.obs_cov() + attack.matrix);
  return 0.5 * log_det_compromised - 0.5 * log_det_noise_plus(model.sigma2(), attack.matrix);
}

double mutual_information_joint_form(const SystemModel& model, const AttackCovariance& attack) {
  check_attack_dims(model, attack);
  const auto& sxx = model.state_cov().matrix;
  const auto& h = model.h();
  const auto n = sxx.rows();
  const auto m = model.measurements();
  const Eigen::MatrixXd compromised = model.obs_cov() + attack.matrix;

  Eigen::MatrixXd joint(n + m, n + m);
  joint.topLeftCorner(n, n) = sxx;
  joint.topRightCorner(n, m) = sxx * h.transpose();
  joint.bottomLeftCorner(m, n) = h * sxx;
  joint.bottomRightCorner(m, m) = compromised;
  return 0.5 * (log_det_spd(sxx) + log_det_spd(compromised) - log_det_spd(joint));
}

double kl_divergence(const SystemModel& model, const AttackCovariance& attack) {
  check_attack_dims(model, attack);
  const double log_det_compromised = log_det_spd(model.obs_cov() + attack.matrix);
  // tr(Syy^-1 (Syy + Saa)) - m folded into tr(Syy^-1 Saa).
  const double trace = (model.obs_cov_inverse().cwiseProduct(attack.matrix)).sum();
  return 0.5 * (model.obs_cov_log_det() - log_det_compromised + trace);
}

double cost_f(const SystemModel& model, const ExistingAttackState& state,
              const CostParams& params, std::size_t i) {
  const auto m = model.measurements();
  if (state.measurements() != m) {
    throw DimensionMismatch("attack state has " + std::to_string(state.measurements()) +
                            " entries, model has " + std::to_string(m) + " measurements");
  }
  if (static_cast<Eigen::Index>(i) >= m) {
    throw DimensionMismatch("measurement index " + std::to_string(i) + " out of range");
  }
  if (!state.is_free(i)) {
    throw IndexAttacked("measurement " + std::to_string(i + 1) + " is already attacked");
  }
  check_params(params);

  Eigen::VectorXd attack = state.diagonal();
  attack(static_cast<Eigen::Index>(i)) += params.v;

  Eigen::MatrixXd compromised = model.obs_cov();
  compromised.diagonal() += attack;
  const double log_det_compromised = log_det_spd(compromised);
  const double log_det_noise = (attack.array() + model.sigma2()).log().sum();
  const double trace = model.obs_cov_inverse().diagonal().dot(attack);

  return 0.5 * (1.0 - params.lambda) * log_det_compromised - 0.5 * log_det_noise +
         0.5 * params.lambda * (trace + model.obs_cov_log_det());
}

AttackCovariance optimal_gaussian_attack(const SystemModel& model, double lambda) {
  if (!(lambda >= 1.0)) {
    throw LambdaBelowOne("the optimal Gaussian attack requires lambda >= 1, got " +
                         std::to_string(lambda));
  }
  Eigen::MatrixXd signal = model.signal_cov();
  signal = 0.5 * (signal + signal.transpose().eval());
  return {std::pow(lambda, kOptimalAttackLambdaExponent) * signal};
}

AttackCovariance SingleSensorAttack::covariance(Eigen::Index m) const {
  AttackCovariance out = AttackCovariance::zero(m);
  out.matrix(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = variance;
  return out;
}

std::size_t argmin_lowest_index(const Eigen::VectorXd& values) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < values.size(); ++j) {
    if (values(j) < values(best)) best = j;
  }
  return static_cast<std::size_t>(best);
}

SingleSensorAttack single_sensor_attack(const SystemModel& model, double lambda) {
  if (!(lambda >= 1.0)) {
    throw LambdaBelowOne("the single-sensor attack requires lambda >= 1, got " +
                         std::to_string(lambda));
  }
  const Eigen::VectorXd inv_diag = model.obs_cov_inverse().diagonal();
  const std::size_t i = argmin_lowest_index(inv_diag);
  const double w = inv_diag(static_cast<Eigen::Index>(i));
  const double s2 = model.sigma2();
  const double discriminant = s2 * s2 - 4.0 * (w * s2 - 1.0) / (lambda * w * w);
  if (discriminant < 0.0) {
    std::ostringstream msg;
    msg.precision(9);
    msg << "negative discriminant " << discriminant << " (w = " << w << ", sigma2 = " << s2
        << ", lambda = " << lambda << ")";
    throw NegativeDiscriminant(msg.str());
  }
  return {i, -0.5 * s2 + 0.5 * std::sqrt(discriminant)};
}

}  // namespace vuix

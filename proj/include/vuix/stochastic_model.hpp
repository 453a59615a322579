#pragma once

#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "vuix/grid_model.hpp"

namespace vuix {

/// Prior covariance of the state vector (bus angles in case-file order).
struct StateCovariance {
  Eigen::MatrixXd matrix;
  std::optional<double> rho;  // set when built by toeplitz_state_covariance
};

struct NoiseModel {
  double sigma2 = 1.0;
};

/// (i, j) entry rho^|i - j|. Requires n >= 1 and 0 <= rho < 1.
StateCovariance toeplitz_state_covariance(Eigen::Index n, double rho);

/// Checks symmetry and that no eigenvalue falls below -1e-10 * the largest.
void validate_state_covariance(const Eigen::MatrixXd& cov);

/// 10 log10(tr(H Sxx H^T) / (m sigma^2)).
double snr_db(const Eigen::MatrixXd& h, const Eigen::MatrixXd& state_cov, double sigma2);

/// Noise variance that puts the observation model at `snr_db` decibels.
NoiseModel sigma2_from_snr(const JacobianMatrix& jacobian, const StateCovariance& state_cov,
                           double snr_db);

/// Immutable Gaussian observation model Y = H X + Z with its measurement
/// covariance Syy = H Sxx H^T + sigma^2 I, Cholesky factor and inverse.
class SystemModel {
 public:
  const JacobianMatrix& jacobian() const { return jacobian_; }
  const Eigen::MatrixXd& h() const { return jacobian_.entries; }
  const StateCovariance& state_cov() const { return state_cov_; }
  double sigma2() const { return sigma2_; }
  const Eigen::MatrixXd& obs_cov() const { return obs_cov_; }
  const Eigen::MatrixXd& obs_cov_inverse() const { return obs_cov_inverse_; }
  const Eigen::LLT<Eigen::MatrixXd>& obs_cov_factor() const { return obs_cov_factor_; }
  /// H Sxx H^T, the noiseless part of Syy.
  Eigen::MatrixXd signal_cov() const;
  double obs_cov_log_det() const { return obs_cov_log_det_; }
  double snr_db() const { return snr_db_; }

  Eigen::Index measurements() const { return jacobian_.measurements(); }
  Eigen::Index states() const { return jacobian_.states(); }

 private:
  friend SystemModel build_system_model(JacobianMatrix, StateCovariance, NoiseModel);
  SystemModel() = default;

  JacobianMatrix jacobian_;
  StateCovariance state_cov_;
  double sigma2_ = 0.0;
  Eigen::MatrixXd obs_cov_;
  Eigen::MatrixXd obs_cov_inverse_;
  Eigen::LLT<Eigen::MatrixXd> obs_cov_factor_;
  double obs_cov_log_det_ = 0.0;
  double snr_db_ = 0.0;
};

SystemModel build_system_model(JacobianMatrix jacobian, StateCovariance state_cov,
                               NoiseModel noise);

/// Convenience for unlabeled models given as raw matrices.
SystemModel build_system_model(const Eigen::MatrixXd& h, const Eigen::MatrixXd& state_cov,
                               double sigma2);

/// log|A| for symmetric positive definite A; throws NotPositiveDefinite.
double log_det_spd(const Eigen::MatrixXd& a);

/// log|A| from an existing Cholesky factor.
double log_det_from_factor(const Eigen::LLT<Eigen::MatrixXd>& factor);

}  // namespace vuix

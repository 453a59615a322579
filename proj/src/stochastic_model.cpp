#include "vuix/stochastic_model.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "vuix/errors.hpp"

namespace vuix {

namespace {

constexpr double kPsdRelativeTolerance = 1e-10;
constexpr double kObsCovTolerance = 1e-12;
constexpr double kInverseTolerance = 1e-8;

std::string dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

StateCovariance toeplitz_state_covariance(Eigen::Index n, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw InvalidRho("rho must lie in [0, 1), got " + std::to_string(rho));
  }
  if (n < 1) throw DimensionMismatch("state dimension must be at least 1");
  StateCovariance cov;
  cov.rho = rho;
  cov.matrix.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // std::pow(0, 0) == 1 keeps the unit diagonal at rho = 0.
      cov.matrix(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    }
  }
  return cov;
}

void validate_state_covariance(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) {
    throw DimensionMismatch("state covariance must be square, got " + dims(cov.rows(), cov.cols()));
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw NotPositiveDefinite("state covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  const auto& values = eig.eigenvalues();
  const double largest = std::max(0.0, values.maxCoeff());
  if (values.minCoeff() < -kPsdRelativeTolerance * largest) {
    throw NotPositiveDefinite("state covariance is not positive semidefinite");
  }
}

double snr_db(const Eigen::MatrixXd& h, const Eigen::MatrixXd& state_cov, double sigma2) {
  const double signal = (h * state_cov * h.transpose()).trace();
  return 10.0 * std::log10(signal / (static_cast<double>(h.rows()) * sigma2));
}

NoiseModel sigma2_from_snr(const JacobianMatrix& jacobian, const StateCovariance& state_cov,
                           double snr_db_value) {
  const auto& h = jacobian.entries;
  if (state_cov.matrix.rows() != h.cols() || state_cov.matrix.cols() != h.cols()) {
    throw DimensionMismatch("state covariance " +
                            dims(state_cov.matrix.rows(), state_cov.matrix.cols()) +
                            " does not match H " + dims(h.rows(), h.cols()));
  }
  const double signal = (h * state_cov.matrix * h.transpose()).trace();
  if (!(signal > 0.0)) {
    throw DegenerateSignal("tr(H Sxx H^T) must be positive, got " + std::to_string(signal));
  }
  return {signal / (static_cast<double>(h.rows()) * std::pow(10.0, snr_db_value / 10.0))};
}

double log_det_from_factor(const Eigen::LLT<Eigen::MatrixXd>& factor) {
  return 2.0 * factor.matrixLLT().diagonal().array().log().sum();
}

double log_det_spd(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("matrix is not positive definite");
  }
  return log_det_from_factor(llt);
}

Eigen::MatrixXd SystemModel::signal_cov() const {
  return h() * state_cov_.matrix * h().transpose();
}

SystemModel build_system_model(JacobianMatrix jacobian, StateCovariance state_cov,
                               NoiseModel noise) {
  const auto& h = jacobian.entries;
  if (state_cov.matrix.rows() != h.cols() || state_cov.matrix.cols() != h.cols()) {
    throw DimensionMismatch("state covariance " +
                            dims(state_cov.matrix.rows(), state_cov.matrix.cols()) +
                            " does not match H " + dims(h.rows(), h.cols()));
  }
  if (jacobian.labeled() && static_cast<Eigen::Index>(jacobian.rows.size()) != h.rows()) {
    throw DimensionMismatch("row labels do not match the rows of H");
  }
  if (!(noise.sigma2 > 0.0) || !std::isfinite(noise.sigma2)) {
    throw ConfigError("noise variance must be positive, got " + std::to_string(noise.sigma2));
  }
  validate_state_covariance(state_cov.matrix);

  SystemModel model;
  const Eigen::Index m = h.rows();
  model.obs_cov_ = h * state_cov.matrix * h.transpose();
  model.obs_cov_ = 0.5 * (model.obs_cov_ + model.obs_cov_.transpose().eval());
  model.obs_cov_.diagonal().array() += noise.sigma2;

  model.obs_cov_factor_.compute(model.obs_cov_);
  if (model.obs_cov_factor_.info() != Eigen::Success) {
    throw NotPositiveDefinite("measurement covariance is not positive definite");
  }
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(m, m);
  model.obs_cov_inverse_ = model.obs_cov_factor_.solve(identity);
  // One Newton step, X + X (I - A X), recovers the last bits lost in the solve.
  model.obs_cov_inverse_ += model.obs_cov_inverse_ * (identity - model.obs_cov_ * model.obs_cov_inverse_);
  model.obs_cov_inverse_ =0.5 * (model.obs_cov_inverse_ + model.obs_cov_inverse_.transpose().eval());

  const double scale = std::max(1.0, model.obs_cov_.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd residual =
      model.obs_cov_ * model.obs_cov_inverse_ - Eigen::MatrixXd::Identity(m, m);
  if (residual.cwiseAbs().maxCoeff() > kInverseTolerance * scale) {
    throw NotPositiveDefinite("measurement covariance is too ill-conditioned to invert");
  }
  const Eigen::MatrixXd recomputed =
      h * state_cov.matrix * h.transpose() + noise.sigma2 * Eigen::MatrixXd::Identity(m, m);
  if ((recomputed - model.obs_cov_).cwiseAbs().maxCoeff() > kObsCovTolerance * scale) {
    throw NumericalError("measurement covariance assembly is inconsistent");
  }

  model.obs_cov_log_det_ = log_det_from_factor(model.obs_cov_factor_);
  model.sigma2_ = noise.sigma2;
  model.snr_db_ = snr_db(h, state_cov.matrix, noise.sigma2);
  model.jacobian_ = std::move(jacobian);
  model.state_cov_ = std::move(state_cov);
  return model;
}

SystemModel build_system_model(const Eigen::MatrixXd& h, const Eigen::MatrixXd& state_cov,
                               double sigma2) {
  return build_system_model(JacobianMatrix::unlabeled(h), StateCovariance{state_cov, {}},
                            NoiseModel{sigma2});
}

}  // namespace vuix

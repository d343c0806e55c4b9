#pragma once

#include <Eigen/Core>

#include "dcfg/error.hpp"

namespace dcfg {

/// Gaussian noise model, stored as the square-root information matrix: an
/// upper-triangular U with positive diagonal such that U^T U equals the
/// information matrix. Whitening multiplies by U, so |whiten(r)|^2 is the
/// squared Mahalanobis norm. Isotropic models keep only sigma.
class NoiseModel {
 public:
  enum class Kind { kGaussian, kIsotropic };

  static NoiseModel isotropic_sigma(int dim, double sigma);
  static NoiseModel isotropic_variance(int dim, double variance);
  /// U must be upper-triangular with strictly positive diagonal.
  static NoiseModel from_sqrt_information(const Eigen::MatrixXd& u);
  static NoiseModel from_information(const Eigen::MatrixXd& info);
  static NoiseModel from_covariance(const Eigen::MatrixXd& cov);
  /// Per-dimension standard deviations.
  static NoiseModel from_sigmas(const Eigen::VectorXd& sigmas);

  int dim() const { return dim_; }
  Kind kind() const { return kind_; }
  double sigma() const { return sigma_; }

  Eigen::VectorXd whiten(const Eigen::VectorXd& r) const;
  Eigen::VectorXd unwhiten(const Eigen::VectorXd& r) const;
  Eigen::MatrixXd whiten_jacobian(const Eigen::MatrixXd& j) const;
  double squared_mahalanobis(const Eigen::VectorXd& r) const;

  Eigen::MatrixXd sqrt_information() const;
  Eigen::MatrixXd information() const;
  Eigen::MatrixXd covariance() const;

 private:
  NoiseModel(Kind kind, int dim) : kind_(kind), dim_(dim) {}
  Kind kind_;
  int dim_;
  double sigma_ = 1.0;        // isotropic only
  Eigen::MatrixXd sqrt_info_;  // gaussian only
};

}  // namespace dcfg

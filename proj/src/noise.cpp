#include "dcfg/noise.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>

namespace dcfg {

NoiseModel NoiseModel::isotropic_sigma(int dim, double sigma) {
  if (dim < 1) throw InvalidArgument("noise dimension must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("sigma must be positive and finite");
  }
  NoiseModel m(Kind::kIsotropic, dim);
  m.sigma_ = sigma;
  return m;
}

NoiseModel NoiseModel::isotropic_variance(int dim, double variance) {
  return isotropic_sigma(dim, std::sqrt(variance));
}

NoiseModel NoiseModel::from_sqrt_information(const Eigen::MatrixXd& u) {
  if (u.rows() != u.cols() || u.rows() < 1) {
    throw InvalidArgument("sqrt information must be square");
  }
  for (int i = 0; i < u.rows(); ++i) {
    if (!(u(i, i) > 0.0)) {
      throw InvalidArgument("sqrt information needs a positive diagonal");
    }
    for (int j = 0; j < i; ++j) {
      if (u(i, j) != 0.0) {
        throw InvalidArgument("sqrt information must be upper-triangular");
      }
    }
  }
  NoiseModel m(Kind::kGaussian, static_cast<int>(u.rows()));
  m.sqrt_info_ = u;
  return m;
}

NoiseModel NoiseModel::from_information(const Eigen::MatrixXd& info) {
  if (info.rows() != info.cols()) throw InvalidArgument("information matrix must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("information matrix is not positive definite");
  }
  // info = L L^T, so U = L^T satisfies U^T U = info.
  return from_sqrt_information(Eigen::MatrixXd(llt.matrixL()).transpose());
}

NoiseModel NoiseModel::from_covariance(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw InvalidArgument("covariance must be square");
  return from_information(cov.inverse());
}

NoiseModel NoiseModel::from_sigmas(const Eigen::VectorXd& sigmas) {
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(sigmas.size(), sigmas.size());
  for (int i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0)) throw InvalidArgument("sigmas must be positive");
    u(i, i) = 1.0 / sigmas[i];
  }
  return from_sqrt_information(u);
}

Eigen::VectorXd NoiseModel::whiten(const Eigen::VectorXd& r) const {
  if (r.size() != dim_) throw DimensionMismatch("whiten: residual dimension mismatch");
  if (kind_ == Kind::kIsotropic) return r / sigma_;
  return sqrt_info_ * r;
}

Eigen::VectorXd NoiseModel::unwhiten(const Eigen::VectorXd& r) const {
  if (r.size() != dim_) throw DimensionMismatch("unwhiten: residual dimension mismatch");
  if (kind_ == Kind::kIsotropic) return r * sigma_;
  return sqrt_info_.triangularView<Eigen::Upper>().solve(r);
}

Eigen::MatrixXd NoiseModel::whiten_jacobian(const Eigen::MatrixXd& j) const {
  if (j.rows() != dim_) throw DimensionMismatch("whiten_jacobian: row mismatch");
  if (kind_ == Kind::kIsotropic) return j / sigma_;
  return sqrt_info_ * j;
}

double NoiseModel::squared_mahalanobis(const Eigen::VectorXd& r) const {
  return whiten(r).squaredNorm();
}

Eigen::MatrixXd NoiseModel::sqrt_information() const {
  if (kind_ == Kind::kIsotropic) {
    return Eigen::MatrixXd::Identity(dim_, dim_) / sigma_;
  }
  return sqrt_info_;
}

Eigen::MatrixXd NoiseModel::information() const {
  const Eigen::MatrixXd u = sqrt_information();
  return u.transpose() * u;
}

Eigen::MatrixXd NoiseModel::covariance() const { return information().inverse(); }

}  // namespace dcfg

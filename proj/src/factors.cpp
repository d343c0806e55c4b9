#include "dcfg/factors.hpp"

#include <cmath>

namespace dcfg {

namespace {

void require_continuous(const VariableKey& key, const char* what) {
  if (key.is_discrete()) {
    throw InvalidArgument(std::string(what) + " needs a continuous key");
  }
}

}  // namespace

Factor make_prior(const VariableKey& key, const Value& prior, const NoiseModel& noise) {
  require_continuous(key, "prior factor");
  if (!(kind_of(prior) == key.manifold())) {
    throw DimensionMismatch("prior value kind does not match the variable");
  }
  if (noise.dim() != key.tangent_dim()) {
    throw DimensionMismatch("prior noise dimension does not match the tangent dimension");
  }
  const ManifoldKind kind = key.manifold();
  Factor f;
  f.keys = {key};
  ContinuousResidualPayload payload{
      [prior](const std::vector<Value>& v) { return local_coordinates(prior, v[0]); },
      [prior, kind](const std::vector<Value>& v) {
        const Eigen::VectorXd r = local_coordinates(prior, v[0]);
        return std::vector<Eigen::MatrixXd>{right_jacobian_inverse(kind, r)};
      },
      noise};
  f.payload = std::move(payload);
  return f;
}

namespace {

Eigen::VectorXd between_residual(const Value& measurement, const std::vector<Value>& v) {
  return local_coordinates(measurement, between(v[0], v[1]));
}

std::vector<Eigen::MatrixXd> between_jacobians(const Value& measurement, const ManifoldKind& kind,
                                               const std::vector<Value>& v) {
  const Eigen::VectorXd r = between_residual(measurement, v);
  const Eigen::MatrixXd jr_inv = right_jacobian_inverse(kind, r);
  return {-jr_inv * adjoint(between(v[1], v[0])), jr_inv};
}

}  // namespace

Factor make_between(const VariableKey& a, const VariableKey& b, const Value& measurement,
                    const NoiseModel& noise) {
  require_continuous(a, "between factor");
  require_continuous(b, "between factor");
  if (!(a.manifold() == b.manifold()) || !(kind_of(measurement) == a.manifold())) {
    throw DimensionMismatch("between factor endpoints and measurement must share a manifold");
  }
  if (noise.dim() != a.tangent_dim()) {
    throw DimensionMismatch("between noise dimension does not match the tangent dimension");
  }
  const ManifoldKind kind = a.manifold();
  Factor f;
  f.keys = {a, b};
  ContinuousResidualPayload payload{
      [measurement](const std::vector<Value>& v) { return between_residual(measurement, v); },
      [measurement, kind](const std::vector<Value>& v) {
        return between_jacobians(measurement, kind, v);
      },
      noise};
  f.payload = std::move(payload);
  return f;
}

Factor make_discrete_table(const std::vector<VariableKey>& keys, const Eigen::VectorXd& values) {
  Factor f;
  f.keys = keys;
  f.payload = DiscreteTablePayload{values};
  return f;
}

Eigen::Vector3d range_bearing_predict(const Pose3& pose, const Eigen::Vector3d& point) {
  const Eigen::Vector3d b = pose.rotation.inverse() * (point - pose.translation);
  const double rho = std::sqrt(b.x() * b.x() + b.y() * b.y());
  return {std::atan2(b.y(), b.x()), std::atan2(b.z(), rho), b.norm()};
}

void range_bearing_jacobians(const Pose3& pose, const Eigen::Vector3d& point,
                             Eigen::Matrix<double, 3, 6>& j_pose, Eigen::Matrix3d& j_point) {
  const Eigen::Matrix3d rt = pose.rotation.inverse().matrix();
  const Eigen::Vector3d b = rt * (point - pose.translation);
  const double rho2 = b.x() * b.x() + b.y() * b.y();
  const double rho = std::sqrt(rho2);
  const double r2 = b.squaredNorm();
  const double r = std::sqrt(r2);

  Eigen::Matrix3d d_b;  // d[az, el, range] / d b
  d_b << -b.y() / rho2, b.x() / rho2, 0.0,
      -b.x() * b.z() / (r2 * rho), -b.y() * b.z() / (r2 * rho), rho / r2,
      b.x() / r, b.y() / r, b.z() / r;

  // Right perturbation of the pose: d b / d omega = [b]x, d b / d v = -I.
  Eigen::Matrix<double, 3, 6> d_pose;
  d_pose.block<3, 3>(0, 0) = skew(b);
  d_pose.block<3, 3>(0, 3) = -Eigen::Matrix3d::Identity();
  j_pose = d_b * d_pose;
  j_point = d_b * rt;
}

Factor make_range_bearing(const VariableKey& pose, const VariableKey& point,
                          const Eigen::Vector3d& measured, const NoiseModel& noise) {
  require_continuous(pose, "range-bearing factor");
  require_continuous(point, "range-bearing factor");
  if (!(pose.manifold() == ManifoldKind::se3()) ||
      !(point.manifold() == ManifoldKind::vector_space(3))) {
    throw DimensionMismatch("range-bearing expects an SE(3) pose and a 3-vector point");
  }
  if (noise.dim() != 3) throw DimensionMismatch("range-bearing noise must be 3-dimensional");
  Factor f;
  f.keys = {pose, point};
  ContinuousResidualPayload payload{
      [measured](const std::vector<Value>& v) {
        const Pose3& x = std::get<Pose3>(v[0]);
        const Eigen::VectorXd& p = std::get<Eigen::VectorXd>(v[1]);
        const Eigen::Vector3d predicted = range_bearing_predict(x, p.head<3>());
        Eigen::VectorXd r(3);
        r << wrap_angle(predicted[0] - measured[0]), predicted[1] - measured[1],
            predicted[2] - measured[2];
        return r;
      },
      [](const std::vector<Value>& v) {
        const Pose3& x = std::get<Pose3>(v[0]);
        const Eigen::VectorXd& p = std::get<Eigen::VectorXd>(v[1]);
        Eigen::Matrix<double, 3, 6> j_pose;
        Eigen::Matrix3d j_point;
        range_bearing_jacobians(x, p.head<3>(), j_pose, j_point);
        return std::vector<Eigen::MatrixXd>{j_pose, j_point};
      },
      noise};
  f.payload = std::move(payload);
  return f;
}

Factor make_switchable_between(const VariableKey& a, const VariableKey& b,
                               const VariableKey& switch_key, const Value& measurement,
                               const NoiseModel& inlier_noise, const NoiseModel& outlier_noise,
                               double inlier_weight, double outlier_weight) {
  require_continuous(a, "switchable factor");
  require_continuous(b, "switchable factor");
  if (!switch_key.is_discrete() || switch_key.cardinality() != 2) {
    throw InvalidArgument("switch key must be discrete with cardinality 2");
  }
  if (!(inlier_weight > 0.0 && inlier_weight < 1.0) ||
      !(outlier_weight > 0.0 && outlier_weight < 1.0)) {
    throw InvalidArgument("hypothesis weights must lie in (0, 1)");
  }
  const ManifoldKind kind = a.manifold();
  Factor f;
  f.keys = {a, b, switch_key};
  HybridResidualPayload payload;
  payload.num_continuous = 2;
  payload.residual = [measurement](const std::vector<Value>& v, std::size_t) {
    return between_residual(measurement, v);
  };
  payload.jacobian = [measurement, kind](const std::vector<Value>& v, std::size_t) {
    return between_jacobians(measurement, kind, v);
  };
  payload.noise = {inlier_noise, outlier_noise};
  payload.offset.resize(2);
  payload.offset << -std::log(inlier_weight), -std::log(outlier_weight);
  f.payload = std::move(payload);
  return f;
}

Factor make_max_mixture(const std::vector<VariableKey>& continuous_keys,
                        const VariableKey& selector, std::vector<MixtureComponent> components) {
  Factor f;
  f.keys = continuous_keys;
  f.keys.push_back(selector);
  f.payload = MaxMixturePayload{std::move(components)};
  return f;
}

}  // namespace dcfg

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <variant>

#include "dcfg/error.hpp"

namespace dcfg {

using Vector6 = Eigen::Matrix<double, 6, 1>;

enum class ManifoldType { kVectorSpace, kSO3, kSE2, kSE3 };

/// Identifies the space a continuous variable lives on. Tangent conventions
/// put rotational components first: SE(2) is [w, vx, vy], SE(3) is [w; v].
struct ManifoldKind {
  ManifoldType type = ManifoldType::kVectorSpace;
  int dim = 1;  // vector-space dimension; fixed for the Lie groups

  static ManifoldKind vector_space(int dim);
  static ManifoldKind so3() { return {ManifoldType::kSO3, 3}; }
  static ManifoldKind se2() { return {ManifoldType::kSE2, 3}; }
  static ManifoldKind se3() { return {ManifoldType::kSE3, 6}; }

  int tangent_dim() const;
  bool operator==(const ManifoldKind& o) const { return type == o.type && dim == o.dim; }
};

/// Rotation in SO(3), stored as a unit quaternion.
struct Rot3 {
  Eigen::Quaterniond q{1.0, 0.0, 0.0, 0.0};

  static Rot3 identity() { return {}; }
  static Rot3 exp(const Eigen::Vector3d& omega);
  /// Checked conversion; throws NotOnManifold when m is not a rotation.
  static Rot3 from_matrix(const Eigen::Matrix3d& m, double tol = 1e-8);

  /// Principal axis-angle tangent, rotation angle in [0, pi].
  Eigen::Vector3d log() const;
  Eigen::Matrix3d matrix() const { return q.toRotationMatrix(); }
  Rot3 inverse() const { return Rot3{q.conjugate()}; }
  Rot3 operator*(const Rot3& o) const { return Rot3{(q * o.q).normalized()}; }
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return q * p; }
  bool is_normalized(double tol = 1e-8) const { return std::abs(q.norm() - 1.0) <= tol; }
};

/// Planar rigid transform; heading kept in (-pi, pi].
struct Pose2 {
  double theta = 0.0;
  Eigen::Vector2d t{0.0, 0.0};

  Pose2() = default;
  Pose2(double theta_in, const Eigen::Vector2d& t_in);
  static Pose2 identity() { return {}; }
  static Pose2 exp(const Eigen::Vector3d& xi);  // [w, vx, vy]
  Eigen::Vector3d log() const;
  Eigen::Matrix2d rotation() const;
  Pose2 inverse() const;
  Pose2 operator*(const Pose2& o) const;
  Eigen::Vector2d operator*(const Eigen::Vector2d& p) const { return rotation() * p + t; }
};

/// Rigid transform in SE(3).
struct Pose3 {
  Rot3 rotation;
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  Pose3() = default;
  Pose3(const Rot3& r, const Eigen::Vector3d& t) : rotation(r), translation(t) {}
  static Pose3 identity() { return {}; }
  static Pose3 exp(const Vector6& xi);  // [w; v]
  Vector6 log() const;
  Pose3 inverse() const;
  Pose3 operator*(const Pose3& o) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
};

/// A manifold element. Vector-space values are plain VectorXd.
using Value = std::variant<Eigen::VectorXd, Rot3, Pose2, Pose3>;

ManifoldKind kind_of(const Value& v);

/// Group exponential; exp(0) = identity. Throws DimensionMismatch when the
/// tangent size does not match the kind.
Value exp_map(const ManifoldKind& kind, const Eigen::VectorXd& xi);

/// Principal logarithm. Throws NotOnManifold when membership is violated
/// (e.g. a denormalized quaternion) and DimensionMismatch when the value is
/// not of the requested kind.
Eigen::VectorXd log_map(const ManifoldKind& kind, const Value& g);
Eigen::VectorXd log_map(const Value& g);

Value compose(const Value& a, const Value& b);
Value inverse(const Value& g);
/// a^-1 * b; vector spaces subtract.
Value between(const Value& a, const Value& b);
/// g * exp(delta); vector spaces add.
Value retract(const Value& g, const Eigen::VectorXd& delta);
/// log(a^-1 * b).
Eigen::VectorXd local_coordinates(const Value& a, const Value& b);

/// Adjoint of g in the [rotation; translation] tangent ordering.
Eigen::MatrixXd adjoint(const Value& g);

/// Inverse right Jacobian of the exponential at tangent xi: the derivative of
/// log(exp(xi) * exp(d)) with respect to d at d = 0.
Eigen::MatrixXd right_jacobian_inverse(const ManifoldKind& kind, const Eigen::VectorXd& xi);

bool approx_equal(const Value& a, const Value& b, double tol);

// SO(3) building blocks reused by factor Jacobians.
Eigen::Matrix3d skew(const Eigen::Vector3d& w);
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& w);
Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& w);
double wrap_angle(double a);  // to (-pi, pi]

}  // namespace dcfg

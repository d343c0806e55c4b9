#include "dcfg/manifold.hpp"

#include <cmath>

namespace dcfg {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSmallAngle = 1e-8;  // branch switch for closed forms

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void throw_dim(const char* where) {
  throw DimensionMismatch(std::string(where) + ": tangent/size mismatch");
}
}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

ManifoldKind ManifoldKind::vector_space(int dim) {
  if (dim < 1) throw InvalidArgument("vector space dimension must be >= 1");
  return {ManifoldType::kVectorSpace, dim};
}

int ManifoldKind::tangent_dim() const {
  switch (type) {
    case ManifoldType::kVectorSpace:
      return dim;
    case ManifoldType::kSO3:
      return 3;
    case ManifoldType::kSE2:
      return 3;
    case ManifoldType::kSE3:
      return 6;
  }
  return 0;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = skew(w);
  double a, b;  // J = I + a*W + b*W^2
  if (theta < kSmallAngle) {
    a = 0.5 - theta2 / 24.0;
    b = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = skew(w);
  double b;  // Jinv = I - W/2 + b*W^2
  if (theta < kSmallAngle) {
    b = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    b = 1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() - 0.5 * W + b * W * W;
}

// ---------------------------------------------------------------------------
// Rot3

Rot3 Rot3::exp(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  Eigen::Quaterniond q;
  if (theta < kSmallAngle) {
    // sin(t/2)/t ~ 1/2 - t^2/48
    const double f = 0.5 - theta * theta / 48.0;
    q = Eigen::Quaterniond(1.0, f * omega.x(), f * omega.y(), f * omega.z());
    q.normalize();
  } else {
    const double half = 0.5 * theta;
    const double f = std::sin(half) / theta;
    q = Eigen::Quaterniond(std::cos(half), f * omega.x(), f * omega.y(), f * omega.z());
  }
  return Rot3{q};
}

Rot3 Rot3::from_matrix(const Eigen::Matrix3d& m, double tol) {
  // Orthogonality and orientation checks use a loose floor on top of the
  // caller tolerance so well-formed matrices from text files pass.
  const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
  if (ortho > std::max(tol, 1e-8) * 10.0) {
    throw NotOnManifold("matrix is not orthogonal (|R^T R - I| = " + std::to_string(ortho) + ")");
  }
  if (m.determinant() < 0.0) {
    throw NotOnManifold("matrix has negative determinant (a reflection, not a rotation)");
  }
  Eigen::Quaterniond q(m);
  q.normalize();
  return Rot3{q};
}

Eigen::Vector3d Rot3::log() const {
  if (!is_normalized()) {
    throw NotOnManifold("quaternion is not normalized");
  }
  Eigen::Quaterniond qn = q;
  if (qn.w() < 0.0) qn.coeffs() = -qn.coeffs();  // principal branch, angle in [0, pi]
  const double vnorm = qn.vec().norm();
  const double angle = 2.0 * std::atan2(vnorm, qn.w());
  if (vnorm < 1e-12) {
    return 2.0 * qn.vec();  // first-order: q ~ (1, w/2)
  }
  return (angle / vnorm) * qn.vec();
}

// ---------------------------------------------------------------------------
// Pose2

namespace {
// V(w) such that exp([w, v]) translates by V(w) v.
Eigen::Matrix2d se2_v(double w) {
  double a, b;  // V = a*I + b*J
  if (std::abs(w) < kSmallAngle) {
    a = 1.0 - w * w / 6.0;
    b = 0.5 * w - w * w * w / 24.0;
  } else {
    a = std::sin(w) / w;
    b = (1.0 - std::cos(w)) / w;
  }
  Eigen::Matrix2d m;
  m << a, -b, b, a;
  return m;
}

// dV/dw, used by the SE(2) Jacobians.
Eigen::Matrix2d se2_v_prime(double w) {
  double a, b;
  if (std::abs(w) < 1e-4) {
    a = -w / 3.0 + w * w * w / 30.0;
    b = 0.5 - w * w / 8.0;
  } else {
    const double w2 = w * w;
    a = (std::cos(w) * w - std::sin(w)) / w2;
    b = (std::sin(w) * w - (1.0 - std::cos(w))) / w2;
  }
  Eigen::Matrix2d m;
  m << a, -b, b, a;
  return m;
}

const Eigen::Matrix2d kJ2 = (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();
}  // namespace

Pose2::Pose2(double theta_in, const Eigen::Vector2d& t_in) : theta(wrap_angle(theta_in)), t(t_in) {}

Eigen::Matrix2d Pose2::rotation() const {
  Eigen::Matrix2d m;
  const double c = std::cos(theta), s = std::sin(theta);
  m << c, -s, s, c;
  return m;
}

Pose2 Pose2::exp(const Eigen::Vector3d& xi) {
  const double w = xi[0];
  return Pose2(w, se2_v(w) * xi.tail<2>());
}

Eigen::Vector3d Pose2::log() const {
  Eigen::Vector3d xi;
  xi[0] = theta;
  xi.tail<2>() = se2_v(theta).inverse() * t;
  return xi;
}

Pose2 Pose2::inverse() const {
  Pose2 r;
  r.theta = wrap_angle(-theta);
  r.t = -(r.rotation() * t);
  return r;
}

Pose2 Pose2::operator*(const Pose2& o) const {
  return Pose2(theta + o.theta, t + rotation() * o.t);
}

// ---------------------------------------------------------------------------
// Pose3

Pose3 Pose3::exp(const Vector6& xi) {
  const Eigen::Vector3d w = xi.head<3>();
  const Eigen::Vector3d v = xi.tail<3>();
  return Pose3(Rot3::exp(w), so3_left_jacobian(w) * v);
}

Vector6 Pose3::log() const {
  const Eigen::Vector3d w = rotation.log();
  Vector6 xi;
  xi.head<3>() = w;
  xi.tail<3>() = so3_left_jacobian_inverse(w) * translation;
  return xi;
}

Pose3 Pose3::inverse() const {
  const Rot3 rinv = rotation.inverse();
  return Pose3(rinv, -(rinv * translation));
}

Pose3 Pose3::operator*(const Pose3& o) const {
  return Pose3(rotation * o.rotation, translation + rotation * o.translation);
}

// ---------------------------------------------------------------------------
// Value dispatch

ManifoldKind kind_of(const Value& v) {
  return std::visit(
      Overloaded{[](const Eigen::VectorXd& x) {
                   return ManifoldKind::vector_space(static_cast<int>(x.size()));
                 },
                 [](const Rot3&) { return ManifoldKind::so3(); },
                 [](const Pose2&) { return ManifoldKind::se2(); },
                 [](const Pose3&) { return ManifoldKind::se3(); }},
      v);
}

Value exp_map(const ManifoldKind& kind, const Eigen::VectorXd& xi) {
  if (xi.size() != kind.tangent_dim()) throw_dim("exp_map");
  switch (kind.type) {
    case ManifoldType::kVectorSpace:
      return Value{Eigen::VectorXd(xi)};
    case ManifoldType::kSO3:
      return Value{Rot3::exp(xi.head<3>())};
    case ManifoldType::kSE2:
      return Value{Pose2::exp(xi.head<3>())};
    case ManifoldType::kSE3:
      return Value{Pose3::exp(xi.head<6>())};
  }
  throw InvalidArgument("exp_map: unknown manifold kind");
}

Eigen::VectorXd log_map(const Value& g) {
  return std::visit(Overloaded{[](const Eigen::VectorXd& x) { return Eigen::VectorXd(x); },
                               [](const Rot3& r) { return Eigen::VectorXd(r.log()); },
                               [](const Pose2& p) { return Eigen::VectorXd(p.log()); },
                               [](const Pose3& p) { return Eigen::VectorXd(p.log()); }},
                    g);
}

Eigen::VectorXd log_map(const ManifoldKind& kind, const Value& g) {
  if (!(kind_of(g) == kind)) throw_dim("log_map");
  return log_map(g);
}

Value compose(const Value& a, const Value& b) {
  if (a.index() != b.index()) throw_dim("compose");
  return std::visit(
      Overloaded{[&](const Eigen::VectorXd& x) -> Value {
                   const auto& y = std::get<Eigen::VectorXd>(b);
                   if (x.size() != y.size()) throw_dim("compose");
                   return Value{Eigen::VectorXd(x + y)};
                 },
                 [&](const Rot3& r) -> Value { return Value{r * std::get<Rot3>(b)}; },
                 [&](const Pose2& p) -> Value { return Value{p * std::get<Pose2>(b)}; },
                 [&](const Pose3& p) -> Value { return Value{p * std::get<Pose3>(b)}; }},
      a);
}

Value inverse(const Value& g) {
  return std::visit(Overloaded{[](const Eigen::VectorXd& x) -> Value {
                                 return Value{Eigen::VectorXd(-x)};
                               },
                               [](const Rot3& r) -> Value { return Value{r.inverse()}; },
                               [](const Pose2& p) -> Value { return Value{p.inverse()}; },
                               [](const Pose3& p) -> Value { return Value{p.inverse()}; }},
                    g);
}

Value between(const Value& a, const Value& b) { return compose(inverse(a), b); }

Value retract(const Value& g, const Eigen::VectorXd& delta) {
  return compose(g, exp_map(kind_of(g), delta));
}

Eigen::VectorXd local_coordinates(const Value& a, const Value& b) {
  return log_map(between(a, b));
}

Eigen::MatrixXd adjoint(const Value& g) {
  return std::visit(
      Overloaded{[](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
                   return Eigen::MatrixXd::Identity(x.size(), x.size());
                 },
                 [](const Rot3& r) -> Eigen::MatrixXd { return r.matrix(); },
                 [](const Pose2& p) -> Eigen::MatrixXd {
                   Eigen::MatrixXd ad = Eigen::MatrixXd::Identity(3, 3);
                   ad.block<2, 2>(1, 1) = p.rotation();
                   ad(1, 0) = p.t.y();
                   ad(2, 0) = -p.t.x();
                   return ad;
                 },
                 [](const Pose3& p) -> Eigen::MatrixXd {
                   const Eigen::Matrix3d R = p.rotation.matrix();
                   Eigen::MatrixXd ad = Eigen::MatrixXd::Zero(6, 6);
                   ad.block<3, 3>(0, 0) = R;
                   ad.block<3, 3>(3, 3) = R;
                   ad.block<3, 3>(3, 0) = skew(p.translation) * R;
                   return ad;
                 }},
      g);
}

namespace {

// Q block of the SE(3) left Jacobian (rotation-first tangent ordering).
Eigen::Matrix3d se3_q(const Eigen::Vector3d& w, const Eigen::Vector3d& v) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = skew(w);
  const Eigen::Matrix3d V = skew(v);
  double c1, c2, c3;
  if (theta < 1e-4) {
    c1 = 1.0 / 6.0 - theta2 / 120.0;
    c2 = -1.0 / 24.0 + theta2 / 720.0;   // (1 - t^2/2 - cos t) / t^4
    c3 = -1.0 / 120.0 + theta2 / 5040.0; // (t - sin t - t^3/6) / t^5
  } else {
    const double st = std::sin(theta), ct = std::cos(theta);
    const double t4 = theta2 * theta2;
    c1 = (theta - st) / (theta2 * theta);
    c2 = (1.0 - 0.5 * theta2 - ct) / t4;
    c3 = (theta - st - theta2 * theta / 6.0) / (t4 * theta);
  }
  Eigen::Matrix3d q = 0.5 * V;
  q += c1 * (W * V + V * W + W * V * W);
  q -= c2 * (W * W * V + V * W * W - 3.0 * W * V * W);
  q -= 0.5 * (c2 - 3.0 * c3) * (W * V * W * W + W * W * V * W);
  return q;
}

Eigen::MatrixXd se3_left_jacobian_inverse(const Vector6& xi) {
  const Eigen::Vector3d w = xi.head<3>();
  const Eigen::Vector3d v = xi.tail<3>();
  const Eigen::Matrix3d jinv = so3_left_jacobian_inverse(w);
  const Eigen::Matrix3d q = se3_q(w, v);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(6, 6);
  out.block<3, 3>(0, 0) = jinv;
  out.block<3, 3>(3, 3) = jinv;
  out.block<3, 3>(3, 0) = -jinv * q * jinv;
  return out;
}

Eigen::MatrixXd se2_left_jacobian_inverse(const Eigen::Vector3d& xi) {
  const double w = xi[0];
  const Eigen::Vector2d v = xi.tail<2>();
  const Eigen::Matrix2d V = se2_v(w);
  const Eigen::Vector2d col = (-kJ2 * V + se2_v_prime(w)) * v;
  const Eigen::Matrix2d Vinv = V.inverse();
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(3, 3);
  out.block<2, 2>(1, 1) = Vinv;
  out.block<2, 1>(1, 0) = -Vinv * col;
  return out;
}

}  // namespace

Eigen::MatrixXd right_jacobian_inverse(const ManifoldKind& kind, const Eigen::VectorXd& xi) {
  if (xi.size() != kind.tangent_dim()) throw_dim("right_jacobian_inverse");
  switch (kind.type) {
    case ManifoldType::kVectorSpace:
      return Eigen::MatrixXd::Identity(kind.dim, kind.dim);
    case ManifoldType::kSO3:
      // Jr(x) = Jl(-x)
      return so3_left_jacobian_inverse(-xi.head<3>());
    case ManifoldType::kSE2:
      return se2_left_jacobian_inverse(-xi.head<3>());
    case ManifoldType::kSE3:
      return se3_left_jacobian_inverse(-xi.head<6>());
  }
  throw InvalidArgument("right_jacobian_inverse: unknown manifold kind");
}

bool approx_equal(const Value& a, const Value& b, double tol) {
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<Eigen::VectorXd>(a)) {
    const auto& x = std::get<Eigen::VectorXd>(a);
    const auto& y = std::get<Eigen::VectorXd>(b);
    return x.size() == y.size() && (x - y).lpNorm<Eigen::Infinity>() <= tol;
  }
  return local_coordinates(a, b).lpNorm<Eigen::Infinity>() <= tol;
}

}  // namespace dcfg

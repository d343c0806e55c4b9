#pragma once

#include "dcfg/factor.hpp"

namespace dcfg {

/// Prior on a single variable: r = log(prior^-1 * x) on manifolds, x - prior
/// on vector spaces.
Factor make_prior(const VariableKey& key, const Value& prior, const NoiseModel& noise);

/// Relative-pose constraint: r = log(measurement^-1 * (a^-1 * b)).
Factor make_between(const VariableKey& a, const VariableKey& b, const Value& measurement,
                    const NoiseModel& noise);

/// Nonnegative potential over discrete keys, linear domain.
Factor make_discrete_table(const std::vector<VariableKey>& keys, const Eigen::VectorXd& values);

/// Range-bearing observation of a 3D point from an SE(3) pose. The
/// measurement and residual are [azimuth, elevation, range] in the pose's
/// body frame; the azimuth residual is wrapped.
Factor make_range_bearing(const VariableKey& pose, const VariableKey& point,
                          const Eigen::Vector3d& measured, const NoiseModel& noise);

/// Range-bearing prediction and Jacobian blocks, shared with association
/// gating. Blocks are d(h)/d(pose tangent) and d(h)/d(point).
Eigen::Vector3d range_bearing_predict(const Pose3& pose, const Eigen::Vector3d& point);
void range_bearing_jacobians(const Pose3& pose, const Eigen::Vector3d& point,
                             Eigen::Matrix<double, 3, 6>& j_pose, Eigen::Matrix3d& j_point);

/// Relative-pose constraint with a binary switch choosing between the inlier
/// and outlier noise models; the per-hypothesis offsets are -log of the prior
/// weights so conditioned tables compare correctly across assignments.
Factor make_switchable_between(const VariableKey& a, const VariableKey& b,
                               const VariableKey& switch_key, const Value& measurement,
                               const NoiseModel& inlier_noise, const NoiseModel& outlier_noise,
                               double inlier_weight, double outlier_weight);

/// Max-mixture over components sharing the factor's continuous keys; the
/// selector key picks the active component and contributes -log(weight).
Factor make_max_mixture(const std::vector<VariableKey>& continuous_keys,
                        const VariableKey& selector, std::vector<MixtureComponent> components);

}  // namespace dcfg

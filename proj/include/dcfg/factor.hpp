#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <variant>
#include <vector>

#include "dcfg/key.hpp"
#include "dcfg/noise.hpp"

namespace dcfg {

/// Joint-assignment indexing over a list of discrete cardinalities, row-major
/// with the last key fastest.
std::size_t joint_table_size(const std::vector<int>& cards);
std::size_t joint_index(const std::vector<int>& cards, const std::vector<int>& values);
void unflatten_index(std::size_t index, const std::vector<int>& cards, std::vector<int>& values);

/// Residual over continuous values, given in the factor's key order.
using ResidualFn = std::function<Eigen::VectorXd(const std::vector<Value>&)>;
/// One Jacobian block per continuous key, rows = residual dim, cols = tangent
/// dim of the key, with respect to right (retract) perturbations.
using JacobianFn = std::function<std::vector<Eigen::MatrixXd>(const std::vector<Value>&)>;
/// Hybrid variants additionally take the joint index of the factor's discrete
/// keys.
using HybridResidualFn =
    std::function<Eigen::VectorXd(const std::vector<Value>&, std::size_t)>;
using HybridJacobianFn =
    std::function<std::vector<Eigen::MatrixXd>(const std::vector<Value>&, std::size_t)>;

/// Nonnegative potential over the factor's discrete keys, linear domain.
struct DiscreteTablePayload {
  Eigen::VectorXd values;
};

struct ContinuousResidualPayload {
  ResidualFn residual;
  JacobianFn jacobian;  // empty -> central finite differences
  NoiseModel noise;
};

/// -log f(C, d) = 0.5 |whiten_d(r(C, d))|^2 + offset[d]. The per-assignment
/// offset carries the constants that make costs comparable across discrete
/// assignments (e.g. hypothesis prior weights).
struct HybridResidualPayload {
  std::size_t num_continuous = 0;  // keys[0..n) continuous, keys[n..) discrete
  HybridResidualFn residual;
  HybridJacobianFn jacobian;        // empty -> finite differences
  std::vector<NoiseModel> noise;    // one per joint discrete assignment
  Eigen::VectorXd offset;           // one per joint discrete assignment
};

/// f = max_k w_k exp(-0.5 |whiten_k(r_k)|^2); the selector key (last key of
/// the factor) picks the active component.
struct MixtureComponent {
  double weight = 1.0;
  ResidualFn residual;
  JacobianFn jacobian;
  NoiseModel noise;
};

struct MaxMixturePayload {
  std::vector<MixtureComponent> components;
};

using FactorPayload = std::variant<DiscreteTablePayload, ContinuousResidualPayload,
                                   HybridResidualPayload, MaxMixturePayload>;

/// One term of the posterior product. Owns its measurement closure and noise.
struct Factor {
  std::vector<VariableKey> keys;
  FactorPayload payload;

  std::size_t num_continuous_keys() const;
  std::vector<VariableKey> continuous_keys() const;
  std::vector<VariableKey> discrete_keys() const;
  std::vector<int> discrete_cardinalities() const;
  bool has_residual() const;  // contributes rows to a linearization

  /// Basic payload/keys consistency; throws InvalidArgument on violations.
  void validate() const;
};

}  // namespace dcfg

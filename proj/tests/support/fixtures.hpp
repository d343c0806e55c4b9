#pragma once

// Shared problem fixtures for the unit and acceptance suites.

#include "dcfg/factors.hpp"
#include "dcfg/graph.hpp"
#include "dcfg/random.hpp"

namespace dcfg::test {

/// Scalar switching system: continuous states y_t, modes d_t with transition
/// tables; conditioning on the y values leaves a hidden Markov chain.
struct SwitchingChain {
  FactorGraph graph;
  std::vector<KeyId> mode_keys;
  std::map<KeyId, Value> states;
  int num_states = 0;
  int num_steps = 0;
  std::vector<Eigen::MatrixXd> transition_costs;  // (prev, next), -log domain
};

SwitchingChain make_switching_chain(Rng& rng, int num_states, int num_steps);

/// Independent central-difference Jacobian blocks through retract.
std::vector<Eigen::MatrixXd> finite_difference_jacobians(
    const std::function<Eigen::VectorXd(const std::vector<Value>&)>& fn,
    const std::vector<Value>& values, double h = 1e-6);

/// Max relative error between a factor's analytic Jacobians and finite
/// differences at the given point (hybrid payloads at the given assignment).
double factor_jacobian_error(const Factor& factor, const std::vector<Value>& values,
                             std::size_t discrete_assignment = 0);

}  // namespace dcfg::test

#pragma once

#include <map>
#include <utility>
#include <vector>

#include "dcfg/linearize.hpp"

namespace dcfg {

struct OptimizerParams {
  int max_iterations = 100;
  double relative_decrease_tol = 1e-6;
  double absolute_decrease_tol = 1e-8;
  double lm_lambda_init = 1e-4;
  double lm_lambda_factor = 10.0;
  double lm_lambda_max = 1e10;
};

enum class TerminationReason { kConverged, kLambdaMax, kIterationCap };

struct OptimizeStats {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;      // linearizations
  int accepted_steps = 0;  // strict decreases applied
  TerminationReason reason = TerminationReason::kIterationCap;
  bool converged() const { return reason != TerminationReason::kIterationCap; }
};

/// Levenberg-Marquardt with explicit accept/reject on the true objective: a
/// step is applied only if it strictly decreases residual_objective, otherwise
/// lambda grows. The damping scales the diagonal of J^T J multiplicatively.
/// Throws SingularSystem when the damped normal matrix is still not positive
/// definite at lm_lambda_max.
std::pair<std::map<KeyId, Value>, OptimizeStats> optimize_continuous(
    const FactorGraph& graph, const std::map<KeyId, int>& discrete,
    std::map<KeyId, Value> initial, const OptimizerParams& params = {});

/// Laplace covariance blocks at (continuous, discrete): blocks of (J^T J)^-1
/// extracted by back-substitution on the sparse Cholesky factor; only the
/// requested blocks are densified. criticality_warning is set (not thrown)
/// when the gradient norm exceeds 1e-5 * (1 + |objective|).
struct MarginalCovariance {
  std::map<KeyId, Eigen::MatrixXd> blocks;
  std::map<std::pair<KeyId, KeyId>, Eigen::MatrixXd> joint_blocks;
  double gradient_norm = 0.0;
  bool criticality_warning = false;
};

MarginalCovariance recover_covariance(
    const FactorGraph& graph, const std::map<KeyId, int>& discrete,
    const std::map<KeyId, Value>& continuous, const std::vector<KeyId>& keys,
    const std::vector<std::pair<KeyId, KeyId>>& pairs = {});

}  // namespace dcfg

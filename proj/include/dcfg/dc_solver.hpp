#pragma once

#include <functional>
#include <string>

#include "dcfg/discrete.hpp"
#include "dcfg/optimize.hpp"

namespace dcfg {

struct DcParams {
  int max_outer_iterations = 50;
  double relative_decrease_tol = 1e-6;
  OptimizerParams continuous_params;
  bool compute_marginals_each_iter = false;
  int discrete_width_cap = kDefaultWidthCap;
};

struct DcIterationRecord {
  double objective_before = 0.0;
  double objective_after_discrete = 0.0;
  double objective_after_continuous = 0.0;
  int discrete_changed = 0;  // flipped discrete variables vs. the previous iterate
  double continuous_step_norm = 0.0;  // tangent norm of the continuous update
  double wall_time_discrete = 0.0;
  double wall_time_continuous = 0.0;
  int continuous_accepted_steps = 0;
};

struct SolveTrace {
  std::vector<DcIterationRecord> iterations;
  std::string termination;
  // Set by incremental_extend: size of the restricted first discrete phase.
  int first_phase_components = 0;
  int first_phase_variables = 0;
  // Populated when DcParams::compute_marginals_each_iter is on.
  std::vector<std::map<KeyId, Eigen::VectorXd>> per_iteration_marginals;
};

struct DcResult {
  HybridAssignment estimate;
  SolveTrace trace;
};

/// Called after each discrete phase with the conditioning point and the fresh
/// discrete assignment; used by tests and instrumentation.
using DiscretePhaseObserver = std::function<void(
    int iteration, const std::map<KeyId, Value>& continuous, const std::map<KeyId, int>& discrete)>;

/// Alternates exact discrete solves (max-product on the conditioned graph)
/// with descent continuous solves. The first action is always a discrete
/// solve at the initial continuous estimate; initial.discrete, when it covers
/// all discrete variables, seeds the objective baseline and flip counting.
/// Stops on relative objective decrease below tolerance, on a fixed point
/// (no discrete flips and converged continuous phase, or no accepted steps
/// and converged), or at the iteration cap. Errors from the phases are
/// rethrown with the outer-iteration index attached.
DcResult solve(const FactorGraph& graph, const HybridAssignment& initial,
               const DcParams& params = {}, const DiscretePhaseObserver& observer = nullptr);

/// Grows the graph in place, then re-solves warm-started from the previous
/// solution. When every new discrete variable conditions into a component
/// disjoint from the old discrete variables, only those components are solved
/// in the restricted first phase (counts reported in the trace). `previous`
/// must cover all old continuous variables plus initial values for the new
/// ones.
DcResult incremental_extend(FactorGraph& graph, const std::vector<VariableKey>& new_variables,
                            const std::vector<Factor>& new_factors,
                            const HybridAssignment& previous, const DcParams& params = {},
                            const DiscretePhaseObserver& observer = nullptr);

}  // namespace dcfg

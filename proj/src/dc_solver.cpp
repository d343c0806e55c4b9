#include "dcfg/dc_solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "dcfg/parallel.hpp"

namespace dcfg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool covers_all_discrete(const FactorGraph& graph, const std::map<KeyId, int>& d) {
  for (const auto& key : graph.discrete_variables()) {
    if (!d.count(key.id)) return false;
  }
  return true;
}

int count_flips(const std::map<KeyId, int>& a, const std::map<KeyId, int>& b) {
  int flips = 0;
  for (const auto& [id, v] : b) {
    auto it = a.find(id);
    if (it == a.end() || it->second != v) ++flips;
  }
  return flips;
}

// Discrete MPE over selected components; unlisted variables keep `base`.
std::map<KeyId, int> solve_components(const std::vector<ConditionedDiscreteGraph>& comps,
                                      const std::vector<std::size_t>& which,
                                      const std::map<KeyId, int>& base, int width_cap) {
  std::map<KeyId, int> out = base;
  std::vector<MpeResult> partial(which.size());
  parallel_for(which.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& comp = comps[which[i]];
      partial[i] = solve_mpe(comp, min_fill_ordering(comp), width_cap);
    }
  });
  for (const auto& p : partial) {
    for (const auto& [id, v] : p.assignment) out[id] = v;
  }
  return out;
}

}  // namespace

DcResult solve(const FactorGraph& graph, const HybridAssignment& initial,
               const DcParams& params, const DiscretePhaseObserver& observer) {
  if (params.max_outer_iterations < 1 || !(params.relative_decrease_tol > 0.0)) {
    throw InvalidArgument("alternating solver parameters must be positive");
  }
  for (const auto& key : graph.continuous_variables()) {
    if (!initial.continuous.count(key.id)) {
      throw MissingAssignment("no initial value for continuous key " + std::to_string(key.id));
    }
  }

  DcResult result;
  std::map<KeyId, Value> c = initial.continuous;
  std::map<KeyId, int> d_prev = initial.discrete;
  bool have_prev_d = covers_all_discrete(graph, d_prev);
  double prev_objective = kInf;
  if (have_prev_d) {
    prev_objective = graph.objective({c, d_prev}, true);
  }

  result.trace.termination = "iteration_cap";
  for (int iter = 0; iter < params.max_outer_iterations; ++iter) {
    DcIterationRecord rec;
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const ConditionedDiscreteGraph cond = condition(graph, c);
      const auto comps = components(cond);
      std::vector<std::size_t> all(comps.size());
      for (std::size_t i = 0; i < comps.size(); ++i) all[i] = i;
      const std::map<KeyId, int> d = solve_components(comps, all, {}, params.discrete_width_cap);
      rec.discrete_changed = have_prev_d ? count_flips(d_prev, d) : 0;
      rec.objective_after_discrete = graph.objective({c, d}, true);
      rec.objective_before = have_prev_d ? prev_objective : rec.objective_after_discrete;
      rec.wall_time_discrete = seconds_since(t0);
      if (observer) observer(iter, c, d);
      if (params.compute_marginals_each_iter) {
        result.trace.per_iteration_marginals.push_back(
            marginals(cond, params.discrete_width_cap));
      }

      const auto t1 = std::chrono::steady_clock::now();
      auto [c_next, stats] = optimize_continuous(graph, d, c, params.continuous_params);
      rec.wall_time_continuous = seconds_since(t1);
      rec.continuous_accepted_steps = stats.accepted_steps;
      double step_sq = 0.0;
      for (const auto& [id, value] : c_next) {
        step_sq += local_coordinates(c.at(id), value).squaredNorm();
      }
      rec.continuous_step_norm = std::sqrt(step_sq);
      rec.objective_after_continuous = graph.objective({c_next, d}, true);
      result.trace.iterations.push_back(rec);

      const bool discrete_fixed = have_prev_d && rec.discrete_changed == 0;
      const double decrease = prev_objective - rec.objective_after_continuous;
      const double relative =
          decrease / std::max(std::abs(prev_objective), 1e-300);

      c = std::move(c_next);
      d_prev = d;
      have_prev_d = true;
      prev_objective = rec.objective_after_continuous;

      if (stats.converged() && (discrete_fixed || stats.accepted_steps == 0)) {
        // Fixed point: the continuous estimate did not move (or the discrete
        // assignment is stationary and the continuous solver is converged),
        // so re-conditioning would reproduce the same subproblems.
        result.trace.termination = "fixed_point";
        break;
      }
      if (std::isfinite(prev_objective) && std::isfinite(decrease) &&
          relative < params.relative_decrease_tol) {
        result.trace.termination = "relative_decrease";
        break;
      }
    } catch (Error& e) {
      e.outer_iteration = iter;
      throw;
    }
  }

  result.estimate.continuous = std::move(c);
  result.estimate.discrete = std::move(d_prev);
  return result;
}

DcResult incremental_extend(FactorGraph& graph, const std::vector<VariableKey>& new_variables,
                            const std::vector<Factor>& new_factors,
                            const HybridAssignment& previous, const DcParams& params,
                            const DiscretePhaseObserver& observer) {
  // Validate initial values before touching the graph.
  for (const auto& key : graph.continuous_variables()) {
    if (!previous.continuous.count(key.id)) {
      throw MissingAssignment("no initial value for continuous key " + std::to_string(key.id));
    }
  }
  for (const auto& key : new_variables) {
    if (!key.is_discrete() && !previous.continuous.count(key.id)) {
      throw MissingAssignment("no initial value for new continuous key " +
                              std::to_string(key.id));
    }
  }

  std::set<KeyId> old_discrete;
  for (const auto& key : graph.discrete_variables()) old_discrete.insert(key.id);

  std::set<KeyId> new_discrete;
  for (const auto& key : new_variables) {
    graph.add_variable(key);
    if (key.is_discrete()) {
      if (!old_discrete.count(key.id)) new_discrete.insert(key.id);
    }
  }
  for (const auto& f : new_factors) graph.add_factor(f);

  // Restricted first phase: solve only components made of new discrete
  // variables, provided they do not touch old ones.
  HybridAssignment warm = previous;
  int first_components = 0, first_variables = 0;
  if (!new_discrete.empty()) {
    const ConditionedDiscreteGraph cond = condition(graph, warm.continuous);
    const auto comps = components(cond);
    bool disjoint = true;
    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      bool has_new = false, has_old = false;
      for (const auto& [id, card] : comps[i].cardinalities) {
        if (new_discrete.count(id)) {
          has_new = true;
        } else {
          has_old = true;
        }
      }
      if (has_new && has_old) disjoint = false;
      if (has_new) fresh.push_back(i);
    }
    if (disjoint) {
      first_components = static_cast<int>(fresh.size());
      for (std::size_t i : fresh) {
        first_variables += static_cast<int>(comps[i].cardinalities.size());
      }
      warm.discrete =
          solve_components(comps, fresh, warm.discrete, params.discrete_width_cap);
    } else {
      std::vector<std::size_t> all(comps.size());
      for (std::size_t i = 0; i < comps.size(); ++i) all[i] = i;
      first_components = static_cast<int>(comps.size());
      first_variables = static_cast<int>(cond.cardinalities.size());
      warm.discrete = solve_components(comps, all, warm.discrete, params.discrete_width_cap);
    }
  }

  DcResult result = solve(graph, warm, params, observer);
  result.trace.first_phase_components = first_components;
  result.trace.first_phase_variables = first_variables;
  return result;
}

}  // namespace dcfg

#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "dcfg/graph.hpp"

namespace dcfg {

/// Cost table over a set of discrete keys, -log domain, row-major with the
/// last key fastest. origin_factor points back at the source factor.
struct CostTable {
  std::vector<KeyId> keys;
  std::vector<int> cards;
  Eigen::VectorXd cost;
  std::size_t origin_factor = 0;
};

/// The discrete factor graph obtained by fixing the continuous variables:
/// hybrid factors become cost tables, pure discrete factors pass through in
/// -log form, pure continuous factors drop out as constants.
struct ConditionedDiscreteGraph {
  std::map<KeyId, int> cardinalities;
  std::vector<CostTable> tables;
};

struct EliminationOrdering {
  std::vector<KeyId> order;
};

struct MpeResult {
  std::map<KeyId, int> assignment;
  double cost = 0.0;
  int induced_width = 0;
};

inline constexpr int kDefaultWidthCap = 12;

/// Conditions the graph on the continuous assignment. Only continuous
/// variables adjacent to hybrid or mixture factors must be assigned.
ConditionedDiscreteGraph condition(const FactorGraph& graph,
                                   const std::map<KeyId, Value>& continuous);

/// Connected components of the factor-adjacency structure, ordered by their
/// smallest key id. Isolated variables become singleton components.
std::vector<ConditionedDiscreteGraph> components(const ConditionedDiscreteGraph& g);

/// Greedy min-fill ordering; ties broken by smallest key id.
EliminationOrdering min_fill_ordering(const ConditionedDiscreteGraph& g);

/// Exact minimum-cost assignment by min-sum elimination along the ordering.
/// Ties break toward the smallest category index. Throws EmptySupport when no
/// finite-cost joint assignment exists and TreewidthExceeded when elimination
/// creates a scope wider than width_cap.
MpeResult solve_mpe(const ConditionedDiscreteGraph& g, const EliminationOrdering& ordering,
                    int width_cap = kDefaultWidthCap);

/// Convenience: per-component min-fill + solve_mpe, merged.
MpeResult solve_mpe(const ConditionedDiscreteGraph& g, int width_cap = kDefaultWidthCap);

/// Exact per-variable marginals by sum-product elimination in log domain,
/// normalized per connected component. Each vector sums to one.
std::map<KeyId, Eigen::VectorXd> marginals(const ConditionedDiscreteGraph& g,
                                           int width_cap = kDefaultWidthCap);

}  // namespace dcfg

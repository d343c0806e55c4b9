#pragma once

#include <map>
#include <vector>

#include "dcfg/factor.hpp"

namespace dcfg {

/// A full assignment: manifold elements for continuous keys, category indices
/// for discrete keys. Ordered maps keep iteration deterministic.
struct HybridAssignment {
  std::map<KeyId, Value> continuous;
  std::map<KeyId, int> discrete;
};

/// Bipartite variable/factor structure, evaluable to the scalar negative-log
/// objective. Construction is single-writer; after that the graph is
/// immutable in practice and can be shared across threads.
class FactorGraph {
 public:
  /// Registers a variable. Re-adding an identical key is a no-op; re-adding
  /// the same id with a different kind throws DuplicateKey.
  void add_variable(const VariableKey& key);

  /// Appends a factor and returns its stable index. All keys must already be
  /// registered (UnknownKey otherwise).
  std::size_t add_factor(Factor factor);

  const std::vector<Factor>& factors() const { return factors_; }
  const std::map<KeyId, VariableKey>& variables() const { return variables_; }
  const VariableKey& variable(KeyId id) const;
  bool has_variable(KeyId id) const { return variables_.count(id) > 0; }

  std::vector<VariableKey> discrete_variables() const;
  std::vector<VariableKey> continuous_variables() const;

  /// Sum of -log f_k at the assignment. Residual factors contribute
  /// 0.5 |whitened residual|^2 (plus the per-assignment offset for hybrid
  /// factors), discrete tables contribute -log(entry). A zero table entry
  /// throws NonPositiveDensity unless infinite_ok, in which case the result
  /// is +infinity.
  double objective(const HybridAssignment& assignment, bool infinite_ok = false) const;

  /// Contribution of one factor; same conventions as objective().
  double factor_cost(std::size_t index, const HybridAssignment& assignment,
                     bool infinite_ok = false) const;

 private:
  std::map<KeyId, VariableKey> variables_;
  std::vector<Factor> factors_;
};

/// Values of the factor's continuous keys pulled from the assignment map, in
/// key order. Throws MissingAssignment naming the first absent key.
std::vector<Value> continuous_values_for(const Factor& factor,
                                         const std::map<KeyId, Value>& continuous);

/// Joint index of the factor's discrete keys under the assignment map.
std::size_t discrete_joint_index_for(const Factor& factor,
                                     const std::map<KeyId, int>& discrete);

/// Sum of squared whitened residual norms (no 1/2, no offsets, no discrete
/// tables): the quadratic "cost" convention used by result tables.
double quadratic_cost(const FactorGraph& graph, const HybridAssignment& assignment);

}  // namespace dcfg

#include "dcfg/graph.hpp"

#include <cmath>
#include <limits>

namespace dcfg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void FactorGraph::add_variable(const VariableKey& key) {
  auto it = variables_.find(key.id);
  if (it != variables_.end()) {
    if (!it->second.same_kind(key)) {
      throw DuplicateKey("variable " + std::to_string(key.id) +
                         " already registered with a different kind");
    }
    return;  // identical re-add is a no-op
  }
  variables_.emplace(key.id, key);
}

std::size_t FactorGraph::add_factor(Factor factor) {
  factor.validate();
  for (const auto& k : factor.keys) {
    auto it = variables_.find(k.id);
    if (it == variables_.end()) {
      throw UnknownKey("factor references unregistered variable " + std::to_string(k.id));
    }
    if (!it->second.same_kind(k)) {
      throw UnknownKey("factor key " + std::to_string(k.id) +
                       " disagrees with the registered variable kind");
    }
  }
  factors_.push_back(std::move(factor));
  return factors_.size() - 1;
}

const VariableKey& FactorGraph::variable(KeyId id) const {
  auto it = variables_.find(id);
  if (it == variables_.end()) {
    throw UnknownKey("no variable with id " + std::to_string(id));
  }
  return it->second;
}

std::vector<VariableKey> FactorGraph::discrete_variables() const {
  std::vector<VariableKey> out;
  for (const auto& [id, key] : variables_) {
    if (key.is_discrete()) out.push_back(key);
  }
  return out;
}

std::vector<VariableKey> FactorGraph::continuous_variables() const {
  std::vector<VariableKey> out;
  for (const auto& [id, key] : variables_) {
    if (!key.is_discrete()) out.push_back(key);
  }
  return out;
}

std::vector<Value> continuous_values_for(const Factor& factor,
                                         const std::map<KeyId, Value>& continuous) {
  std::vector<Value> values;
  values.reserve(factor.num_continuous_keys());
  for (const auto& k : factor.continuous_keys()) {
    auto it = continuous.find(k.id);
    if (it == continuous.end()) {
      throw MissingAssignment("no continuous value for key " + std::to_string(k.id));
    }
    values.push_back(it->second);
  }
  return values;
}

std::size_t discrete_joint_index_for(const Factor& factor,
                                     const std::map<KeyId, int>& discrete) {
  const auto dkeys = factor.discrete_keys();
  std::vector<int> cards, vals;
  cards.reserve(dkeys.size());
  vals.reserve(dkeys.size());
  for (const auto& k : dkeys) {
    auto it = discrete.find(k.id);
    if (it == discrete.end()) {
      throw MissingAssignment("no discrete value for key " + std::to_string(k.id));
    }
    if (it->second < 0 || it->second >= k.cardinality()) {
      throw InvalidArgument("discrete value out of range for key " + std::to_string(k.id));
    }
    cards.push_back(k.cardinality());
    vals.push_back(it->second);
  }
  return joint_index(cards, vals);
}

double FactorGraph::factor_cost(std::size_t index, const HybridAssignment& assignment,
                                bool infinite_ok) const {
  const Factor& f = factors_.at(index);
  if (const auto* t = std::get_if<DiscreteTablePayload>(&f.payload)) {
    const std::size_t idx = discrete_joint_index_for(f, assignment.discrete);
    const double v = t->values[static_cast<Eigen::Index>(idx)];
    if (v <= 0.0) {
      if (infinite_ok) return kInf;
      throw NonPositiveDensity("discrete table entry is zero at the selected assignment");
    }
    return -std::log(v);
  }
  if (const auto* c = std::get_if<ContinuousResidualPayload>(&f.payload)) {
    const auto values = continuous_values_for(f, assignment.continuous);
    return 0.5 * c->noise.squared_mahalanobis(c->residual(values));
  }
  if (const auto* h = std::get_if<HybridResidualPayload>(&f.payload)) {
    const auto values = continuous_values_for(f, assignment.continuous);
    const std::size_t idx = discrete_joint_index_for(f, assignment.discrete);
    return 0.5 * h->noise[idx].squared_mahalanobis(h->residual(values, idx)) +
           h->offset[static_cast<Eigen::Index>(idx)];
  }
  const auto* m = std::get_if<MaxMixturePayload>(&f.payload);
  const auto values = continuous_values_for(f, assignment.continuous);
  const std::size_t idx = discrete_joint_index_for(f, assignment.discrete);
  const MixtureComponent& comp = m->components[idx];
  return 0.5 * comp.noise.squared_mahalanobis(comp.residual(values)) - std::log(comp.weight);
}

double FactorGraph::objective(const HybridAssignment& assignment, bool infinite_ok) const {
  double total = 0.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    total += factor_cost(i, assignment, infinite_ok);
  }
  return total;
}

double quadratic_cost(const FactorGraph& graph, const HybridAssignment& assignment) {
  double total = 0.0;
  for (const Factor& f : graph.factors()) {
    if (const auto* c = std::get_if<ContinuousResidualPayload>(&f.payload)) {
      total += c->noise.squared_mahalanobis(
          c->residual(continuous_values_for(f, assignment.continuous)));
    } else if (const auto* h = std::get_if<HybridResidualPayload>(&f.payload)) {
      const std::size_t idx = discrete_joint_index_for(f, assignment.discrete);
      total += h->noise[idx].squared_mahalanobis(
          h->residual(continuous_values_for(f, assignment.continuous), idx));
    } else if (const auto* m = std::get_if<MaxMixturePayload>(&f.payload)) {
      const std::size_t idx = discrete_joint_index_for(f, assignment.discrete);
      const MixtureComponent& comp = m->components[idx];
      total += comp.noise.squared_mahalanobis(
          comp.residual(continuous_values_for(f, assignment.continuous)));
    }
  }
  return total;
}

}  // namespace dcfg

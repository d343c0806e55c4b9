#include "dcfg/factor.hpp"

#include <set>

namespace dcfg {

std::size_t joint_table_size(const std::vector<int>& cards) {
  std::size_t n = 1;
  for (int c : cards) n *= static_cast<std::size_t>(c);
  return n;
}

std::size_t joint_index(const std::vector<int>& cards, const std::vector<int>& values) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    idx = idx * static_cast<std::size_t>(cards[i]) + static_cast<std::size_t>(values[i]);
  }
  return idx;
}

void unflatten_index(std::size_t index, const std::vector<int>& cards,
                     std::vector<int>& values) {
  values.resize(cards.size());
  for (std::size_t i = cards.size(); i-- > 0;) {
    values[i] = static_cast<int>(index % static_cast<std::size_t>(cards[i]));
    index /= static_cast<std::size_t>(cards[i]);
  }
}

std::size_t Factor::num_continuous_keys() const {
  if (std::holds_alternative<DiscreteTablePayload>(payload)) return 0;
  if (const auto* h = std::get_if<HybridResidualPayload>(&payload)) return h->num_continuous;
  if (std::holds_alternative<MaxMixturePayload>(payload)) return keys.size() - 1;
  return keys.size();
}

std::vector<VariableKey> Factor::continuous_keys() const {
  const std::size_t n = num_continuous_keys();
  return {keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<VariableKey> Factor::discrete_keys() const {
  const std::size_t n = num_continuous_keys();
  return {keys.begin() + static_cast<std::ptrdiff_t>(n), keys.end()};
}

std::vector<int> Factor::discrete_cardinalities() const {
  std::vector<int> cards;
  for (const auto& k : discrete_keys()) cards.push_back(k.cardinality());
  return cards;
}

bool Factor::has_residual() const {
  return !std::holds_alternative<DiscreteTablePayload>(payload);
}

void Factor::validate() const {
  std::set<KeyId> seen;
  for (const auto& k : keys) {
    if (!seen.insert(k.id).second) {
      throw InvalidArgument("factor references key " + std::to_string(k.id) + " twice");
    }
  }
  const std::size_t nc = num_continuous_keys();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const bool want_continuous = i < nc;
    if (keys[i].is_discrete() == want_continuous) {
      throw InvalidArgument("factor key order must be continuous keys then discrete keys");
    }
  }
  if (const auto* t = std::get_if<DiscreteTablePayload>(&payload)) {
    const std::size_t expect = joint_table_size(discrete_cardinalities());
    if (static_cast<std::size_t>(t->values.size()) != expect) {
      throw InvalidArgument("discrete table size does not match key cardinalities");
    }
    bool any_positive = false;
    for (int i = 0; i < t->values.size(); ++i) {
      if (t->values[i] < 0.0) throw InvalidArgument("discrete table entries must be >= 0");
      if (t->values[i] > 0.0) any_positive = true;
    }
    if (!any_positive) throw InvalidArgument("discrete table needs at least one entry > 0");
  } else if (const auto* h = std::get_if<HybridResidualPayload>(&payload)) {
    const std::size_t expect = joint_table_size(discrete_cardinalities());
    if (h->noise.size() != expect ||
        static_cast<std::size_t>(h->offset.size()) != expect) {
      throw InvalidArgument("hybrid factor must define noise and offset per joint assignment");
    }
    if (!h->residual) throw InvalidArgument("hybrid factor needs a residual function");
    if (discrete_keys().empty()) {
      throw InvalidArgument("hybrid factor needs at least one discrete key");
    }
  } else if (const auto* m = std::get_if<MaxMixturePayload>(&payload)) {
    if (keys.empty() || !keys.back().is_discrete()) {
      throw InvalidArgument("max-mixture selector must be the factor's last key");
    }
    if (static_cast<std::size_t>(keys.back().cardinality()) != m->components.size()) {
      throw InvalidArgument("selector cardinality must equal the component count");
    }
    for (const auto& c : m->components) {
      if (!c.residual) throw InvalidArgument("mixture component needs a residual function");
      if (!(c.weight > 0.0)) throw InvalidArgument("mixture weights must be positive");
    }
  } else {
    const auto* c = std::get_if<ContinuousResidualPayload>(&payload);
    if (!c->residual) throw InvalidArgument("continuous factor needs a residual function");
  }
}

}  // namespace dcfg

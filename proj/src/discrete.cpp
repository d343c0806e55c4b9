#include "dcfg/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

#include "dcfg/parallel.hpp"

namespace dcfg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Assignment values for table->keys given a scope assignment map.
std::size_t table_index(const CostTable& t, const std::map<KeyId, int>& values) {
  std::vector<int> vals;
  vals.reserve(t.keys.size());
  for (std::size_t i = 0; i < t.keys.size(); ++i) vals.push_back(values.at(t.keys[i]));
  return joint_index(t.cards, vals);
}

// Sum (in cost domain: add) of tables over the union scope. Scope is sorted
// by key id.
CostTable combine(const std::vector<const CostTable*>& tables,
                  const std::map<KeyId, int>& cards) {
  CostTable out;
  std::set<KeyId> scope;
  for (const auto* t : tables) scope.insert(t->keys.begin(), t->keys.end());
  out.keys.assign(scope.begin(), scope.end());
  for (KeyId k : out.keys) out.cards.push_back(cards.at(k));
  const std::size_t n = joint_table_size(out.cards);
  out.cost = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

  // Strides of each input table's keys within the combined scope.
  std::vector<int> values(out.keys.size(), 0);
  std::map<KeyId, int> val_map;
  for (std::size_t idx = 0; idx < n; ++idx) {
    unflatten_index(idx, out.cards, values);
    for (std::size_t i = 0; i < out.keys.size(); ++i) val_map[out.keys[i]] = values[i];
    double c = 0.0;
    for (const auto* t : tables) c += t->cost[static_cast<Eigen::Index>(table_index(*t, val_map))];
    out.cost[static_cast<Eigen::Index>(idx)] = c;
  }
  return out;
}

struct Eliminated {
  KeyId var;
  CostTable reduced;                 // scope without var
  std::vector<int> argmin;           // per reduced index, winning category
  std::vector<KeyId> reduced_scope;  // == reduced.keys
};

}  // namespace

ConditionedDiscreteGraph condition(const FactorGraph& graph,
                                   const std::map<KeyId, Value>& continuous) {
  ConditionedDiscreteGraph out;
  for (const auto& key : graph.discrete_variables()) {
    out.cardinalities[key.id] = key.cardinality();
  }

  const auto& factors = graph.factors();
  std::vector<std::vector<CostTable>> slots(factors.size());
  parallel_for(factors.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t fi = begin; fi < end; ++fi) {
      const Factor& f = factors[fi];
      CostTable t;
      t.origin_factor = fi;
      if (const auto* table = std::get_if<DiscreteTablePayload>(&f.payload)) {
        for (const auto& k : f.keys) {
          t.keys.push_back(k.id);
          t.cards.push_back(k.cardinality());
        }
        t.cost.resize(table->values.size());
        for (Eigen::Index i = 0; i < table->values.size(); ++i) {
          t.cost[i] = table->values[i] > 0.0 ? -std::log(table->values[i]) : kInf;
        }
      } else if (const auto* h = std::get_if<HybridResidualPayload>(&f.payload)) {
        const auto values = continuous_values_for(f, continuous);
        for (const auto& k : f.discrete_keys()) {
          t.keys.push_back(k.id);
          t.cards.push_back(k.cardinality());
        }
        const std::size_t n = joint_table_size(t.cards);
        t.cost.resize(static_cast<Eigen::Index>(n));
        for (std::size_t a = 0; a < n; ++a) {
          t.cost[static_cast<Eigen::Index>(a)] =
              0.5 * h->noise[a].squared_mahalanobis(h->residual(values, a)) +
              h->offset[static_cast<Eigen::Index>(a)];
        }
      } else if (const auto* m = std::get_if<MaxMixturePayload>(&f.payload)) {
        const auto values = continuous_values_for(f, continuous);
        const VariableKey& sel = f.keys.back();
        t.keys.push_back(sel.id);
        t.cards.push_back(sel.cardinality());
        t.cost.resize(sel.cardinality());
        for (int a = 0; a < sel.cardinality(); ++a) {
          const MixtureComponent& c = m->components[static_cast<std::size_t>(a)];
          t.cost[a] = 0.5 * c.noise.squared_mahalanobis(c.residual(values)) -
                      std::log(c.weight);
        }
      } else {
        continue;  // pure continuous factor: constant w.r.t. D
      }
      slots[fi].push_back(std::move(t));
    }
  });
  for (auto& s : slots) {
    for (auto& t : s) out.tables.push_back(std::move(t));
  }
  return out;
}

std::vector<ConditionedDiscreteGraph> components(const ConditionedDiscreteGraph& g) {
  // Union-find over variable ids.
  std::map<KeyId, KeyId> parent;
  for (const auto& [id, card] : g.cardinalities) parent[id] = id;
  std::function<KeyId(KeyId)> find = [&](KeyId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](KeyId a, KeyId b) { parent[find(a)] = find(b); };
  for (const auto& t : g.tables) {
    for (std::size_t i = 1; i < t.keys.size(); ++i) unite(t.keys[0], t.keys[i]);
  }

  std::map<KeyId, std::size_t> root_to_index;  // ordered by smallest member id
  std::vector<ConditionedDiscreteGraph> out;
  for (const auto& [id, card] : g.cardinalities) {
    const KeyId root = find(id);
    auto it = root_to_index.find(root);
    if (it == root_to_index.end()) {
      it = root_to_index.emplace(root, out.size()).first;
      out.emplace_back();
    }
    out[it->second].cardinalities[id] = card;
  }
  for (const auto& t : g.tables) {
    if (t.keys.empty()) continue;
    out[root_to_index.at(find(t.keys[0]))].tables.push_back(t);
  }
  return out;
}

EliminationOrdering min_fill_ordering(const ConditionedDiscreteGraph& g) {
  std::map<KeyId, std::set<KeyId>> adj;
  for (const auto& [id, card] : g.cardinalities) adj[id];
  for (const auto& t : g.tables) {
    for (KeyId a : t.keys) {
      for (KeyId b : t.keys) {
        if (a != b) adj[a].insert(b);
      }
    }
  }
  EliminationOrdering ordering;
  while (!adj.empty()) {
    KeyId best = 0;
    long best_fill = -1;
    for (const auto& [v, nbrs] : adj) {  // map order -> smallest id wins ties
      long fill = 0;
      for (auto i = nbrs.begin(); i != nbrs.end(); ++i) {
        auto j = i;
        for (++j; j != nbrs.end(); ++j) {
          if (!adj.at(*i).count(*j)) ++fill;
        }
      }
      if (best_fill < 0 || fill < best_fill) {
        best_fill = fill;
        best = v;
      }
    }
    // Connect neighbors, remove the variable.
    const std::set<KeyId> nbrs = adj[best];
    for (KeyId a : nbrs) {
      adj[a].erase(best);
      for (KeyId b : nbrs) {
        if (a != b) adj[a].insert(b);
      }
    }
    adj.erase(best);
    ordering.order.push_back(best);
  }
  return ordering;
}

MpeResult solve_mpe(const ConditionedDiscreteGraph& g, const EliminationOrdering& ordering,
                    int width_cap) {
  // Ordering must be a permutation of the graph's variables.
  {
    std::set<KeyId> seen(ordering.order.begin(), ordering.order.end());
    if (seen.size() != ordering.order.size() || seen.size() != g.cardinalities.size()) {
      throw InvalidArgument("elimination ordering must be a permutation of the variables");
    }
    for (KeyId k : seen) {
      if (!g.cardinalities.count(k)) {
        throw InvalidArgument("ordering names unknown variable " + std::to_string(k));
      }
    }
  }

  std::vector<CostTable> active = g.tables;
  std::vector<Eliminated> stack;
  double constant = 0.0;
  int max_width = 0;

  for (KeyId var : ordering.order) {
    std::vector<const CostTable*> touching;
    std::vector<CostTable> rest;
    for (auto& t : active) {
      if (std::find(t.keys.begin(), t.keys.end(), var) != t.keys.end()) {
        touching.push_back(&t);
      }
    }
    CostTable combined;
    if (touching.empty()) {
      combined.keys = {var};
      combined.cards = {g.cardinalities.at(var)};
      combined.cost = Eigen::VectorXd::Zero(combined.cards[0]);
    } else {
      combined = combine(touching, g.cardinalities);
    }
    const int width = static_cast<int>(combined.keys.size()) - 1;
    max_width = std::max(max_width, width);
    if (width > width_cap) {
      throw TreewidthExceeded("elimination scope of " + std::to_string(width + 1) +
                              " variables exceeds the width cap " + std::to_string(width_cap));
    }

    // Min out var: reduced table over scope \ {var}, argmin per reduced cell.
    const auto pos_it = std::find(combined.keys.begin(), combined.keys.end(), var);
    const std::size_t pos = static_cast<std::size_t>(pos_it - combined.keys.begin());
    Eliminated e;
    e.var = var;
    for (std::size_t i = 0; i < combined.keys.size(); ++i) {
      if (i != pos) {
        e.reduced.keys.push_back(combined.keys[i]);
        e.reduced.cards.push_back(combined.cards[i]);
      }
    }
    const std::size_t rn = joint_table_size(e.reduced.cards);
    e.reduced.cost.resize(static_cast<Eigen::Index>(rn));
    e.argmin.assign(rn, 0);
    std::vector<int> full(combined.keys.size(), 0), reduced(e.reduced.keys.size(), 0);
    const int card = combined.cards[pos];
    for (std::size_t ri = 0; ri < rn; ++ri) {
      unflatten_index(ri, e.reduced.cards, reduced);
      for (std::size_t i = 0, j = 0; i < combined.keys.size(); ++i) {
        if (i != pos) full[i] = reduced[j++];
      }
      double best = kInf;
      int best_cat = 0;
      for (int cat = 0; cat < card; ++cat) {
        full[pos] = cat;
        const double c = combined.cost[static_cast<Eigen::Index>(joint_index(combined.cards, full))];
        if (c < best) {  // strict: smallest category wins ties
          best = c;
          best_cat = cat;
        }
      }
      e.reduced.cost[static_cast<Eigen::Index>(ri)] = best;
      e.argmin[ri] = best_cat;
    }
    e.reduced_scope = e.reduced.keys;

    // Replace the touching tables with the reduced one.
    for (auto& t : active) {
      if (std::find(t.keys.begin(), t.keys.end(), var) == t.keys.end()) {
        rest.push_back(std::move(t));
      }
    }
    if (e.reduced.keys.empty()) {
      constant += e.reduced.cost[0];
    } else {
      rest.push_back(e.reduced);
    }
    active = std::move(rest);
    stack.push_back(std::move(e));
  }

  if (!active.empty()) {
    throw InvalidArgument("elimination left live tables; ordering incomplete");
  }
  if (std::isinf(constant)) {
    throw EmptySupport("every joint assignment has infinite cost");
  }

  MpeResult result;
  result.cost = constant;
  result.induced_width = max_width;
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    std::vector<int> vals;
    vals.reserve(it->reduced_scope.size());
    for (KeyId k : it->reduced_scope) vals.push_back(result.assignment.at(k));
    const std::size_t ri = joint_index(it->reduced.cards, vals);
    result.assignment[it->var] = it->argmin[ri];
  }
  return result;
}

MpeResult solve_mpe(const ConditionedDiscreteGraph& g, int width_cap) {
  const auto comps = components(g);
  std::vector<MpeResult> partial(comps.size());
  parallel_for(comps.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      partial[i] = solve_mpe(comps[i], min_fill_ordering(comps[i]), width_cap);
    }
  });
  MpeResult merged;
  merged.cost = 0.0;
  for (const auto& p : partial) {
    merged.cost += p.cost;
    merged.induced_width = std::max(merged.induced_width, p.induced_width);
    merged.assignment.insert(p.assignment.begin(), p.assignment.end());
  }
  return merged;
}

namespace {

// Sum out var from the combined table in log domain:
// new_cost = -log sum_v exp(-cost).
CostTable sum_out(const CostTable& combined, KeyId var) {
  const auto pos_it = std::find(combined.keys.begin(), combined.keys.end(), var);
  const std::size_t pos = static_cast<std::size_t>(pos_it - combined.keys.begin());
  CostTable out;
  for (std::size_t i = 0; i < combined.keys.size(); ++i) {
    if (i != pos) {
      out.keys.push_back(combined.keys[i]);
      out.cards.push_back(combined.cards[i]);
    }
  }
  const std::size_t rn = joint_table_size(out.cards);
  out.cost.resize(static_cast<Eigen::Index>(rn));
  std::vector<int> full(combined.keys.size(), 0), reduced(out.keys.size(), 0);
  const int card = combined.cards[pos];
  for (std::size_t ri = 0; ri < rn; ++ri) {
    unflatten_index(ri, out.cards, reduced);
    for (std::size_t i = 0, j = 0; i < combined.keys.size(); ++i) {
      if (i != pos) full[i] = reduced[j++];
    }
    double mn = kInf;
    std::vector<double> costs(static_cast<std::size_t>(card));
    for (int cat = 0; cat < card; ++cat) {
      full[pos] = cat;
      costs[static_cast<std::size_t>(cat)] =
          combined.cost[static_cast<Eigen::Index>(joint_index(combined.cards, full))];
      mn = std::min(mn, costs[static_cast<std::size_t>(cat)]);
    }
    if (std::isinf(mn)) {
      out.cost[static_cast<Eigen::Index>(ri)] = kInf;
    } else {
      double s = 0.0;
      for (double c : costs) s += std::exp(-(c - mn));
      out.cost[static_cast<Eigen::Index>(ri)] = mn - std::log(s);
    }
  }
  return out;
}

// Eliminate (by summation) every variable except keep, returning the
// unnormalized log-marginal cost vector of keep.
Eigen::VectorXd marginal_cost_of(const ConditionedDiscreteGraph& comp, KeyId keep,
                                 int width_cap) {
  std::vector<CostTable> active = comp.tables;
  for (const auto& [id, card] : comp.cardinalities) {
    if (id == keep) continue;
    std::vector<const CostTable*> touching;
    for (auto& t : active) {
      if (std::find(t.keys.begin(), t.keys.end(), id) != t.keys.end()) touching.push_back(&t);
    }
    if (touching.empty()) continue;  // irrelevant variable, sums to a constant
    CostTable combined = combine(touching, comp.cardinalities);
    if (static_cast<int>(combined.keys.size()) - 1 > width_cap) {
      throw TreewidthExceeded("marginal elimination exceeds the width cap");
    }
    CostTable reduced = sum_out(combined, id);
    std::vector<CostTable> rest;
    for (auto& t : active) {
      if (std::find(t.keys.begin(), t.keys.end(), id) == t.keys.end()) {
        rest.push_back(std::move(t));
      }
    }
    if (!reduced.keys.empty()) {
      rest.push_back(std::move(reduced));
    }  // scalars drop: normalization handles them
    active = std::move(rest);
  }
  const int card = comp.cardinalities.at(keep);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(card);
  std::map<KeyId, int> vals;
  for (int v = 0; v < card; ++v) {
    vals[keep] = v;
    for (const auto& t : active) {
      cost[v] += t.cost[static_cast<Eigen::Index>(table_index(t, vals))];
    }
  }
  return cost;
}

}  // namespace

std::map<KeyId, Eigen::VectorXd> marginals(const ConditionedDiscreteGraph& g, int width_cap) {
  std::map<KeyId, Eigen::VectorXd> out;
  for (const auto& comp : components(g)) {
    for (const auto& [id, card] : comp.cardinalities) {
      Eigen::VectorXd cost = marginal_cost_of(comp, id, width_cap);
      const double mn = cost.minCoeff();
      if (std::isinf(mn)) {
        throw EmptySupport("component of variable " + std::to_string(id) +
                           " has no finite-cost assignment");
      }
      Eigen::VectorXd p(cost.size());
      for (Eigen::Index i = 0; i < cost.size(); ++i) p[i] = std::exp(-(cost[i] - mn));
      p /= p.sum();
      out[id] = p;
    }
  }
  return out;
}

}  // namespace dcfg

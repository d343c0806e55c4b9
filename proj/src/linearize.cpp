#include "dcfg/linearize.hpp"

#include <vector>

#include "dcfg/parallel.hpp"

namespace dcfg {

std::vector<Eigen::MatrixXd> numeric_jacobians(
    const std::function<Eigen::VectorXd(const std::vector<Value>&)>& fn,
    const std::vector<Value>& values, double h) {
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(values.size());
  std::vector<Value> work = values;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const int td = kind_of(values[k]).tangent_dim();
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(td);
    Eigen::MatrixXd block;
    for (int d = 0; d < td; ++d) {
      delta[d] = h;
      work[k] = retract(values[k], delta);
      const Eigen::VectorXd plus = fn(work);
      delta[d] = -h;
      work[k] = retract(values[k], delta);
      const Eigen::VectorXd minus = fn(work);
      delta[d] = 0.0;
      work[k] = values[k];
      if (block.size() == 0) block.resize(plus.size(), td);
      block.col(d) = (plus - minus) / (2.0 * h);
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

namespace {

struct FactorRows {
  Eigen::VectorXd whitened_residual;            // before negation
  std::vector<Eigen::MatrixXd> whitened_blocks; // per continuous key
  std::vector<KeyId> block_keys;
};

// Residual, Jacobian blocks and noise for a factor at the given assignment;
// returns false for factors with no residual rows (discrete tables).
bool evaluate_rows(const Factor& f, const std::map<KeyId, int>& discrete,
                   const std::map<KeyId, Value>& continuous, FactorRows& out) {
  if (!f.has_residual()) return false;
  const auto values = continuous_values_for(f, continuous);
  for (const auto& k : f.continuous_keys()) out.block_keys.push_back(k.id);

  Eigen::VectorXd r;
  std::vector<Eigen::MatrixXd> blocks;
  const NoiseModel* noise = nullptr;
  if (const auto* c = std::get_if<ContinuousResidualPayload>(&f.payload)) {
    r = c->residual(values);
    blocks = c->jacobian ? c->jacobian(values) : numeric_jacobians(c->residual, values);
    noise = &c->noise;
  } else if (const auto* h = std::get_if<HybridResidualPayload>(&f.payload)) {
    const std::size_t a = discrete_joint_index_for(f, discrete);
    r = h->residual(values, a);
    if (h->jacobian) {
      blocks = h->jacobian(values, a);
    } else {
      blocks = numeric_jacobians([&](const std::vector<Value>& v) { return h->residual(v, a); },
                                 values);
    }
    noise = &h->noise[a];
  } else {
    const auto* m = std::get_if<MaxMixturePayload>(&f.payload);
    const std::size_t a = discrete_joint_index_for(f, discrete);
    const MixtureComponent& comp = m->components[a];
    r = comp.residual(values);
    blocks = comp.jacobian ? comp.jacobian(values) : numeric_jacobians(comp.residual, values);
    noise = &comp.noise;
  }

  out.whitened_residual = noise->whiten(r);
  out.whitened_blocks.reserve(blocks.size());
  for (auto& b : blocks) out.whitened_blocks.push_back(noise->whiten_jacobian(b));
  return true;
}

}  // namespace

LinearSystem linearize(const FactorGraph& graph, const std::map<KeyId, int>& discrete,
                       const std::map<KeyId, Value>& continuous) {
  LinearSystem sys;
  int col = 0;
  for (const auto& [id, key] : graph.variables()) {
    if (key.is_discrete()) continue;
    sys.column_index[id] = {col, key.tangent_dim()};
    col += key.tangent_dim();
  }

  const auto& factors = graph.factors();
  std::vector<FactorRows> rows(factors.size());
  std::vector<bool> live(factors.size(), false);
  parallel_for(factors.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      live[i] = evaluate_rows(factors[i], discrete, continuous, rows[i]);
    }
  });

  int total_rows = 0;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (live[i]) total_rows += static_cast<int>(rows[i].whitened_residual.size());
  }

  sys.rhs.resize(total_rows);
  std::vector<Eigen::Triplet<double>> triplets;
  int row = 0;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (!live[i]) continue;
    const FactorRows& fr = rows[i];
    const int nr = static_cast<int>(fr.whitened_residual.size());
    sys.rhs.segment(row, nr) = -fr.whitened_residual;
    for (std::size_t b = 0; b < fr.block_keys.size(); ++b) {
      const auto [offset, width] = sys.column_index.at(fr.block_keys[b]);
      const Eigen::MatrixXd& block = fr.whitened_blocks[b];
      // Zero entries are kept so the sparsity pattern is fixed by the graph
      // topology, not by the linearization point.
      for (int rr = 0; rr < nr; ++rr) {
        for (int cc = 0; cc < width; ++cc) {
          triplets.emplace_back(row + rr, offset + cc, block(rr, cc));
        }
      }
    }
    row += nr;
  }

  sys.jacobian.resize(total_rows, col);
  sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

double residual_objective(const FactorGraph& graph, const std::map<KeyId, int>& discrete,
                          const std::map<KeyId, Value>& continuous) {
  double total = 0.0;
  HybridAssignment assignment;
  assignment.continuous = continuous;
  assignment.discrete = discrete;
  const auto& factors = graph.factors();
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (!factors[i].has_residual()) continue;
    total += graph.factor_cost(i, assignment, true);
  }
  return total;
}

}  // namespace dcfg

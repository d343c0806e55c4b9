#include "support/oracles.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace dcfg::test {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double assignment_cost(const ConditionedDiscreteGraph& g, const std::map<KeyId, int>& values) {
  double total = 0.0;
  for (const auto& t : g.tables) {
    std::vector<int> vals;
    for (KeyId k : t.keys) vals.push_back(values.at(k));
    total += t.cost[static_cast<Eigen::Index>(joint_index(t.cards, vals))];
  }
  return total;
}

template <typename Visitor>
void for_each_assignment(const ConditionedDiscreteGraph& g, Visitor&& visit) {
  std::vector<KeyId> keys;
  std::vector<int> cards;
  for (const auto& [id, card] : g.cardinalities) {
    keys.push_back(id);
    cards.push_back(card);
  }
  const std::size_t n = joint_table_size(cards);
  std::vector<int> vals(cards.size(), 0);
  std::map<KeyId, int> assignment;
  for (std::size_t idx = 0; idx < n; ++idx) {
    unflatten_index(idx, cards, vals);
    for (std::size_t i = 0; i < keys.size(); ++i) assignment[keys[i]] = vals[i];
    visit(assignment);
  }
}

}  // namespace

EnumerationResult enumerate_mpe(const ConditionedDiscreteGraph& g) {
  EnumerationResult best;
  best.cost = kInf;
  for_each_assignment(g, [&](const std::map<KeyId, int>& assignment) {
    const double c = assignment_cost(g, assignment);
    if (c < best.cost) {
      best.cost = c;
      best.assignment = assignment;
    }
  });
  return best;
}

std::map<KeyId, Eigen::VectorXd> enumerate_marginals(const ConditionedDiscreteGraph& g) {
  // Accumulate joint probabilities (shifted by the minimum cost for safety).
  double min_cost = kInf;
  for_each_assignment(g, [&](const std::map<KeyId, int>& assignment) {
    min_cost = std::min(min_cost, assignment_cost(g, assignment));
  });
  std::map<KeyId, Eigen::VectorXd> out;
  for (const auto& [id, card] : g.cardinalities) out[id] = Eigen::VectorXd::Zero(card);
  double total = 0.0;
  for_each_assignment(g, [&](const std::map<KeyId, int>& assignment) {
    const double w = std::exp(-(assignment_cost(g, assignment) - min_cost));
    total += w;
    for (const auto& [id, v] : assignment) out[id][v] += w;
  });
  for (auto& [id, vec] : out) vec /= total;
  return out;
}

std::vector<int> viterbi_decode(const Eigen::VectorXd& initial,
                                const std::vector<Eigen::MatrixXd>& transitions,
                                const std::vector<Eigen::VectorXd>& emissions) {
  const int states = static_cast<int>(initial.size());
  const int steps = static_cast<int>(emissions.size());
  Eigen::MatrixXd delta(steps, states);
  Eigen::MatrixXi back(steps, states);
  for (int s = 0; s < states; ++s) delta(0, s) = initial[s] + emissions[0][s];
  for (int t = 1; t < steps; ++t) {
    for (int s = 0; s < states; ++s) {
      double best = kInf;
      int arg = 0;
      for (int p = 0; p < states; ++p) {
        const double c = delta(t - 1, p) + transitions[static_cast<std::size_t>(t - 1)](p, s);
        if (c < best) {
          best = c;
          arg = p;
        }
      }
      delta(t, s) = best + emissions[static_cast<std::size_t>(t)][s];
      back(t, s) = arg;
    }
  }
  std::vector<int> path(static_cast<std::size_t>(steps));
  double best = kInf;
  for (int s = 0; s < states; ++s) {
    if (delta(steps - 1, s) < best) {
      best = delta(steps - 1, s);
      path[static_cast<std::size_t>(steps - 1)] = s;
    }
  }
  for (int t = steps - 1; t > 0; --t) {
    path[static_cast<std::size_t>(t - 1)] = back(t, path[static_cast<std::size_t>(t)]);
  }
  return path;
}

int induced_width(const ConditionedDiscreteGraph& g, const std::vector<KeyId>& order) {
  std::map<KeyId, std::set<KeyId>> adj;
  for (const auto& [id, card] : g.cardinalities) adj[id];
  for (const auto& t : g.tables) {
    for (KeyId a : t.keys) {
      for (KeyId b : t.keys) {
        if (a != b) adj[a].insert(b);
      }
    }
  }
  int width = 0;
  for (KeyId v : order) {
    const std::set<KeyId> nbrs = adj[v];
    width = std::max(width, static_cast<int>(nbrs.size()));
    for (KeyId a : nbrs) {
      adj[a].erase(v);
      for (KeyId b : nbrs) {
        if (a != b) adj[a].insert(b);
      }
    }
    adj.erase(v);
  }
  return width;
}

Pose3 kabsch_align(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b) {
  const auto n = static_cast<double>(a.size());
  Eigen::Vector3d ca = Eigen::Vector3d::Zero(), cb = Eigen::Vector3d::Zero();
  for (const auto& p : a) ca += p;
  for (const auto& p : b) cb += p;
  ca /= n;
  cb /= n;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) h += (a[i] - ca) * (b[i] - cb).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixV() * svd.matrixU().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d v = svd.matrixV();
    v.col(2) *= -1.0;
    r = v * svd.matrixU().transpose();
  }
  Pose3 out;
  out.rotation = Rot3::from_matrix(r, 1e-6);
  out.translation = cb - r * ca;
  return out;
}

ReferenceIcpResult reference_icp(const problems::PointCloud& source,
                                 const problems::PointCloud& target, const Pose3& init,
                                 int max_iterations) {
  ReferenceIcpResult result;
  result.transform = init;
  std::vector<int> previous;
  for (int iter = 0; iter < max_iterations; ++iter) {
    ++result.iterations;
    std::vector<int> corr(source.size(), 0);
    for (std::size_t i = 0; i < source.size(); ++i) {
      const Eigen::Vector3d p = result.transform * source.points[i];
      double best = kInf;
      for (std::size_t j = 0; j < target.size(); ++j) {
        const double d = (p - target.points[j]).squaredNorm();
        if (d < best) {
          best = d;
          corr[i] = static_cast<int>(j);
        }
      }
    }
    std::vector<Eigen::Vector3d> matched(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
      matched[i] = target.points[static_cast<std::size_t>(corr[i])];
    }
    result.transform = kabsch_align(source.points, matched);
    if (corr == previous) {
      result.correspondences = corr;
      break;
    }
    previous = corr;
    result.correspondences = corr;
  }
  return result;
}

Pose3 random_pose3(Rng& rng, double rotation_scale, double translation_scale) {
  Vector6 xi;
  xi << rng.normal3(rotation_scale), rng.normal3(translation_scale);
  return Pose3::exp(xi);
}

Pose2 random_pose2(Rng& rng, double rotation_scale, double translation_scale) {
  Eigen::Vector3d xi(rng.normal() * rotation_scale, rng.normal() * translation_scale,
                     rng.normal() * translation_scale);
  return Pose2::exp(xi);
}

ConditionedDiscreteGraph random_binary_graph(Rng& rng, int max_vars, int max_tables) {
  ConditionedDiscreteGraph g;
  const int n_vars = 1 + rng.uniform_int(max_vars);
  for (int i = 0; i < n_vars; ++i) g.cardinalities[static_cast<KeyId>(i)] = 2;
  const int n_tables = 1 + rng.uniform_int(max_tables);
  for (int t = 0; t < n_tables; ++t) {
    CostTable table;
    const int arity = 1 + rng.uniform_int(std::min(3, n_vars));
    std::set<KeyId> scope;
    while (static_cast<int>(scope.size()) < arity) {
      scope.insert(static_cast<KeyId>(rng.uniform_int(n_vars)));
    }
    table.keys.assign(scope.begin(), scope.end());
    table.cards.assign(scope.size(), 2);
    table.cost.resize(static_cast<Eigen::Index>(joint_table_size(table.cards)));
    for (Eigen::Index i = 0; i < table.cost.size(); ++i) {
      // Occasional infinite entries exercise the zero-mass path.
      table.cost[i] = rng.uniform01() < 0.05 ? std::numeric_limits<double>::infinity()
                                             : rng.uniform(0.0, 4.0);
    }
    table.origin_factor = static_cast<std::size_t>(t);
    g.tables.push_back(std::move(table));
  }
  return g;
}

double chi_square_statistic(const std::vector<int>& observed,
                            const std::vector<double>& expected_probability, int total) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = expected_probability[i] * total;
    const double diff = observed[i] - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

}  // namespace dcfg::test

#pragma once

// Independent reference implementations the tests check the library against.
// Nothing here may call into the code paths under test.

#include <map>
#include <vector>

#include "dcfg/discrete.hpp"
#include "dcfg/problems/registration.hpp"
#include "dcfg/random.hpp"

namespace dcfg::test {

/// Exhaustive minimum over all joint assignments of the conditioned graph,
/// visiting assignments in lexicographic order over ascending key ids (last
/// key fastest) and keeping strictly better costs, so ties resolve to the
/// lexicographically smallest assignment.
struct EnumerationResult {
  std::map<KeyId, int> assignment;
  double cost = 0.0;
};
EnumerationResult enumerate_mpe(const ConditionedDiscreteGraph& g);

/// Exhaustive normalized marginals.
std::map<KeyId, Eigen::VectorXd> enumerate_marginals(const ConditionedDiscreteGraph& g);

/// Classic Viterbi decoder for a chain: initial[s], transition[t](s, s'),
/// emission[t][s], all in cost (-log) domain. Ties resolve to the smallest
/// state index.
std::vector<int> viterbi_decode(const Eigen::VectorXd& initial,
                                const std::vector<Eigen::MatrixXd>& transitions,
                                const std::vector<Eigen::VectorXd>& emissions);

/// Induced width of eliminating the graph along the ordering (largest clique
/// minus one during node elimination on the adjacency structure).
int induced_width(const ConditionedDiscreteGraph& g, const std::vector<KeyId>& order);

/// Closed-form least-squares alignment of paired points (Horn/Umeyama, no
/// scale): minimizes sum |T a_i - b_i|^2.
Pose3 kabsch_align(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b);

/// Reference ICP: exhaustive nearest-neighbor association alternated with the
/// closed-form alignment above.
struct ReferenceIcpResult {
  Pose3 transform;
  std::vector<int> correspondences;
  int iterations = 0;
};
ReferenceIcpResult reference_icp(const problems::PointCloud& source,
                                 const problems::PointCloud& target, const Pose3& init,
                                 int max_iterations = 100);

/// Random pose helpers for Jacobian and round-trip tests.
Pose3 random_pose3(Rng& rng, double rotation_scale = 1.0, double translation_scale = 1.0);
Pose2 random_pose2(Rng& rng, double rotation_scale = 1.0, double translation_scale = 1.0);

/// Random conditioned graph over binary variables for enumeration checks.
ConditionedDiscreteGraph random_binary_graph(Rng& rng, int max_vars, int max_tables);

/// Chi-square statistic of observed counts against expected probabilities.
double chi_square_statistic(const std::vector<int>& observed,
                            const std::vector<double>& expected_probability, int total);

}  // namespace dcfg::test

#pragma once

#include <cstdint>
#include <optional>

#include "dcfg/dc_solver.hpp"
#include "dcfg/factors.hpp"

namespace dcfg::problems {

/// Relative-pose measurement between poses i and j (any pose manifold).
struct RelativePoseEdge {
  int i = 0;
  int j = 0;
  Value measurement;
  NoiseModel noise = NoiseModel::isotropic_sigma(6, 1.0);
};

/// Edge lists with outlier labels; the unit every pose-graph driver consumes.
struct PgoDataset {
  ManifoldKind pose_kind = ManifoldKind::se3();
  int num_poses = 0;
  std::vector<RelativePoseEdge> odometry;
  std::vector<RelativePoseEdge> loops;
  std::vector<bool> loop_is_outlier;     // parallel to loops
  std::vector<Value> ground_truth;       // optional, for synthetic data
};

struct SwitchableDefaults {
  double omega1 = 1e-7;               // outlier prior weight; omega0 = 1 - omega1
  double outlier_variance = 1.6e7;    // isotropic, per tangent dimension
};

struct RobustPgoProblem {
  FactorGraph graph;
  std::vector<KeyId> pose_keys;
  std::vector<KeyId> switch_keys;  // one per loop edge, in loop order
  ManifoldKind pose_kind = ManifoldKind::se3();
};

/// Trusted odometry edges become plain between-factors; untrusted loop edges
/// become switchable factors choosing between the edge's own noise and the
/// isotropic outlier model. Pose 0 carries the anchor prior (sqrt information
/// 1e3 per tangent dimension unless overridden) to fix the gauge.
RobustPgoProblem build_robust_pgo(const PgoDataset& dataset, const SwitchableDefaults& defaults,
                                  const Value& anchor,
                                  std::optional<NoiseModel> anchor_noise = std::nullopt);

/// Composes the odometry chain starting from the anchor.
std::map<KeyId, Value> odometry_initialization(const RobustPgoProblem& problem,
                                               const PgoDataset& dataset, const Value& anchor);

/// Appends `count` spurious loop closures between uniformly chosen
/// non-adjacent pose pairs: translation uniform in the side-10 cube
/// [-5, 5]^3 (SE(2): square), rotation Haar-uniform. Deterministic per seed;
/// labels them outliers. Throws InsufficientPoses below 3 poses.
void inject_outliers(PgoDataset& dataset, int count, std::uint64_t seed);

/// Precision/recall of outlier detection; positive = outlier (switch = 1).
/// Vacuously 1.0 when there are no predicted (resp. true) positives.
std::pair<double, double> classify_edges(const std::map<KeyId, int>& discrete,
                                         const std::map<KeyId, bool>& labels);

/// Synthetic world: a two-turn circular survey with loop closures between
/// revisited segments. Odometry and loop measurements are the true relative
/// poses perturbed by Gaussian noise of the given sigmas (rotation axes and
/// translation axes independently). The loop noise is modeled wider than the
/// odometry noise so that genuine loop closures stay inside the switch
/// threshold at the drifted odometry initialization.
struct SyntheticPgoParams {
  int num_poses = 100;
  double radius = 12.0;
  double odometry_sigma_rotation = 0.001;
  double odometry_sigma_translation = 0.01;
  double loop_sigma_rotation = 0.005;
  double loop_sigma_translation = 0.05;
  double loop_radius = 3.0;  // max true distance for a loop closure
  int min_index_gap = 10;
};

PgoDataset generate_pose_graph(const SyntheticPgoParams& params, std::uint64_t seed);

/// End-to-end robust solve: builds the problem, initializes from odometry,
/// runs the alternating solver, and scores against the labels.
struct RobustPgoRun {
  RobustPgoProblem problem;
  DcResult result;
  double precision = 1.0;
  double recall = 1.0;
  double inlier_cost = 0.0;  // paper-convention cost (doubled half-norms) on inlier edges
};

RobustPgoRun run_robust_pgo(const PgoDataset& dataset, const SwitchableDefaults& defaults,
                            const DcParams& params);

/// Cost of the assignment on the inlier-only model (odometry + true-inlier
/// loops with their own noise, plus the anchor), reported in the doubled
/// convention used for cost tables.
double inlier_only_cost(const PgoDataset& dataset, const std::map<KeyId, Value>& continuous,
                        const Value& anchor);

/// Plain (non-robust) LM solve of the inlier-only model from odometry init.
std::pair<std::map<KeyId, Value>, double> solve_inlier_reference(const PgoDataset& dataset,
                                                                 const Value& anchor,
                                                                 const OptimizerParams& params);

}  // namespace dcfg::problems

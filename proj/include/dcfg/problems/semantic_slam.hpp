#pragma once

#include <cstdint>

#include "dcfg/dc_solver.hpp"
#include "dcfg/factors.hpp"

namespace dcfg::problems {

/// One range-bearing + class detection, taken at pose_index.
struct Detection {
  int pose_index = 0;
  Eigen::Vector3d range_bearing;  // [azimuth, elevation, range]
  int observed_class = 0;
};

/// The measurement stream a mapper consumes: odometry in time order plus
/// detections grouped by pose, with the detector's class-confusion model.
/// confusion(s, o) is the probability of observing class o given true class s.
struct SemanticMeasurements {
  std::vector<Pose3> odometry;  // odometry[i]: pose i -> pose i+1
  double odometry_sigma_rotation = 0.005;
  double odometry_sigma_translation = 0.03;
  std::vector<Detection> detections;  // sorted by pose_index
  Eigen::MatrixXd confusion;
  double bearing_sigma = 0.02;
  double range_sigma = 0.05;
  int num_classes = 3;
};

struct SemanticGroundTruth {
  std::vector<Pose3> poses;
  std::vector<Eigen::Vector3d> landmark_positions;
  std::vector<int> landmark_classes;
  std::vector<int> detection_landmark;  // parallel to measurements.detections
};

struct SemanticWorld {
  SemanticMeasurements measurements;
  SemanticGroundTruth truth;
};

struct SemanticWorldParams {
  int num_poses = 20;
  int num_landmarks = 8;
  int num_classes = 3;
  double arc_radius = 10.0;
  double sensor_range = 12.0;
  double min_landmark_separation = 3.0;
  double odometry_sigma_rotation = 0.01;
  double odometry_sigma_translation = 0.05;
  double bearing_sigma = 0.01;
  double range_sigma = 0.03;
  double class_confusion_correct = 0.8;  // rest spread uniformly
};

/// Poses along a smooth arc, landmarks with uniform classes scattered near
/// the path (separation enforced), noisy odometry, range-bearing plus
/// class-confusion detections within the sensor radius. Deterministic per
/// seed; zero sigmas and confusion 1.0 reproduce ground truth exactly.
SemanticWorld generate_semantic_world(const SemanticWorldParams& params, std::uint64_t seed);

struct AssociationParams {
  /// Gate on the detection likelihood under the current estimate's Laplace
  /// marginals: geometric density of the innovation times the expected class
  /// probability. Detections above the gate for some landmark join its
  /// hypothesis set; detections passing no gate spawn a new landmark.
  double likelihood_threshold = 1e-3;
};

struct SemanticSlamResult {
  FactorGraph graph;
  HybridAssignment estimate;
  SolveTrace last_trace;
  std::vector<KeyId> pose_keys;
  std::vector<KeyId> landmark_position_keys;
  std::vector<KeyId> landmark_class_keys;
  /// Landmark each detection ended up associated with: the hypothesis chosen
  /// by the final discrete estimate for mixtures, the single hypothesis
  /// otherwise.
  std::vector<int> detection_landmark;
  int num_landmarks() const { return static_cast<int>(landmark_position_keys.size()); }
};

/// Builds and solves the semantic SLAM graph incrementally, one pose at a
/// time: odometry extends the trajectory, each detection is gated against the
/// existing landmarks and enters either as a new landmark, a plain
/// range-bearing + class factor, or a mixture over its hypothesis set.
SemanticSlamResult build_semantic_slam(const SemanticMeasurements& measurements,
                                       const AssociationParams& association,
                                       const DcParams& params = {});

/// Root-mean-square translation error against the true trajectory.
double absolute_trajectory_error(const std::vector<Pose3>& estimate,
                                 const std::vector<Pose3>& truth);

/// Dead-reckoned trajectory from the odometry stream alone.
std::vector<Pose3> odometry_trajectory(const SemanticMeasurements& measurements);

}  // namespace dcfg::problems

#include "dcfg/problems/semantic_slam.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "dcfg/random.hpp"

namespace dcfg::problems {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::Vector3d bearing_direction(double az, double el) {
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

Eigen::MatrixXd confusion_matrix(int num_classes, double correct) {
  Eigen::MatrixXd m(num_classes, num_classes);
  const double off = num_classes > 1 ? (1.0 - correct) / (num_classes - 1) : 0.0;
  for (int s = 0; s < num_classes; ++s) {
    for (int o = 0; o < num_classes; ++o) m(s, o) = s == o ? correct : off;
  }
  return m;
}

int sample_category(Rng& rng, const Eigen::VectorXd& probabilities) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (u < acc) return i;
  }
  return static_cast<int>(probabilities.size()) - 1;
}

}  // namespace

SemanticWorld generate_semantic_world(const SemanticWorldParams& params, std::uint64_t seed) {
  if (params.num_poses < 1 || params.num_landmarks < 1 || params.num_classes < 1) {
    throw InvalidArgument("world sizes must be positive");
  }
  Rng rng(seed);
  SemanticWorld world;
  world.measurements.num_classes = params.num_classes;
  world.measurements.confusion =
      confusion_matrix(params.num_classes, params.class_confusion_correct);
  world.measurements.bearing_sigma = params.bearing_sigma;
  world.measurements.range_sigma = params.range_sigma;
  world.measurements.odometry_sigma_rotation = params.odometry_sigma_rotation;
  world.measurements.odometry_sigma_translation = params.odometry_sigma_translation;

  // Smooth arc trajectory, headings tangent to the path. Everything is
  // expressed in the first pose's frame so dead reckoning and the anchored
  // estimate share the truth's coordinates.
  // Full loop: the final pose comes back around to the first one, so the
  // early landmarks are re-observed at the end of the run.
  const double arc = 2.0 * kPi;
  const double dtheta = params.num_poses > 0 ? arc / params.num_poses : 0.0;
  for (int i = 0; i < params.num_poses; ++i) {
    const double theta = dtheta * i;
    Pose3 p;
    p.translation = Eigen::Vector3d(params.arc_radius * std::cos(theta),
                                    params.arc_radius * std::sin(theta), 0.0);
    p.rotation = Rot3::exp(Eigen::Vector3d(0.0, 0.0, theta + 0.5 * kPi));
    world.truth.poses.push_back(p);
  }
  const Pose3 origin = world.truth.poses[0].inverse();
  for (auto& p : world.truth.poses) p = origin * p;

  // Landmarks near the path, separation enforced by rejection.
  for (int j = 0; j < params.num_landmarks; ++j) {
    Eigen::Vector3d candidate;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double theta = rng.uniform(0.0, 2.0 * kPi);
      const double radius = params.arc_radius + rng.uniform(-3.0, 3.0);
      candidate = origin * Eigen::Vector3d(radius * std::cos(theta), radius * std::sin(theta),
                                           rng.uniform(-1.0, 1.0));
      bool ok = true;
      for (const auto& other : world.truth.landmark_positions) {
        if ((candidate - other).norm() < params.min_landmark_separation) {
          ok = false;
          break;
        }
      }
      if (ok) break;
    }
    world.truth.landmark_positions.push_back(candidate);
    world.truth.landmark_classes.push_back(rng.uniform_int(params.num_classes));
  }

  for (int i = 0; i + 1 < params.num_poses; ++i) {
    const Pose3 rel = world.truth.poses[static_cast<std::size_t>(i)].inverse() *
                      world.truth.poses[static_cast<std::size_t>(i) + 1];
    Vector6 xi;
    xi << rng.normal3(params.odometry_sigma_rotation),
        rng.normal3(params.odometry_sigma_translation);
    world.measurements.odometry.push_back(rel * Pose3::exp(xi));
  }

  for (int i = 0; i < params.num_poses; ++i) {
    const Pose3& pose = world.truth.poses[static_cast<std::size_t>(i)];
    for (int j = 0; j < params.num_landmarks; ++j) {
      const Eigen::Vector3d& lm = world.truth.landmark_positions[static_cast<std::size_t>(j)];
      if ((lm - pose.translation).norm() > params.sensor_range) continue;
      Eigen::Vector3d z = range_bearing_predict(pose, lm);
      z[0] = wrap_angle(z[0] + params.bearing_sigma * rng.normal());
      z[1] += params.bearing_sigma * rng.normal();
      z[2] += params.range_sigma * rng.normal();
      Detection det;
      det.pose_index = i;
      det.range_bearing = z;
      det.observed_class = sample_category(
          rng, world.measurements.confusion.row(
                   world.truth.landmark_classes[static_cast<std::size_t>(j)]));
      world.measurements.detections.push_back(det);
      world.truth.detection_landmark.push_back(j);
    }
  }
  return world;
}

std::vector<Pose3> odometry_trajectory(const SemanticMeasurements& measurements) {
  std::vector<Pose3> out{Pose3::identity()};
  for (const auto& rel : measurements.odometry) out.push_back(out.back() * rel);
  return out;
}

double absolute_trajectory_error(const std::vector<Pose3>& estimate,
                                 const std::vector<Pose3>& truth) {
  if (estimate.size() != truth.size() || estimate.empty()) {
    throw InvalidArgument("trajectories must have equal nonzero length");
  }
  // RMSE after the usual rigid alignment, so the anchor's gauge does not
  // dominate the comparison.
  const auto n = static_cast<double>(estimate.size());
  Eigen::Vector3d ce = Eigen::Vector3d::Zero(), ct = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    ce += estimate[i].translation;
    ct += truth[i].translation;
  }
  ce /= n;
  ct /= n;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    h += (estimate[i].translation - ce) * (truth[i].translation - ct).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixV() * svd.matrixU().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d v = svd.matrixV();
    v.col(2) *= -1.0;
    r = v * svd.matrixU().transpose();
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const Eigen::Vector3d aligned = r * (estimate[i].translation - ce) + ct;
    sum += (aligned - truth[i].translation).squaredNorm();
  }
  return std::sqrt(sum / n);
}

namespace {

struct Mapper {
  Mapper(const SemanticMeasurements& measurements, const AssociationParams& association,
         const DcParams& solver_params)
      : meas(measurements), assoc(association), params(solver_params) {}

  const SemanticMeasurements& meas;
  const AssociationParams& assoc;
  const DcParams& params;

  FactorGraph graph;
  HybridAssignment estimate;
  std::vector<KeyId> pose_keys;
  std::vector<KeyId> landmark_position_keys;
  std::vector<KeyId> landmark_class_keys;
  // For each detection: either the singleton landmark, or the hypothesis
  // list plus the selector key to resolve at the end.
  struct DetectionRecord {
    std::vector<int> hypotheses;
    KeyId selector = 0;
    bool is_mixture = false;
  };
  std::vector<DetectionRecord> records;
  SolveTrace last_trace;
  int next_selector = 0;

  NoiseModel detection_noise() const {
    return NoiseModel::from_sigmas(
        (Eigen::VectorXd(3) << meas.bearing_sigma, meas.bearing_sigma, meas.range_sigma)
            .finished());
  }

  NoiseModel odometry_noise() const {
    Eigen::VectorXd s(6);
    s << meas.odometry_sigma_rotation, meas.odometry_sigma_rotation,
        meas.odometry_sigma_rotation, meas.odometry_sigma_translation,
        meas.odometry_sigma_translation, meas.odometry_sigma_translation;
    return NoiseModel::from_sigmas(s);
  }

  void extend(const std::vector<VariableKey>& vars, const std::vector<Factor>& factors,
              HybridAssignment warm) {
    DcResult result = incremental_extend(graph, vars, factors, warm, params);
    estimate = std::move(result.estimate);
    last_trace = std::move(result.trace);
  }

  void add_pose(int index) {
    const VariableKey pose =
        VariableKey::continuous(key('x', static_cast<std::uint64_t>(index)), ManifoldKind::se3());
    pose_keys.push_back(pose.id);
    HybridAssignment warm = estimate;
    std::vector<Factor> factors;
    if (index == 0) {
      warm.continuous[pose.id] = Pose3::identity();
      factors.push_back(make_prior(pose, Pose3::identity(),
                                   NoiseModel::from_sqrt_information(
                                       Eigen::MatrixXd::Identity(6, 6) * 1e3)));
      graph.add_variable(pose);
      graph.add_factor(factors[0]);
      estimate.continuous[pose.id] = Pose3::identity();
      return;  // nothing to solve yet
    }
    const Pose3& rel = meas.odometry[static_cast<std::size_t>(index) - 1];
    const Pose3 prev = std::get<Pose3>(estimate.continuous.at(pose_keys[index - 1]));
    warm.continuous[pose.id] = prev * rel;
    factors.push_back(make_between(graph.variable(pose_keys[index - 1]), pose, rel,
                                   odometry_noise()));
    extend({pose}, factors, std::move(warm));
  }

  int spawn_landmark(int pose_index, const Detection& det, std::vector<VariableKey>& vars,
                     std::vector<Factor>& factors, HybridAssignment& warm) {
    const int j = static_cast<int>(landmark_position_keys.size());
    const VariableKey pos =
        VariableKey::continuous(key('l', static_cast<std::uint64_t>(j)),
                                ManifoldKind::vector_space(3));
    const VariableKey cls = VariableKey::discrete(key('c', static_cast<std::uint64_t>(j)),
                                                  meas.num_classes);
    landmark_position_keys.push_back(pos.id);
    landmark_class_keys.push_back(cls.id);
    vars.push_back(pos);
    vars.push_back(cls);

    const Pose3 x = std::get<Pose3>(warm.continuous.at(pose_keys[pose_index]));
    const Eigen::Vector3d p =
        x * (bearing_direction(det.range_bearing[0], det.range_bearing[1]) *
             det.range_bearing[2]);
    warm.continuous[pos.id] = Eigen::VectorXd(p);

    factors.push_back(make_range_bearing(graph.variable(pose_keys[pose_index]), pos,
                                         det.range_bearing, detection_noise()));
    factors.push_back(make_discrete_table(
        {cls}, meas.confusion.col(det.observed_class)));
    return j;
  }

  Factor make_mixture_factor(int pose_index, const Detection& det,
                             const std::vector<int>& hypotheses, const VariableKey& selector) {
    Factor f;
    f.keys.push_back(graph.variable(pose_keys[pose_index]));
    for (int j : hypotheses) {
      f.keys.push_back(graph.variable(landmark_position_keys[static_cast<std::size_t>(j)]));
    }
    f.keys.push_back(selector);
    for (int j : hypotheses) {
      f.keys.push_back(graph.variable(landmark_class_keys[static_cast<std::size_t>(j)]));
    }

    HybridResidualPayload payload;
    payload.num_continuous = 1 + hypotheses.size();
    const Eigen::Vector3d z = det.range_bearing;
    const std::size_t h_count = hypotheses.size();
    const int num_classes = meas.num_classes;

    std::vector<int> cards;
    cards.push_back(static_cast<int>(h_count));
    for (std::size_t h = 0; h < h_count; ++h) cards.push_back(num_classes);
    const std::size_t table = joint_table_size(cards);

    auto selected = [cards](std::size_t a) {
      std::vector<int> vals;
      unflatten_index(a, cards, vals);
      return vals;
    };

    payload.residual = [z, selected](const std::vector<Value>& v, std::size_t a) {
      const int sel = selected(a)[0];
      const Pose3& x = std::get<Pose3>(v[0]);
      const Eigen::VectorXd& p = std::get<Eigen::VectorXd>(v[static_cast<std::size_t>(sel) + 1]);
      const Eigen::Vector3d predicted = range_bearing_predict(x, p.head<3>());
      Eigen::VectorXd r(3);
      r << wrap_angle(predicted[0] - z[0]), predicted[1] - z[1], predicted[2] - z[2];
      return r;
    };
    payload.jacobian = [selected, h_count](const std::vector<Value>& v, std::size_t a) {
      const int sel = selected(a)[0];
      const Pose3& x = std::get<Pose3>(v[0]);
      const Eigen::VectorXd& p = std::get<Eigen::VectorXd>(v[static_cast<std::size_t>(sel) + 1]);
      Eigen::Matrix<double, 3, 6> j_pose;
      Eigen::Matrix3d j_point;
      range_bearing_jacobians(x, p.head<3>(), j_pose, j_point);
      std::vector<Eigen::MatrixXd> blocks;
      blocks.push_back(j_pose);
      for (std::size_t h = 0; h < h_count; ++h) {
        blocks.push_back(static_cast<int>(h) == sel ? Eigen::MatrixXd(j_point)
                                                    : Eigen::MatrixXd(Eigen::Matrix3d::Zero()));
      }
      return blocks;
    };
    payload.noise.assign(table, detection_noise());
    payload.offset.resize(static_cast<Eigen::Index>(table));
    for (std::size_t a = 0; a < table; ++a) {
      const auto vals = selected(a);
      const int sel = vals[0];
      const int cls = vals[static_cast<std::size_t>(sel) + 1];
      payload.offset[static_cast<Eigen::Index>(a)] =
          -std::log(meas.confusion(cls, det.observed_class));
    }
    f.payload = std::move(payload);
    return f;
  }

  void process_detections(int pose_index, const std::vector<const Detection*>& dets) {
    if (dets.empty()) return;

    // Current Laplace marginals for gating.
    std::map<KeyId, Eigen::VectorXd> class_marginals;
    MarginalCovariance cov;
    if (!landmark_position_keys.empty()) {
      class_marginals = marginals(condition(graph, estimate.continuous),
                                  params.discrete_width_cap);
      std::vector<std::pair<KeyId, KeyId>> pairs;
      std::vector<KeyId> wanted{pose_keys[pose_index]};
      for (KeyId lk : landmark_position_keys) {
        wanted.push_back(lk);
        pairs.emplace_back(pose_keys[pose_index], lk);
      }
      cov = recover_covariance(graph, estimate.discrete, estimate.continuous, wanted, pairs);
    }

    std::vector<VariableKey> vars;
    std::vector<Factor> factors;
    HybridAssignment warm = estimate;
    const Pose3 x = std::get<Pose3>(estimate.continuous.at(pose_keys[pose_index]));
    const Eigen::Matrix3d r_meas = detection_noise().covariance();
    // Landmarks spawned within this batch have no marginals yet; gate only
    // against the ones that existed when the batch started.
    const std::size_t existing = landmark_position_keys.size();

    for (const Detection* det : dets) {
      std::vector<int> hypotheses;
      for (std::size_t j = 0; j < existing; ++j) {
        const Eigen::VectorXd& p =
            std::get<Eigen::VectorXd>(estimate.continuous.at(landmark_position_keys[j]));
        const Eigen::Vector3d predicted = range_bearing_predict(x, p.head<3>());
        Eigen::Vector3d innovation = det->range_bearing - predicted;
        innovation[0] = wrap_angle(innovation[0]);

        Eigen::Matrix<double, 3, 6> h_pose;
        Eigen::Matrix3d h_point;
        range_bearing_jacobians(x, p.head<3>(), h_pose, h_point);
        const Eigen::MatrixXd& p_xx = cov.blocks.at(pose_keys[pose_index]);
        const Eigen::MatrixXd& p_ll = cov.blocks.at(landmark_position_keys[j]);
        const Eigen::MatrixXd& p_xl =
            cov.joint_blocks.at({pose_keys[pose_index], landmark_position_keys[j]});
        Eigen::Matrix3d s = h_pose * p_xx * h_pose.transpose() +
                            h_point * p_ll * h_point.transpose() + r_meas;
        const Eigen::Matrix3d cross = h_pose * p_xl * h_point.transpose();
        s += cross + cross.transpose();

        const double quadratic = innovation.dot(s.inverse() * innovation);
        const double geometric =
            std::exp(-0.5 * quadratic) /
            (std::pow(2.0 * kPi, 1.5) * std::sqrt(std::max(s.determinant(), 1e-300)));
        double class_term = 0.0;
        const Eigen::VectorXd& marg = class_marginals.at(landmark_class_keys[j]);
        for (int c = 0; c < meas.num_classes; ++c) {
          class_term += marg[c] * meas.confusion(c, det->observed_class);
        }
        if (geometric * class_term > assoc.likelihood_threshold) {
          hypotheses.push_back(static_cast<int>(j));
        }
      }

      DetectionRecord record;
      if (hypotheses.empty()) {
        const int j = spawn_landmark(pose_index, *det, vars, factors, warm);
        record.hypotheses = {j};
      } else if (hypotheses.size() == 1) {
        const int j = hypotheses[0];
        record.hypotheses = {j};
        factors.push_back(make_range_bearing(
            graph.variable(pose_keys[pose_index]),
            graph.variable(landmark_position_keys[static_cast<std::size_t>(j)]),
            det->range_bearing, detection_noise()));
        factors.push_back(make_discrete_table(
            {graph.variable(landmark_class_keys[static_cast<std::size_t>(j)])},
            meas.confusion.col(det->observed_class)));
      } else {
        const VariableKey selector =
            VariableKey::discrete(key('a', static_cast<std::uint64_t>(next_selector++)),
                                  static_cast<int>(hypotheses.size()));
        vars.push_back(selector);
        record.hypotheses = hypotheses;
        record.selector = selector.id;
        record.is_mixture = true;
        factors.push_back(make_mixture_factor(pose_index, *det, hypotheses, selector));
      }
      records.push_back(std::move(record));
    }
    extend(vars, factors, std::move(warm));
  }
};

}  // namespace

SemanticSlamResult build_semantic_slam(const SemanticMeasurements& measurements,
                                       const AssociationParams& association,
                                       const DcParams& params) {
  if (!(association.likelihood_threshold > 0.0)) {
    throw InvalidArgument("association likelihood threshold must be positive");
  }
  for (std::size_t k = 1; k < measurements.detections.size(); ++k) {
    if (measurements.detections[k].pose_index < measurements.detections[k - 1].pose_index) {
      throw InvalidArgument("detections must arrive in pose-index order");
    }
  }
  const int num_poses = static_cast<int>(measurements.odometry.size()) + 1;
  Mapper mapper(measurements, association, params);

  std::size_t cursor = 0;
  for (int i = 0; i < num_poses; ++i) {
    mapper.add_pose(i);
    std::vector<const Detection*> dets;
    while (cursor < measurements.detections.size() &&
           measurements.detections[cursor].pose_index == i) {
      dets.push_back(&measurements.detections[cursor]);
      ++cursor;
    }
    mapper.process_detections(i, dets);
  }

  SemanticSlamResult result;
  result.pose_keys = mapper.pose_keys;
  result.landmark_position_keys = mapper.landmark_position_keys;
  result.landmark_class_keys = mapper.landmark_class_keys;
  for (const auto& record : mapper.records) {
    if (record.is_mixture) {
      const int sel = mapper.estimate.discrete.at(record.selector);
      result.detection_landmark.push_back(record.hypotheses[static_cast<std::size_t>(sel)]);
    } else {
      result.detection_landmark.push_back(record.hypotheses[0]);
    }
  }
  result.graph = std::move(mapper.graph);
  result.estimate = std::move(mapper.estimate);
  result.last_trace = std::move(mapper.last_trace);
  return result;
}

}  // namespace dcfg::problems

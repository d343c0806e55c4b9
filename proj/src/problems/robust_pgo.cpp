#include "dcfg/problems/robust_pgo.hpp"

#include <algorithm>
#include <cmath>

#include "dcfg/random.hpp"

namespace dcfg::problems {

namespace {

NoiseModel default_anchor_noise(int dim) {
  return NoiseModel::from_sqrt_information(Eigen::MatrixXd::Identity(dim, dim) * 1e3);
}

Value identity_of(const ManifoldKind& kind) {
  return exp_map(kind, Eigen::VectorXd::Zero(kind.tangent_dim()));
}

}  // namespace

RobustPgoProblem build_robust_pgo(const PgoDataset& dataset, const SwitchableDefaults& defaults,
                                  const Value& anchor, std::optional<NoiseModel> anchor_noise) {
  if (dataset.num_poses < 1) throw InvalidArgument("pose graph needs at least one pose");
  // Spanning odometry chain over contiguous pose indices.
  std::vector<bool> reached(static_cast<std::size_t>(dataset.num_poses), false);
  reached[0] = true;
  for (const auto& e : dataset.odometry) {
    if (e.i < 0 || e.j < 0 || e.i >= dataset.num_poses || e.j >= dataset.num_poses) {
      throw InvalidArgument("odometry edge references a pose out of range");
    }
  }
  // Odometry edges are expected in chain order i -> i+1 but we only require
  // that the union reaches every pose.
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& e : dataset.odometry) {
      const auto i = static_cast<std::size_t>(e.i), j = static_cast<std::size_t>(e.j);
      if (reached[i] != reached[j]) {
        reached[i] = reached[j] = true;
        grew = true;
      }
    }
  }
  if (!std::all_of(reached.begin(), reached.end(), [](bool b) { return b; })) {
    throw DisconnectedGraph("odometry edges do not span all poses");
  }

  RobustPgoProblem problem;
  problem.pose_kind = dataset.pose_kind;
  const int tdim = dataset.pose_kind.tangent_dim();

  for (int i = 0; i < dataset.num_poses; ++i) {
    const VariableKey k = VariableKey::continuous(key('x', static_cast<std::uint64_t>(i)),
                                                  dataset.pose_kind);
    problem.graph.add_variable(k);
    problem.pose_keys.push_back(k.id);
  }
  problem.graph.add_factor(make_prior(problem.graph.variable(problem.pose_keys[0]), anchor,
                                      anchor_noise ? *anchor_noise : default_anchor_noise(tdim)));
  for (const auto& e : dataset.odometry) {
    problem.graph.add_factor(make_between(
        problem.graph.variable(problem.pose_keys[static_cast<std::size_t>(e.i)]),
        problem.graph.variable(problem.pose_keys[static_cast<std::size_t>(e.j)]), e.measurement,
        e.noise));
  }
  const NoiseModel outlier_noise = NoiseModel::isotropic_variance(tdim, defaults.outlier_variance);
  for (std::size_t li = 0; li < dataset.loops.size(); ++li) {
    const auto& e = dataset.loops[li];
    // The outlier model must dominate the edge's own noise per tangent
    // dimension, otherwise the switch semantics invert.
    const Eigen::VectorXd edge_var = e.noise.covariance().diagonal();
    for (int k = 0; k < edge_var.size(); ++k) {
      if (!(defaults.outlier_variance > edge_var[k])) {
        throw InvalidArgument("outlier variance must exceed the loop noise variance");
      }
    }
    const VariableKey s = VariableKey::discrete(key('s', li), 2);
    problem.graph.add_variable(s);
    problem.switch_keys.push_back(s.id);
    problem.graph.add_factor(make_switchable_between(
        problem.graph.variable(problem.pose_keys[static_cast<std::size_t>(e.i)]),
        problem.graph.variable(problem.pose_keys[static_cast<std::size_t>(e.j)]), s,
        e.measurement, e.noise, outlier_noise, 1.0 - defaults.omega1, defaults.omega1));
  }
  return problem;
}

std::map<KeyId, Value> odometry_initialization(const RobustPgoProblem& problem,
                                               const PgoDataset& dataset, const Value& anchor) {
  std::map<KeyId, Value> init;
  init[problem.pose_keys[0]] = anchor;
  // Propagate along edges until all poses have estimates.
  std::vector<bool> done(problem.pose_keys.size(), false);
  done[0] = true;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& e : dataset.odometry) {
      const auto i = static_cast<std::size_t>(e.i), j = static_cast<std::size_t>(e.j);
      if (done[i] && !done[j]) {
        init[problem.pose_keys[j]] = compose(init.at(problem.pose_keys[i]), e.measurement);
        done[j] = true;
        grew = true;
      } else if (done[j] && !done[i]) {
        init[problem.pose_keys[i]] =
            compose(init.at(problem.pose_keys[j]), inverse(e.measurement));
        done[i] = true;
        grew = true;
      }
    }
  }
  return init;
}

void inject_outliers(PgoDataset& dataset, int count, std::uint64_t seed) {
  if (dataset.num_poses < 3) {
    throw InsufficientPoses("outlier injection needs at least 3 poses");
  }
  Rng rng(seed);
  const int tdim = dataset.pose_kind.tangent_dim();
  for (int k = 0; k < count; ++k) {
    int i = 0, j = 0;
    do {
      i = rng.uniform_int(dataset.num_poses);
      j = rng.uniform_int(dataset.num_poses);
    } while (std::abs(i - j) < 2);
    RelativePoseEdge e;
    e.i = std::min(i, j);
    e.j = std::max(i, j);
    if (dataset.pose_kind.type == ManifoldType::kSE3) {
      Pose3 m;
      m.rotation = Rot3{rng.haar_quaternion()};
      m.translation =
          Eigen::Vector3d(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
      e.measurement = m;
    } else if (dataset.pose_kind.type == ManifoldType::kSE2) {
      Pose2 m(rng.uniform(-3.14159265358979323846, 3.14159265358979323846),
              Eigen::Vector2d(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)));
      e.measurement = m;
    } else {
      throw InvalidArgument("outlier injection supports SE(2) and SE(3) pose graphs");
    }
    e.noise = dataset.loops.empty() ? NoiseModel::isotropic_sigma(tdim, 0.1)
                                    : dataset.loops.front().noise;
    dataset.loops.push_back(std::move(e));
    dataset.loop_is_outlier.push_back(true);
  }
}

std::pair<double, double> classify_edges(const std::map<KeyId, int>& discrete,
                                         const std::map<KeyId, bool>& labels) {
  long tp = 0, fp = 0, fn = 0;
  for (const auto& [id, is_outlier] : labels) {
    auto it = discrete.find(id);
    if (it == discrete.end()) {
      throw MissingLabel("no prediction for switch key " + std::to_string(id));
    }
    const bool predicted = it->second == 1;
    if (predicted && is_outlier) ++tp;
    if (predicted && !is_outlier) ++fp;
    if (!predicted && is_outlier) ++fn;
  }
  const double precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
  const double recall = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
  return {precision, recall};
}

PgoDataset generate_pose_graph(const SyntheticPgoParams& params, std::uint64_t seed) {
  Rng rng(seed);
  PgoDataset data;
  data.pose_kind = ManifoldKind::se3();
  data.num_poses = params.num_poses;

  // Two stacked revolutions: poses revisit earlier headings with a small
  // height offset, producing natural loop-closure candidates.
  const double turns = 2.0;
  const double dtheta = turns * 2.0 * 3.14159265358979323846 / params.num_poses;
  for (int i = 0; i < params.num_poses; ++i) {
    const double theta = dtheta * i;
    Pose3 p;
    p.translation = Eigen::Vector3d(params.radius * std::cos(theta),
                                    params.radius * std::sin(theta), 0.4 * theta);
    p.rotation = Rot3::exp(Eigen::Vector3d(0.0, 0.0, theta + 0.5 * 3.14159265358979323846));
    data.ground_truth.push_back(p);
  }

  const NoiseModel odo_noise = NoiseModel::from_sigmas(
      (Eigen::VectorXd(6) << params.odometry_sigma_rotation, params.odometry_sigma_rotation,
       params.odometry_sigma_rotation, params.odometry_sigma_translation,
       params.odometry_sigma_translation, params.odometry_sigma_translation)
          .finished());
  const NoiseModel loop_noise = NoiseModel::from_sigmas(
      (Eigen::VectorXd(6) << params.loop_sigma_rotation, params.loop_sigma_rotation,
       params.loop_sigma_rotation, params.loop_sigma_translation,
       params.loop_sigma_translation, params.loop_sigma_translation)
          .finished());

  auto noisy_relative = [&](int i, int j, double sr, double st) {
    const Pose3 rel = std::get<Pose3>(data.ground_truth[static_cast<std::size_t>(i)])
                          .inverse() *
                      std::get<Pose3>(data.ground_truth[static_cast<std::size_t>(j)]);
    Vector6 xi;
    xi << rng.normal3(sr), rng.normal3(st);
    return rel * Pose3::exp(xi);
  };

  for (int i = 0; i + 1 < params.num_poses; ++i) {
    RelativePoseEdge e;
    e.i = i;
    e.j = i + 1;
    e.measurement =
        noisy_relative(i, i + 1, params.odometry_sigma_rotation, params.odometry_sigma_translation);
    e.noise = odo_noise;
    data.odometry.push_back(std::move(e));
  }
  for (int i = 0; i < params.num_poses; ++i) {
    for (int j = i + params.min_index_gap; j < params.num_poses; ++j) {
      const auto& pi = std::get<Pose3>(data.ground_truth[static_cast<std::size_t>(i)]);
      const auto& pj = std::get<Pose3>(data.ground_truth[static_cast<std::size_t>(j)]);
      if ((pi.translation - pj.translation).norm() > params.loop_radius) continue;
      RelativePoseEdge e;
      e.i = i;
      e.j = j;
      e.measurement = noisy_relative(i, j, params.loop_sigma_rotation, params.loop_sigma_translation);
      e.noise = loop_noise;
      data.loops.push_back(std::move(e));
      data.loop_is_outlier.push_back(false);
    }
  }
  return data;
}

double inlier_only_cost(const PgoDataset& dataset, const std::map<KeyId, Value>& continuous,
                        const Value& anchor) {
  PgoDataset inliers = dataset;
  inliers.loops.clear();
  inliers.loop_is_outlier.clear();
  for (std::size_t i = 0; i < dataset.loops.size(); ++i) {
    if (i < dataset.loop_is_outlier.size() && dataset.loop_is_outlier[i]) continue;
    inliers.loops.push_back(dataset.loops[i]);
    inliers.loop_is_outlier.push_back(false);
  }
  // Inlier loops enter as plain between-factors (no switches, no weights).
  RobustPgoProblem ref;
  ref.pose_kind = inliers.pose_kind;
  for (int i = 0; i < inliers.num_poses; ++i) {
    ref.graph.add_variable(
        VariableKey::continuous(key('x', static_cast<std::uint64_t>(i)), inliers.pose_kind));
    ref.pose_keys.push_back(key('x', static_cast<std::uint64_t>(i)));
  }
  ref.graph.add_factor(make_prior(ref.graph.variable(ref.pose_keys[0]), anchor,
                                  default_anchor_noise(inliers.pose_kind.tangent_dim())));
  for (const auto& e : inliers.odometry) {
    ref.graph.add_factor(make_between(
        ref.graph.variable(ref.pose_keys[static_cast<std::size_t>(e.i)]),
        ref.graph.variable(ref.pose_keys[static_cast<std::size_t>(e.j)]), e.measurement, e.noise));
  }
  for (const auto& e : inliers.loops) {
    ref.graph.add_factor(make_between(
        ref.graph.variable(ref.pose_keys[static_cast<std::size_t>(e.i)]),
        ref.graph.variable(ref.pose_keys[static_cast<std::size_t>(e.j)]), e.measurement, e.noise));
  }
  HybridAssignment a;
  a.continuous = continuous;
  return 2.0 * ref.graph.objective(a, true);
}

std::pair<std::map<KeyId, Value>, double> solve_inlier_reference(const PgoDataset& dataset,
                                                                 const Value& anchor,
                                                                 const OptimizerParams& params) {
  PgoDataset inliers = dataset;
  inliers.loops.clear();
  inliers.loop_is_outlier.clear();
  std::vector<RelativePoseEdge> inlier_loops;
  for (std::size_t i = 0; i < dataset.loops.size(); ++i) {
    if (i < dataset.loop_is_outlier.size() && dataset.loop_is_outlier[i]) continue;
    inlier_loops.push_back(dataset.loops[i]);
  }

  FactorGraph graph;
  std::vector<KeyId> pose_keys;
  for (int i = 0; i < dataset.num_poses; ++i) {
    const KeyId id = key('x', static_cast<std::uint64_t>(i));
    graph.add_variable(VariableKey::continuous(id, dataset.pose_kind));
    pose_keys.push_back(id);
  }
  graph.add_factor(make_prior(graph.variable(pose_keys[0]), anchor,
                              default_anchor_noise(dataset.pose_kind.tangent_dim())));
  for (const auto& e : dataset.odometry) {
    graph.add_factor(make_between(graph.variable(pose_keys[static_cast<std::size_t>(e.i)]),
                                  graph.variable(pose_keys[static_cast<std::size_t>(e.j)]),
                                  e.measurement, e.noise));
  }
  for (const auto& e : inlier_loops) {
    graph.add_factor(make_between(graph.variable(pose_keys[static_cast<std::size_t>(e.i)]),
                                  graph.variable(pose_keys[static_cast<std::size_t>(e.j)]),
                                  e.measurement, e.noise));
  }

  RobustPgoProblem shell;
  shell.pose_keys = pose_keys;
  std::map<KeyId, Value> init = odometry_initialization(shell, dataset, anchor);
  auto [solution, stats] = optimize_continuous(graph, {}, std::move(init), params);
  HybridAssignment a;
  a.continuous = solution;
  const double cost = 2.0 * graph.objective(a, true);
  return {std::move(solution), cost};
}

RobustPgoRun run_robust_pgo(const PgoDataset& dataset, const SwitchableDefaults& defaults,
                            const DcParams& params) {
  RobustPgoRun run;
  const Value anchor =
      dataset.ground_truth.empty() ? identity_of(dataset.pose_kind) : dataset.ground_truth[0];
  run.problem = build_robust_pgo(dataset, defaults, anchor);
  HybridAssignment init;
  init.continuous = odometry_initialization(run.problem, dataset, anchor);
  run.result = solve(run.problem.graph, init, params);
  if (!dataset.loop_is_outlier.empty()) {
    std::map<KeyId, bool> labels;
    for (std::size_t i = 0; i < run.problem.switch_keys.size(); ++i) {
      labels[run.problem.switch_keys[i]] = dataset.loop_is_outlier[i];
    }
    const auto [precision, recall] = classify_edges(run.result.estimate.discrete, labels);
    run.precision = precision;
    run.recall = recall;
  }
  run.inlier_cost = inlier_only_cost(dataset, run.result.estimate.continuous, anchor);
  return run;
}

}  // namespace dcfg::problems

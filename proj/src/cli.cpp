#include "dcfg/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "dcfg/io/g2o.hpp"
#include "dcfg/io/metrics.hpp"
#include "dcfg/io/xyz.hpp"
#include "dcfg/problems/robust_pgo.hpp"
#include "dcfg/problems/semantic_slam.hpp"

namespace dcfg::io {

namespace {

Pose3 parse_pose_string(const std::string& text) {
  std::istringstream ss(text);
  double v[7];
  for (double& x : v) {
    if (!(ss >> x)) {
      throw InvalidArgument("pose must be 'tx ty tz qx qy qz qw', got: " + text);
    }
  }
  std::string rest;
  if (ss >> rest) throw InvalidArgument("trailing tokens in pose: " + text);
  Eigen::Quaterniond q(v[6], v[3], v[4], v[5]);
  if (std::abs(q.norm() - 1.0) > 1e-3) {
    throw UnnormalizedQuaternion("initial pose quaternion has |q| = " + std::to_string(q.norm()));
  }
  q.normalize();
  return Pose3(Rot3{q}, Eigen::Vector3d(v[0], v[1], v[2]));
}

std::string format_pose(const Pose3& p) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                p.translation.x(), p.translation.y(), p.translation.z(), p.rotation.q.x(),
                p.rotation.q.y(), p.rotation.q.z(), p.rotation.q.w());
  return buf;
}

void print_summary(double final_objective, std::size_t iterations) {
  std::printf("final_objective=%.12g iterations=%zu\n", final_objective, iterations);
}

struct IcpArgs {
  std::string source, target, out, out_transform, init_pose;
  double sigma = 1.0;
  int max_iter = 50;
  bool use_grid = false;
  bool timing = false;
};

int run_icp(const IcpArgs& args) {
  const std::string source_text = read_file(args.source);
  const std::string target_text = read_file(args.target);
  const problems::PointCloud source = parse_xyz(source_text);
  const problems::PointCloud target = parse_xyz(target_text);
  const Pose3 init = args.init_pose.empty() ? Pose3::identity() : parse_pose_string(args.init_pose);

  DcParams params;
  params.max_outer_iterations = args.max_iter;
  problems::RegistrationOptions options;
  options.use_grid = args.use_grid;
  const problems::RegistrationResult result =
      problems::register_clouds(source, target, init, args.sigma, params, options);

  MetricsRecord record;
  record.problem = "icp";
  record.problem_id = args.source + "|" + args.target;
  record.input_hash = fnv1a64_hex(source_text + "\x1f" + target_text);
  record.params = {{"sigma", args.sigma},
                   {"max_iter", args.max_iter},
                   {"grid", args.use_grid},
                   {"init_pose", args.init_pose}};
  record.include_timing = args.timing;
  fill_trace(record, result.trace);
  record.final_objective = result.objective;
  record.final_cost = 2.0 * result.objective;  // correspondence offsets are zero
  record.extras["transform"] = {result.transform.translation.x(),
                                result.transform.translation.y(),
                                result.transform.translation.z(),
                                result.transform.rotation.q.x(),
                                result.transform.rotation.q.y(),
                                result.transform.rotation.q.z(),
                                result.transform.rotation.q.w()};
  write_metrics(args.out, record);
  if (!args.out_transform.empty()) {
    write_file_atomic(args.out_transform, format_pose(result.transform));
  }
  print_summary(record.final_objective, result.trace.iterations.size());
  return 0;
}

struct RpgoArgs {
  std::string graph, out, out_graph, info_order = "trans-rot";
  int inject_outliers = -1;  // -1: flag absent
  std::uint64_t seed = 0;
  double omega1 = 1e-7;
  double outlier_var = 1.6e7;
  int max_iter = 50;
  bool timing = false;
};

int run_rpgo(const RpgoArgs& args) {
  const std::string text = read_file(args.graph);
  G2oParseOptions parse_options;
  if (args.info_order == "rot-trans") {
    parse_options.info_order = G2oInfoOrder::kRotationTranslation;
  } else if (args.info_order != "trans-rot") {
    throw InvalidArgument("--g2o-info-order must be trans-rot or rot-trans");
  }
  G2oDocument doc = parse_g2o(text, parse_options);
  if (doc.vertices.empty()) throw InvalidArgument("graph has no vertices");

  problems::PgoDataset dataset;
  dataset.pose_kind = doc.kind;
  dataset.num_poses = static_cast<int>(doc.vertices.size());
  {
    std::vector<bool> seen(doc.vertices.size(), false);
    for (const auto& v : doc.vertices) {
      if (v.id < 0 || v.id >= dataset.num_poses || seen[static_cast<std::size_t>(v.id)]) {
        throw InvalidArgument("vertex ids must be contiguous from 0");
      }
      seen[static_cast<std::size_t>(v.id)] = true;
    }
  }
  for (const auto& e : doc.edges) {
    problems::RelativePoseEdge edge;
    edge.i = e.i;
    edge.j = e.j;
    edge.measurement = e.measurement;
    edge.noise = NoiseModel::from_information(e.information);
    if (std::abs(e.i - e.j) == 1) {
      dataset.odometry.push_back(std::move(edge));
    } else {
      dataset.loops.push_back(std::move(edge));
      dataset.loop_is_outlier.push_back(false);
    }
  }
  const bool injected = args.inject_outliers >= 0;
  if (args.inject_outliers > 0) {
    problems::inject_outliers(dataset, args.inject_outliers, args.seed);
  }

  problems::SwitchableDefaults defaults;
  defaults.omega1 = args.omega1;
  defaults.outlier_variance = args.outlier_var;
  DcParams params;
  params.max_outer_iterations = args.max_iter;
  const problems::RobustPgoRun run = problems::run_robust_pgo(dataset, defaults, params);

  MetricsRecord record;
  record.problem = "rpgo";
  record.problem_id = args.graph;
  record.input_hash = fnv1a64_hex(text);
  record.seed = args.seed;
  record.params = {{"omega1", args.omega1},
                   {"outlier_var", args.outlier_var},
                   {"inject_outliers", args.inject_outliers},
                   {"max_iter", args.max_iter},
                   {"info_order", args.info_order}};
  record.include_timing = args.timing;
  fill_trace(record, run.result.trace);
  record.final_objective = run.problem.graph.objective(run.result.estimate, true);
  record.final_cost = quadratic_cost(run.problem.graph, run.result.estimate);
  record.inlier_cost = run.inlier_cost;
  if (injected) {
    record.precision = run.precision;
    record.recall = run.recall;
  }
  write_metrics(args.out, record);

  if (!args.out_graph.empty()) {
    G2oDocument solved = doc;
    for (auto& v : solved.vertices) {
      v.pose = run.result.estimate.continuous.at(
          key('x', static_cast<std::uint64_t>(v.id)));
    }
    write_file_atomic(args.out_graph, write_g2o(solved, parse_options));
  }
  print_summary(record.final_objective, run.result.trace.iterations.size());
  return 0;
}

struct SemsimArgs {
  int poses = 20, landmarks = 8, classes = 3;
  std::uint64_t seed = 0;
  double assoc_threshold = 1e-3;
  std::string out;
  bool timing = false;
};

int run_semsim(const SemsimArgs& args) {
  problems::SemanticWorldParams world_params;
  world_params.num_poses = args.poses;
  world_params.num_landmarks = args.landmarks;
  world_params.num_classes = args.classes;
  const problems::SemanticWorld world = problems::generate_semantic_world(world_params, args.seed);

  problems::AssociationParams assoc;
  assoc.likelihood_threshold = args.assoc_threshold;
  const problems::SemanticSlamResult result =
      problems::build_semantic_slam(world.measurements, assoc);

  std::vector<Pose3> estimated;
  for (KeyId k : result.pose_keys) {
    estimated.push_back(std::get<Pose3>(result.estimate.continuous.at(k)));
  }
  const double ate = problems::absolute_trajectory_error(estimated, world.truth.poses);
  const double ate_odo = problems::absolute_trajectory_error(
      problems::odometry_trajectory(world.measurements), world.truth.poses);

  MetricsRecord record;
  record.problem = "semsim";
  record.problem_id = "semsim-p" + std::to_string(args.poses) + "-l" +
                      std::to_string(args.landmarks) + "-c" + std::to_string(args.classes);
  record.seed = args.seed;
  record.params = {{"poses", args.poses},
                   {"landmarks", args.landmarks},
                   {"classes", args.classes},
                   {"assoc_threshold", args.assoc_threshold}};
  record.include_timing = args.timing;
  fill_trace(record, result.last_trace);
  record.final_objective = result.graph.objective(result.estimate, true);
  record.final_cost = quadratic_cost(result.graph, result.estimate);
  record.ate = ate;
  record.ate_odometry = ate_odo;
  record.extras["landmarks"] = result.num_landmarks();
  write_metrics(args.out, record);
  print_summary(record.final_objective, result.last_trace.iterations.size());
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Hybrid discrete-continuous factor-graph solver"};
  app.require_subcommand(1);

  IcpArgs icp;
  CLI::App* icp_cmd = app.add_subcommand("icp", "Point-cloud registration");
  icp_cmd->add_option("--source", icp.source, "Source cloud (xyz)")->required();
  icp_cmd->add_option("--target", icp.target, "Target cloud (xyz)")->required();
  icp_cmd->add_option("--sigma", icp.sigma, "Isotropic measurement sigma");
  icp_cmd->add_option("--max-iter", icp.max_iter, "Outer iteration cap");
  icp_cmd->add_option("--init-pose", icp.init_pose, "Initial transform 'tx ty tz qx qy qz qw'");
  icp_cmd->add_option("--out", icp.out, "Metrics output path")->required();
  icp_cmd->add_option("--out-transform", icp.out_transform, "Write the final transform here");
  icp_cmd->add_flag("--grid", icp.use_grid, "Grid-accelerated exact nearest neighbor");
  icp_cmd->add_flag("--timing", icp.timing, "Include wall-clock fields in metrics");

  RpgoArgs rpgo;
  CLI::App* rpgo_cmd = app.add_subcommand("rpgo", "Robust pose-graph optimization");
  rpgo_cmd->add_option("--graph", rpgo.graph, "Pose graph (g2o)")->required();
  rpgo_cmd->add_option("--inject-outliers", rpgo.inject_outliers, "Spurious loop closures to add");
  rpgo_cmd->add_option("--seed", rpgo.seed, "Outlier injection seed");
  rpgo_cmd->add_option("--omega1", rpgo.omega1, "Outlier prior weight");
  rpgo_cmd->add_option("--outlier-var", rpgo.outlier_var, "Outlier model variance");
  rpgo_cmd->add_option("--max-iter", rpgo.max_iter, "Outer iteration cap");
  rpgo_cmd->add_option("--g2o-info-order", rpgo.info_order,
                       "Information tangent order in the file: trans-rot | rot-trans");
  rpgo_cmd->add_option("--out", rpgo.out, "Metrics output path")->required();
  rpgo_cmd->add_option("--out-graph", rpgo.out_graph, "Write the solved graph here");
  rpgo_cmd->add_flag("--timing", rpgo.timing, "Include wall-clock fields in metrics");

  SemsimArgs semsim;
  CLI::App* semsim_cmd = app.add_subcommand("semsim", "Synthetic semantic SLAM");
  semsim_cmd->add_option("--poses", semsim.poses, "Trajectory length")->required();
  semsim_cmd->add_option("--landmarks", semsim.landmarks, "Landmark count")->required();
  semsim_cmd->add_option("--classes", semsim.classes, "Semantic class count")->required();
  semsim_cmd->add_option("--seed", semsim.seed, "World seed")->required();
  semsim_cmd->add_option("--assoc-threshold", semsim.assoc_threshold,
                         "Association likelihood gate");
  semsim_cmd->add_option("--out", semsim.out, "Metrics output path")->required();
  semsim_cmd->add_flag("--timing", semsim.timing, "Include wall-clock fields in metrics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help and friends
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (icp_cmd->parsed()) return run_icp(icp);
    if (rpgo_cmd->parsed()) return run_rpgo(rpgo);
    return run_semsim(semsim);
  } catch (const SingularSystem& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 1;
  } catch (const EmptySupport& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 1;
  } catch (const TreewidthExceeded& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 1;
  } catch (const MissingAssignment& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dcfg::io

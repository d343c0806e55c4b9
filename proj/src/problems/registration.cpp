#include "dcfg/problems/registration.hpp"

#include <cmath>
#include <limits>

namespace dcfg::problems {

Factor make_correspondence(const VariableKey& transform, const VariableKey& correspondence,
                           const Eigen::Vector3d& source_point, const PointCloud& target,
                           double sigma) {
  if (!correspondence.is_discrete() ||
      correspondence.cardinality() != static_cast<int>(target.size())) {
    throw InvalidArgument("correspondence cardinality must equal the target cloud size");
  }
  Factor f;
  f.keys = {transform, correspondence};
  HybridResidualPayload payload;
  payload.num_continuous = 1;
  const std::vector<Eigen::Vector3d> targets = target.points;  // own a copy
  payload.residual = [source_point, targets](const std::vector<Value>& v, std::size_t j) {
    const Pose3& t = std::get<Pose3>(v[0]);
    return Eigen::VectorXd(t * source_point - targets[j]);
  };
  payload.jacobian = [source_point](const std::vector<Value>& v, std::size_t) {
    const Pose3& t = std::get<Pose3>(v[0]);
    const Eigen::Matrix3d r = t.rotation.matrix();
    Eigen::MatrixXd j(3, 6);
    j.block<3, 3>(0, 0) = -r * skew(source_point);
    j.block<3, 3>(0, 3) = r;
    return std::vector<Eigen::MatrixXd>{j};
  };
  payload.noise.assign(target.size(), NoiseModel::isotropic_sigma(3, sigma));
  payload.offset = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(target.size()));
  f.payload = std::move(payload);
  return f;
}

RegistrationProblem build_registration(const PointCloud& source, const PointCloud& target,
                                       double sigma) {
  if (source.empty() || target.empty()) {
    throw EmptyCloud("registration needs non-empty source and target clouds");
  }
  RegistrationProblem problem;
  problem.transform_key = key('T', 0);
  const VariableKey t_key = VariableKey::continuous(problem.transform_key, ManifoldKind::se3());
  problem.graph.add_variable(t_key);
  for (std::size_t i = 0; i < source.size(); ++i) {
    const VariableKey d_key =
        VariableKey::discrete(key('d', i), static_cast<int>(target.size()));
    problem.graph.add_variable(d_key);
    problem.correspondence_keys.push_back(d_key.id);
    problem.graph.add_factor(
        make_correspondence(t_key, d_key, source.points[i], target, sigma));
  }
  return problem;
}

std::vector<int> nearest_neighbors(const Pose3& transform, const PointCloud& source,
                                   const PointCloud& target) {
  std::vector<int> out(source.size(), 0);
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Eigen::Vector3d p = transform * source.points[i];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < target.size(); ++j) {
      const double d = (p - target.points[j]).squaredNorm();
      if (d < best) {
        best = d;
        out[i] = static_cast<int>(j);
      }
    }
  }
  return out;
}

NearestNeighborGrid::NearestNeighborGrid(const PointCloud& points, double cell_size)
    : points_(points), cell_size_(cell_size) {
  if (points.empty()) throw EmptyCloud("grid index needs a non-empty cloud");
  if (!(cell_size > 0.0)) throw InvalidArgument("grid cell size must be positive");
  for (std::size_t i = 0; i < points.size(); ++i) {
    cells_[cell_of(points.points[i])].push_back(static_cast<int>(i));
  }
}

NearestNeighborGrid::CellKey NearestNeighborGrid::cell_of(const Eigen::Vector3d& p) const {
  return {static_cast<long>(std::floor(p.x() / cell_size_)),
          static_cast<long>(std::floor(p.y() / cell_size_)),
          static_cast<long>(std::floor(p.z() / cell_size_))};
}

int NearestNeighborGrid::query(const Eigen::Vector3d& p) const {
  const CellKey center = cell_of(p);
  double best = std::numeric_limits<double>::infinity();
  int best_index = -1;
  // Scan Chebyshev shells outward. A point in a cell at shell distance k+1
  // is at least k * cell_size away, so once that bound exceeds the current
  // best the search is complete.
  for (long radius = 0;; ++radius) {
    for (long dx = -radius; dx <= radius; ++dx) {
      for (long dy = -radius; dy <= radius; ++dy) {
        for (long dz = -radius; dz <= radius; ++dz) {
          if (std::max({std::labs(dx), std::labs(dy), std::labs(dz)}) != radius) continue;
          auto it = cells_.find({center.x + dx, center.y + dy, center.z + dz});
          if (it == cells_.end()) continue;
          for (int idx : it->second) {
            const double d = (p - points_.points[static_cast<std::size_t>(idx)]).squaredNorm();
            if (d < best || (d == best && idx < best_index)) {
              best = d;
              best_index = idx;
            }
          }
        }
      }
    }
    if (best_index >= 0) {
      const double bound = static_cast<double>(radius) * cell_size_;
      if (bound * bound >= best) break;
    }
  }
  return best_index;
}

RegistrationResult register_clouds(const PointCloud& source, const PointCloud& target,
                                   const Pose3& init, double sigma, const DcParams& params,
                                   const RegistrationOptions& options,
                                   const DiscretePhaseObserver& observer) {
  RegistrationProblem problem = build_registration(source, target, sigma);
  HybridAssignment start;
  start.continuous[problem.transform_key] = init;

  RegistrationResult result;
  if (!options.use_grid) {
    const DcResult solved = solve(problem.graph, start, params, observer);
    result.transform = std::get<Pose3>(solved.estimate.continuous.at(problem.transform_key));
    result.trace = solved.trace;
    result.objective = problem.graph.objective(solved.estimate, true);
    for (KeyId dk : problem.correspondence_keys) {
      result.correspondences.push_back(solved.estimate.discrete.at(dk));
    }
    return result;
  }

  // Grid-accelerated alternation: the discrete phase is an exact grid
  // nearest-neighbor query instead of conditioned table minimization.
  double cell = options.grid_cell;
  if (!(cell > 0.0)) {
    Eigen::Vector3d lo = target.points[0], hi = target.points[0];
    for (const auto& p : target.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    cell = std::max(1e-6, (hi - lo).maxCoeff() /
                              std::max(4.0, std::cbrt(static_cast<double>(target.size()))));
  }
  const NearestNeighborGrid grid(target, cell);

  std::map<KeyId, Value> c = start.continuous;
  std::map<KeyId, int> d;
  double prev_objective = std::numeric_limits<double>::infinity();
  result.trace.termination = "iteration_cap";
  for (int iter = 0; iter < params.max_outer_iterations; ++iter) {
    DcIterationRecord rec;
    const Pose3 t = std::get<Pose3>(c.at(problem.transform_key));
    std::map<KeyId, int> d_new;
    for (std::size_t i = 0; i < source.size(); ++i) {
      d_new[problem.correspondence_keys[i]] = grid.query(t * source.points[i]);
    }
    rec.discrete_changed = iter == 0 ? 0 : [&] {
      int flips = 0;
      for (const auto& [id, v] : d_new) {
        if (d.at(id) != v) ++flips;
      }
      return flips;
    }();
    rec.objective_after_discrete = problem.graph.objective({c, d_new}, true);
    rec.objective_before = iter == 0 ? rec.objective_after_discrete : prev_objective;
    if (observer) observer(iter, c, d_new);

    auto [c_next, stats] = optimize_continuous(problem.graph, d_new, c, params.continuous_params);
    rec.objective_after_continuous = problem.graph.objective({c_next, d_new}, true);
    rec.continuous_accepted_steps = stats.accepted_steps;
    result.trace.iterations.push_back(rec);

    const bool fixed =
        stats.converged() && (stats.accepted_steps == 0 || (iter > 0 && rec.discrete_changed == 0));
    const double decrease = prev_objective - rec.objective_after_continuous;
    c = std::move(c_next);
    d = std::move(d_new);
    prev_objective = rec.objective_after_continuous;
    if (fixed) {
      result.trace.termination = "fixed_point";
      break;
    }
    if (std::isfinite(decrease) &&
        decrease / std::max(std::abs(prev_objective), 1e-300) < params.relative_decrease_tol) {
      result.trace.termination = "relative_decrease";
      break;
    }
  }

  result.transform = std::get<Pose3>(c.at(problem.transform_key));
  result.objective = prev_objective;
  for (KeyId dk : problem.correspondence_keys) result.correspondences.push_back(d.at(dk));
  return result;
}

}  // namespace dcfg::problems

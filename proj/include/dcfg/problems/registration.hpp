#pragma once

#include <vector>

#include "dcfg/dc_solver.hpp"
#include "dcfg/factors.hpp"

namespace dcfg::problems {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// One source point against the whole target cloud: the discrete key selects
/// the corresponding target point, r(T, j) = T p_i - q_j with isotropic noise.
Factor make_correspondence(const VariableKey& transform, const VariableKey& correspondence,
                           const Eigen::Vector3d& source_point, const PointCloud& target,
                           double sigma);

struct RegistrationProblem {
  FactorGraph graph;
  KeyId transform_key = 0;
  std::vector<KeyId> correspondence_keys;  // one per source point
};

/// One SE(3) transform variable, one correspondence variable of cardinality
/// |target| per source point, one correspondence factor each.
RegistrationProblem build_registration(const PointCloud& source, const PointCloud& target,
                                       double sigma);

/// Exhaustive nearest neighbor of each transformed source point; ties go to
/// the smallest target index, matching the discrete solver's tie rule.
std::vector<int> nearest_neighbors(const Pose3& transform, const PointCloud& source,
                                   const PointCloud& target);

/// Uniform-grid exact nearest-neighbor index. Results are identical to the
/// naive search, including the tie rule.
class NearestNeighborGrid {
 public:
  NearestNeighborGrid(const PointCloud& points, double cell_size);
  int query(const Eigen::Vector3d& p) const;

 private:
  struct CellKey {
    long x, y, z;
    bool operator<(const CellKey& o) const {
      if (x != o.x) return x < o.x;
      if (y != o.y) return y < o.y;
      return z < o.z;
    }
  };
  CellKey cell_of(const Eigen::Vector3d& p) const;
  const PointCloud& points_;
  double cell_size_;
  std::map<CellKey, std::vector<int>> cells_;
};

struct RegistrationOptions {
  bool use_grid = false;   // grid-accelerated discrete phase (still exact)
  double grid_cell = 0.0;  // 0: pick from the target cloud extent
};

struct RegistrationResult {
  Pose3 transform;
  std::vector<int> correspondences;
  SolveTrace trace;
  double objective = 0.0;
};

/// Alternating solve of the registration problem. The default path runs the
/// generic hybrid solver on the built graph; with use_grid the discrete phase
/// is replaced by grid nearest-neighbor queries, which is tested to produce
/// identical iterates.
RegistrationResult register_clouds(const PointCloud& source, const PointCloud& target,
                                   const Pose3& init, double sigma, const DcParams& params = {},
                                   const RegistrationOptions& options = {},
                                   const DiscretePhaseObserver& observer = nullptr);

}  // namespace dcfg::problems

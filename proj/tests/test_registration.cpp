#include <doctest.h>

#include <cmath>

#include "dcfg/problems/registration.hpp"
#include "support/oracles.hpp"

using namespace dcfg;
using namespace dcfg::problems;
using dcfg::test::reference_icp;

namespace {

PointCloud random_cloud(Rng& rng, int n, double extent) {
  PointCloud cloud;
  for (int i = 0; i < n; ++i) {
    cloud.points.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                              rng.uniform(-extent, extent));
  }
  return cloud;
}

PointCloud transformed(const PointCloud& cloud, const Pose3& t) {
  PointCloud out;
  for (const auto& p : cloud.points) out.points.push_back(t * p);
  return out;
}

double rotation_error(const Pose3& a, const Pose3& b) {
  return (a.rotation.inverse() * b.rotation).log().norm();
}

}  // namespace

TEST_CASE("build_registration constructs the expected graph") {
  Rng rng(101);
  const PointCloud source = random_cloud(rng, 3, 1.0);
  const PointCloud target = random_cloud(rng, 5, 1.0);
  const RegistrationProblem problem = build_registration(source, target, 0.1);
  CHECK(problem.graph.continuous_variables().size() == 1);
  const auto discrete = problem.graph.discrete_variables();
  CHECK(discrete.size() == 3);
  for (const auto& key : discrete) CHECK(key.cardinality() == 5);
  CHECK(problem.graph.factors().size() == 3);
}

TEST_CASE("registration rejects empty clouds") {
  const PointCloud empty;
  const PointCloud one{{Eigen::Vector3d::Zero()}};
  CHECK_THROWS_AS(build_registration(empty, one, 0.1), EmptyCloud);
  CHECK_THROWS_AS(build_registration(one, empty, 0.1), EmptyCloud);
}

TEST_CASE("identical clouds register to the identity") {
  Rng rng(103);
  const PointCloud cloud = random_cloud(rng, 40, 2.0);
  const RegistrationResult result =
      register_clouds(cloud, cloud, Pose3::identity(), 0.1);
  CHECK(result.transform.translation.norm() < 1e-9);
  CHECK(result.transform.rotation.log().norm() < 1e-9);
  CHECK(result.objective < 1e-12);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(result.correspondences[i] == static_cast<int>(i));
  }
}

TEST_CASE("known rigid transform is recovered from a nearby initialization") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(300 + seed);
    const PointCloud source = random_cloud(rng, 200, 3.0);
    const Pose3 truth = Pose3::exp(
        (Vector6() << rng.normal3(0.15), rng.normal3(0.8)).finished());
    const PointCloud target = transformed(source, truth);

    // Initialization within 10 degrees / 0.2 m of the truth.
    Vector6 offset;
    offset << rng.normal3(1.0).normalized() * 0.12, rng.normal3(1.0).normalized() * 0.15;
    const Pose3 init = truth * Pose3::exp(offset);

    // Every discrete phase must equal the exhaustive nearest-neighbor map of
    // the transformed source points.
    const RegistrationProblem problem = build_registration(source, target, 0.1);
    const DiscretePhaseObserver observer = [&](int, const std::map<KeyId, Value>& c,
                                               const std::map<KeyId, int>& d) {
      const Pose3 t = std::get<Pose3>(c.at(problem.transform_key));
      const std::vector<int> nn = nearest_neighbors(t, source, target);
      for (std::size_t i = 0; i < source.size(); ++i) {
        CHECK(d.at(problem.correspondence_keys[i]) == nn[i]);
      }
    };
    const RegistrationResult result =
        register_clouds(source, target, init, 0.1, {}, {}, observer);
    CHECK((result.transform.translation - truth.translation).norm() < 1e-3);
    CHECK(rotation_error(result.transform, truth) < 1e-3);

    // Reference oracle: nearest neighbor + closed-form alignment.
    const auto reference = reference_icp(source, target, init);
    CHECK((result.transform.translation - reference.transform.translation).norm() < 1e-6);
    CHECK(rotation_error(result.transform, reference.transform) < 1e-6);
    CHECK(result.correspondences == reference.correspondences);
  }
}

TEST_CASE("registration trace is monotone") {
  Rng rng(107);
  const PointCloud source = random_cloud(rng, 60, 2.0);
  const Pose3 truth = Pose3::exp((Vector6() << 0.0, 0.0, 0.2, 0.4, -0.2, 0.1).finished());
  const PointCloud target = transformed(source, truth);
  const RegistrationResult result =
      register_clouds(source, target, Pose3::identity(), 0.1);
  double previous = std::numeric_limits<double>::infinity();
  for (const auto& it : result.trace.iterations) {
    CHECK(it.objective_after_discrete <= it.objective_before + 1e-9);
    CHECK(it.objective_after_continuous <= it.objective_after_discrete + 1e-9);
    CHECK(it.objective_before <= previous + 1e-9);
    previous = it.objective_after_continuous;
  }
}

TEST_CASE("grid nearest neighbor is exact, including the tie rule") {
  Rng rng(109);
  PointCloud cloud = random_cloud(rng, 300, 4.0);
  // Duplicate a few points so ties actually occur.
  cloud.points.push_back(cloud.points[7]);
  cloud.points.push_back(cloud.points[3]);
  const NearestNeighborGrid grid(cloud, 0.8);
  PointCloud singleton{{Eigen::Vector3d::Zero()}};
  for (int q = 0; q < 500; ++q) {
    const Eigen::Vector3d p = rng.normal3(3.0);
    singleton.points[0] = p;
    // Naive argmin with the smallest-index tie rule.
    int naive = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      const double d = (p - cloud.points[j]).squaredNorm();
      if (d < best) {
        best = d;
        naive = static_cast<int>(j);
      }
    }
    CHECK(grid.query(p) == naive);
  }
  // Exact duplicates resolve to the smaller index.
  CHECK(grid.query(cloud.points[7]) == 7);
  CHECK(grid.query(cloud.points[3]) == 3);
}

TEST_CASE("grid-accelerated registration matches the generic path exactly") {
  Rng rng(113);
  const PointCloud source = random_cloud(rng, 80, 2.5);
  const Pose3 truth = Pose3::exp((Vector6() << 0.05, -0.1, 0.15, 0.5, 0.3, -0.2).finished());
  const PointCloud target = transformed(source, truth);
  const Pose3 init = truth * Pose3::exp((Vector6() << 0.05, 0.0, -0.05, 0.1, 0.0, 0.1).finished());

  const RegistrationResult generic = register_clouds(source, target, init, 0.1);
  RegistrationOptions options;
  options.use_grid = true;
  const RegistrationResult grid = register_clouds(source, target, init, 0.1, {}, options);
  CHECK(grid.correspondences == generic.correspondences);
  CHECK((grid.transform.translation - generic.transform.translation).norm() < 1e-12);
  CHECK(rotation_error(grid.transform, generic.transform) < 1e-12);
  REQUIRE(grid.trace.iterations.size() == generic.trace.iterations.size());
  for (std::size_t i = 0; i < grid.trace.iterations.size(); ++i) {
    CHECK(grid.trace.iterations[i].objective_after_continuous ==
          doctest::Approx(generic.trace.iterations[i].objective_after_continuous)
              .epsilon(1e-12));
  }
}

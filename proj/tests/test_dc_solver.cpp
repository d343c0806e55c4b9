#include <doctest.h>

#include <cmath>

#include "dcfg/dc_solver.hpp"
#include "dcfg/factors.hpp"
#include "support/oracles.hpp"

using namespace dcfg;
using dcfg::test::enumerate_mpe;
using dcfg::test::random_pose3;

namespace {

const NoiseModel kTight = NoiseModel::isotropic_sigma(6, 0.05);
const NoiseModel kOutlier = NoiseModel::isotropic_variance(6, 1.6e7);

// Two poses, trusted odometry, two untrusted loop measurements on the same
// pair: one consistent with odometry, one ten meters off.
struct ToySwitchProblem {
  FactorGraph graph;
  KeyId x0 = key('x', 0), x1 = key('x', 1);
  KeyId s_good = key('s', 0), s_wild = key('s', 1);
  Pose3 inlier_measurement;
};

ToySwitchProblem toy_switch_problem() {
  ToySwitchProblem p;
  p.inlier_measurement = Pose3::exp((Vector6() << 0.0, 0.0, 0.1, 1.0, 0.0, 0.0).finished());
  p.graph.add_variable(VariableKey::continuous(p.x0, ManifoldKind::se3()));
  p.graph.add_variable(VariableKey::continuous(p.x1, ManifoldKind::se3()));
  p.graph.add_variable(VariableKey::discrete(p.s_good, 2));
  p.graph.add_variable(VariableKey::discrete(p.s_wild, 2));
  p.graph.add_factor(make_prior(p.graph.variable(p.x0), Pose3::identity(),
                                NoiseModel::isotropic_sigma(6, 1e-3)));
  p.graph.add_factor(make_between(p.graph.variable(p.x0), p.graph.variable(p.x1),
                                  p.inlier_measurement, kTight));
  p.graph.add_factor(make_switchable_between(p.graph.variable(p.x0), p.graph.variable(p.x1),
                                             p.graph.variable(p.s_good), p.inlier_measurement,
                                             kTight, kOutlier, 1.0 - 1e-7, 1e-7));
  Pose3 wild = p.inlier_measurement;
  wild.translation += Eigen::Vector3d(10.0, -4.0, 2.0);
  p.graph.add_factor(make_switchable_between(p.graph.variable(p.x0), p.graph.variable(p.x1),
                                             p.graph.variable(p.s_wild), wild, kTight, kOutlier,
                                             1.0 - 1e-7, 1e-7));
  return p;
}

void check_trace_monotone(const SolveTrace& trace) {
  double previous = std::numeric_limits<double>::infinity();
  for (const auto& it : trace.iterations) {
    CHECK(it.objective_before <= previous + 1e-9);
    CHECK(it.objective_after_discrete <= it.objective_before + 1e-9);
    CHECK(it.objective_after_continuous <= it.objective_after_discrete + 1e-9);
    previous = it.objective_after_continuous;
  }
}

}  // namespace

TEST_CASE("purely continuous graphs reduce to one continuous solve") {
  FactorGraph g;
  g.add_variable(VariableKey::continuous(0, ManifoldKind::vector_space(2)));
  g.add_factor(make_prior(g.variable(0), Eigen::VectorXd(Eigen::Vector2d(3.0, 4.0)),
                          NoiseModel::isotropic_sigma(2, 1.0)));
  HybridAssignment init;
  init.continuous[0] = Eigen::VectorXd(Eigen::Vector2d(0.0, 0.0));
  const DcResult result = solve(g, init);
  // One outer iteration: a trivial discrete phase plus the continuous solve.
  REQUIRE(result.trace.iterations.size() == 1);
  CHECK(result.trace.iterations[0].discrete_changed == 0);
  CHECK((std::get<Eigen::VectorXd>(result.estimate.continuous.at(0)) -
         Eigen::Vector2d(3.0, 4.0))
            .norm() < 1e-9);
  check_trace_monotone(result.trace);
}

TEST_CASE("purely discrete graphs reduce to one discrete solve") {
  FactorGraph g;
  g.add_variable(VariableKey::discrete(0, 3));
  g.add_factor(make_discrete_table({g.variable(0)}, Eigen::Vector3d(0.2, 0.5, 0.3)));
  const DcResult result = solve(g, HybridAssignment{});
  CHECK(result.trace.iterations.size() == 1);
  CHECK(result.estimate.discrete.at(0) == 1);
  CHECK(result.trace.termination == "fixed_point");
}

TEST_CASE("toy switch problem: the wild edge is rejected") {
  ToySwitchProblem p = toy_switch_problem();
  HybridAssignment init;
  init.continuous[p.x0] = Pose3::identity();
  init.continuous[p.x1] = Pose3::identity();  // deliberately off
  const DcResult result = solve(p.graph, init);
  CHECK(result.estimate.discrete.at(p.s_good) == 0);
  CHECK(result.estimate.discrete.at(p.s_wild) == 1);
  const Pose3 x1 = std::get<Pose3>(result.estimate.continuous.at(p.x1));
  CHECK((x1.inverse() * p.inlier_measurement).log().lpNorm<Eigen::Infinity>() < 1e-6);
  check_trace_monotone(result.trace);

  // Oracle: solve the continuous problem to optimality for each of the four
  // discrete assignments and take the best pair.
  double best_cost = std::numeric_limits<double>::infinity();
  std::map<KeyId, int> best_d;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      std::map<KeyId, int> d{{p.s_good, a}, {p.s_wild, b}};
      OptimizerParams tight;
      tight.relative_decrease_tol = 1e-12;
      tight.absolute_decrease_tol = 1e-14;
      auto [c, stats] = optimize_continuous(p.graph, d, init.continuous, tight);
      const double cost = p.graph.objective({c, d}, true);
      if (cost < best_cost) {
        best_cost = cost;
        best_d = d;
      }
    }
  }
  CHECK(result.estimate.discrete == best_d);
  CHECK(p.graph.objective(result.estimate, true) <= best_cost + 1e-6);
}

TEST_CASE("discrete phases are exact at every iteration") {
  ToySwitchProblem p = toy_switch_problem();
  HybridAssignment init;
  init.continuous[p.x0] = Pose3::identity();
  init.continuous[p.x1] = random_pose3(*[] {
    static Rng rng(83);
    return &rng;
  }(), 0.3, 1.0);
  int checked = 0;
  const auto observer = [&](int, const std::map<KeyId, Value>& c,
                            const std::map<KeyId, int>& d) {
    const auto cond = condition(p.graph, c);
    const auto expected = enumerate_mpe(cond);
    CHECK(d == expected.assignment);
    ++checked;
  };
  const DcResult result = solve(p.graph, init, {}, observer);
  CHECK(checked == static_cast<int>(result.trace.iterations.size()));
  check_trace_monotone(result.trace);
}

TEST_CASE("re-solving at the solution is a fixed point") {
  ToySwitchProblem p = toy_switch_problem();
  HybridAssignment init;
  init.continuous[p.x0] = Pose3::identity();
  init.continuous[p.x1] = Pose3::identity();
  const DcResult first = solve(p.graph, init);
  const DcResult again = solve(p.graph, first.estimate);
  REQUIRE(again.trace.iterations.size() == 1);
  CHECK(again.trace.iterations[0].discrete_changed == 0);
  CHECK(again.trace.iterations[0].continuous_accepted_steps == 0);
  CHECK(again.trace.termination == "fixed_point");
}

TEST_CASE("initial discrete guesses seed the baseline but are re-solved") {
  ToySwitchProblem p = toy_switch_problem();
  HybridAssignment init;
  init.continuous[p.x0] = Pose3::identity();
  init.continuous[p.x1] = p.inlier_measurement;
  init.discrete[p.s_good] = 1;  // deliberately wrong
  init.discrete[p.s_wild] = 0;
  const DcResult result = solve(p.graph, init);
  CHECK(result.estimate.discrete.at(p.s_good) == 0);
  CHECK(result.estimate.discrete.at(p.s_wild) == 1);
  CHECK(result.trace.iterations[0].discrete_changed == 2);
  check_trace_monotone(result.trace);
}

TEST_CASE("errors carry the failing outer iteration") {
  FactorGraph g;
  g.add_variable(VariableKey::continuous(0, ManifoldKind::vector_space(2)));
  // No factors on the variable: the damped system stays singular.
  g.add_variable(VariableKey::continuous(1, ManifoldKind::vector_space(2)));
  g.add_factor(make_prior(g.variable(1), Eigen::VectorXd(Eigen::Vector2d(0, 0)),
                          NoiseModel::isotropic_sigma(2, 1.0)));
  HybridAssignment init;
  init.continuous[0] = Eigen::VectorXd(Eigen::Vector2d(0, 0));
  init.continuous[1] = Eigen::VectorXd(Eigen::Vector2d(1, 1));
  try {
    solve(g, init);
    FAIL("expected SingularSystem");
  } catch (const SingularSystem& e) {
    CHECK(e.outer_iteration == 0);
  }
}

TEST_CASE("solve requires initial values for every continuous variable") {
  ToySwitchProblem p = toy_switch_problem();
  HybridAssignment init;
  init.continuous[p.x0] = Pose3::identity();
  CHECK_THROWS_AS(solve(p.graph, init), MissingAssignment);
}

namespace {

// Chain of poses grown two at a time with a consistent switchable loop on
// every growth step; used for the incremental tests.
struct GrowthState {
  FactorGraph graph;
  HybridAssignment solution;
  std::map<KeyId, Value> all_inits;  // every variable's first value, for cold solves
  int poses = 0;
  int loops = 0;
};

GrowthState growth_start() {
  GrowthState s;
  const VariableKey x0 = VariableKey::continuous(key('x', 0), ManifoldKind::se3());
  s.graph.add_variable(x0);
  s.graph.add_factor(make_prior(x0, Pose3::identity(), NoiseModel::isotropic_sigma(6, 1e-2)));
  s.solution.continuous[x0.id] = Pose3::identity();
  s.all_inits[x0.id] = Pose3::identity();
  s.poses = 1;
  return s;
}

DcResult grow_pose(GrowthState& s, Rng& rng, bool with_loop) {
  const VariableKey prev = s.graph.variable(key('x', static_cast<std::uint64_t>(s.poses - 1)));
  const VariableKey next =
      VariableKey::continuous(key('x', static_cast<std::uint64_t>(s.poses)), ManifoldKind::se3());
  const Pose3 motion = Pose3::exp((Vector6() << 0.0, 0.0, 0.2, 1.0, 0.0, 0.0).finished());
  Vector6 noise;
  noise << rng.normal3(0.005), rng.normal3(0.01);
  const Pose3 measured = motion * Pose3::exp(noise);

  std::vector<VariableKey> new_vars{next};
  std::vector<Factor> new_factors{make_between(prev, next, measured, kTight)};
  HybridAssignment warm = s.solution;
  const Pose3 init = std::get<Pose3>(warm.continuous.at(prev.id)) * measured;
  warm.continuous[next.id] = init;
  s.all_inits[next.id] = init;
  ++s.poses;

  if (with_loop && s.poses >= 3) {
    const VariableKey far = s.graph.variable(key('x', 0));
    const VariableKey sw =
        VariableKey::discrete(key('s', static_cast<std::uint64_t>(s.loops++)), 2);
    new_vars.push_back(sw);
    // A loop measurement consistent with the current estimate of the chain.
    const Pose3 rel = std::get<Pose3>(warm.continuous.at(far.id)).inverse() * init;
    new_factors.push_back(make_switchable_between(far, next, sw, rel, kTight, kOutlier,
                                                  1.0 - 1e-7, 1e-7));
  }
  DcResult result = incremental_extend(s.graph, new_vars, new_factors, warm);
  s.solution = result.estimate;
  return result;
}

}  // namespace

TEST_CASE("incremental extension with no new discrete variables") {
  Rng rng(89);
  GrowthState s = growth_start();
  const DcResult r = grow_pose(s, rng, false);
  CHECK(r.trace.first_phase_components == 0);
  CHECK(r.trace.first_phase_variables == 0);
  check_trace_monotone(r.trace);
}

TEST_CASE("a new switchable loop is solved as one singleton component") {
  Rng rng(97);
  GrowthState s = growth_start();
  grow_pose(s, rng, false);
  grow_pose(s, rng, false);
  const DcResult r = grow_pose(s, rng, true);
  CHECK(r.trace.first_phase_components == 1);
  CHECK(r.trace.first_phase_variables == 1);
  check_trace_monotone(r.trace);
  // The result can only improve on the warm start completed by the first
  // discrete phase, whose objective is the first recorded baseline.
  CHECK(s.graph.objective(s.solution, true) <=
        r.trace.iterations.front().objective_before + 1e-9);
}

TEST_CASE("extension without an init for a new continuous variable fails") {
  GrowthState s = growth_start();
  const VariableKey next = VariableKey::continuous(key('x', 1), ManifoldKind::se3());
  const VariableKey prev = s.graph.variable(key('x', 0));
  std::vector<Factor> factors{
      make_between(prev, next, Pose3::identity(), kTight)};
  CHECK_THROWS_AS(incremental_extend(s.graph, {next}, factors, s.solution), MissingAssignment);
}

TEST_CASE("incremental growth matches a cold batch solve") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(200 + seed);
    GrowthState s = growth_start();
    for (int step = 1; step < 8; ++step) grow_pose(s, rng, step % 3 == 0);

    HybridAssignment cold_init;
    cold_init.continuous = s.all_inits;
    const DcResult cold = solve(s.graph, cold_init);
    const double warm_objective = s.graph.objective(s.solution, true);
    const double cold_objective = s.graph.objective(cold.estimate, true);
    CHECK(std::abs(warm_objective - cold_objective) <=
          1e-6 * std::max(1.0, std::abs(cold_objective)));
  }
}

TEST_CASE("per-iteration marginals are recorded on request") {
  ToySwitchProblem p = toy_switch_problem();
  HybridAssignment init;
  init.continuous[p.x0] = Pose3::identity();
  init.continuous[p.x1] = Pose3::identity();
  DcParams params;
  params.compute_marginals_each_iter = true;
  const DcResult result = solve(p.graph, init, params);
  REQUIRE(result.trace.per_iteration_marginals.size() == result.trace.iterations.size());
  for (const auto& per_iter : result.trace.per_iteration_marginals) {
    REQUIRE(per_iter.count(p.s_good) == 1);
    REQUIRE(per_iter.count(p.s_wild) == 1);
    for (const auto& [id, prob] : per_iter) {
      CHECK(std::abs(prob.sum() - 1.0) < 1e-10);
    }
  }
  // At the solution the wild switch is confidently an outlier.
  CHECK(result.trace.per_iteration_marginals.back().at(p.s_wild)[1] > 0.99);
}

TEST_CASE("a new discrete variable coupled to old ones forces a full first phase") {
  Rng rng(211);
  GrowthState s = growth_start();
  grow_pose(s, rng, false);
  grow_pose(s, rng, false);
  grow_pose(s, rng, true);  // creates switch s0

  // New switch s1 plus a discrete table tying it to s0: the conditioned
  // component of s1 now contains an old discrete variable, so the restricted
  // first phase must fall back to solving everything.
  const VariableKey s0 = s.graph.variable(key('s', 0));
  const VariableKey s1 = VariableKey::discrete(key('s', 1), 2);
  const VariableKey x0 = s.graph.variable(key('x', 0));
  const VariableKey x3 = s.graph.variable(key('x', 3));
  const Pose3 rel = std::get<Pose3>(s.solution.continuous.at(x0.id)).inverse() *
                    std::get<Pose3>(s.solution.continuous.at(x3.id));
  std::vector<Factor> factors{
      make_switchable_between(x0, x3, s1, rel, kTight, kOutlier, 1.0 - 1e-7, 1e-7),
      make_discrete_table({s0, s1},
                          (Eigen::VectorXd(4) << 0.6, 0.4, 0.4, 0.6).finished())};
  const DcResult r = incremental_extend(s.graph, {s1}, factors, s.solution);
  CHECK(r.trace.first_phase_components == 1);  // {s0, s1} merged into one
  CHECK(r.trace.first_phase_variables == 2);
  check_trace_monotone(r.trace);
}

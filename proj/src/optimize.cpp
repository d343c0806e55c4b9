#include "dcfg/optimize.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>

namespace dcfg {

namespace {

std::map<KeyId, Value> apply_step(const std::map<KeyId, Value>& values,
                                  const LinearSystem& sys, const Eigen::VectorXd& delta) {
  std::map<KeyId, Value> out = values;
  for (const auto& [id, block] : sys.column_index) {
    const auto [offset, width] = block;
    out.at(id) = retract(values.at(id), delta.segment(offset, width));
  }
  return out;
}

}  // namespace

std::pair<std::map<KeyId, Value>, OptimizeStats> optimize_continuous(
    const FactorGraph& graph, const std::map<KeyId, int>& discrete,
    std::map<KeyId, Value> initial, const OptimizerParams& params) {
  if (params.max_iterations < 1 || !(params.relative_decrease_tol > 0.0) ||
      !(params.absolute_decrease_tol > 0.0) || !(params.lm_lambda_init > 0.0) ||
      !(params.lm_lambda_factor > 1.0) || !(params.lm_lambda_max > 0.0) ||
      !std::isfinite(params.relative_decrease_tol) ||
      !std::isfinite(params.absolute_decrease_tol)) {
    throw InvalidArgument("optimizer parameters must be positive and finite");
  }
  for (const auto& [id, key] : graph.variables()) {
    if (!key.is_discrete() && !initial.count(id)) {
      throw MissingAssignment("no initial value for continuous key " + std::to_string(id));
    }
  }

  OptimizeStats stats;
  double objective = residual_objective(graph, discrete, initial);
  stats.initial_objective = objective;
  stats.final_objective = objective;

  // Nothing to optimize without continuous variables.
  bool any_continuous = false;
  for (const auto& [id, key] : graph.variables()) {
    if (!key.is_discrete()) any_continuous = true;
  }
  if (!any_continuous) {
    stats.reason = TerminationReason::kConverged;
    return {std::move(initial), stats};
  }

  double lambda = params.lm_lambda_init;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    ++stats.iterations;
    const LinearSystem sys = linearize(graph, discrete, initial);
    Eigen::SparseMatrix<double> hessian =
        Eigen::SparseMatrix<double>(sys.jacobian.transpose()) * sys.jacobian;
    const Eigen::VectorXd atb = sys.jacobian.transpose() * sys.rhs;  // -gradient
    const Eigen::VectorXd diag = hessian.diagonal();

    {
      // Symbolic analysis once per linearization; the lambda ladder below
      // only changes values on this pattern.
      Eigen::SparseMatrix<double> damped = hessian;
      for (int i = 0; i < damped.rows(); ++i) damped.coeffRef(i, i) = diag[i] + 1.0;
      llt.analyzePattern(damped);
    }

    // Each iteration first tries the undamped Gauss-Newton step (Newton-exact
    // on quadratics); on rejection the damped ladder takes over from the
    // current lambda.
    bool gauss_newton_attempt = true;
    bool relinearize = false;
    while (!relinearize) {
      const double lambda_try = gauss_newton_attempt ? 0.0 : lambda;
      Eigen::SparseMatrix<double> damped = hessian;
      for (int i = 0; i < damped.rows(); ++i) {
        damped.coeffRef(i, i) = diag[i] * (1.0 + lambda_try);
      }
      llt.factorize(damped);
      if (llt.info() != Eigen::Success) {
        if (gauss_newton_attempt) {
          gauss_newton_attempt = false;
          continue;
        }
        lambda *= params.lm_lambda_factor;
        if (lambda > params.lm_lambda_max) {
          throw SingularSystem(
              "damped normal matrix is not positive definite at lambda_max; "
              "the graph is under-constrained (missing prior or gauge freedom)");
        }
        continue;
      }
      const Eigen::VectorXd delta = llt.solve(atb);
      const double predicted =
          0.5 * (delta.dot(atb) + lambda_try * diag.cwiseProduct(delta).dot(delta));
      if (predicted <=
          params.absolute_decrease_tol + params.relative_decrease_tol * objective) {
        // The model cannot improve meaningfully; we are at a critical point
        // within tolerance.
        stats.reason = TerminationReason::kConverged;
        stats.final_objective = objective;
        return {std::move(initial), stats};
      }
      const auto candidate = apply_step(initial, sys, delta);
      const double candidate_objective = residual_objective(graph, discrete, candidate);
      if (candidate_objective < objective) {
        const double decrease = objective - candidate_objective;
        const double relative = decrease / std::max(objective, 1e-300);
        initial = candidate;
        objective = candidate_objective;
        ++stats.accepted_steps;
        if (!gauss_newton_attempt) {
          lambda = std::max(lambda / params.lm_lambda_factor, 1e-12);
        }
        if (decrease < params.absolute_decrease_tol ||
            relative < params.relative_decrease_tol) {
          stats.reason = TerminationReason::kConverged;
          stats.final_objective = objective;
          return {std::move(initial), stats};
        }
        relinearize = true;
      } else if (gauss_newton_attempt) {
        gauss_newton_attempt = false;
      } else {
        lambda *= params.lm_lambda_factor;
        if (lambda > params.lm_lambda_max) {
          // Factorizable but no descent left at maximal damping.
          stats.reason = TerminationReason::kLambdaMax;
          stats.final_objective = objective;
          return {std::move(initial), stats};
        }
      }
    }
  }

  stats.reason = TerminationReason::kIterationCap;
  stats.final_objective = objective;
  return {std::move(initial), stats};
}

MarginalCovariance recover_covariance(
    const FactorGraph& graph, const std::map<KeyId, int>& discrete,
    const std::map<KeyId, Value>& continuous, const std::vector<KeyId>& keys,
    const std::vector<std::pair<KeyId, KeyId>>& pairs) {
  const LinearSystem sys = linearize(graph, discrete, continuous);
  const Eigen::SparseMatrix<double> hessian =
      Eigen::SparseMatrix<double>(sys.jacobian.transpose()) * sys.jacobian;

  MarginalCovariance out;
  const Eigen::VectorXd gradient = -(sys.jacobian.transpose() * sys.rhs);
  out.gradient_norm = gradient.size() ? gradient.lpNorm<Eigen::Infinity>() : 0.0;
  const double objective = residual_objective(graph, discrete, continuous);
  out.criticality_warning = out.gradient_norm > 1e-5 * (1.0 + std::abs(objective));

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(hessian);
  if (llt.info() != Eigen::Success) {
    throw SingularSystem(
        "information matrix is singular; the graph has gauge freedom (e.g. no prior)");
  }

  // Solve A X = E for the requested column blocks only.
  std::map<KeyId, Eigen::MatrixXd> solved;
  auto solve_block = [&](KeyId id) -> const Eigen::MatrixXd& {
    auto it = solved.find(id);
    if (it != solved.end()) return it->second;
    auto ci = sys.column_index.find(id);
    if (ci == sys.column_index.end()) {
      throw UnknownKey("covariance requested for unknown continuous key " + std::to_string(id));
    }
    const auto [offset, width] = ci->second;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(sys.cols(), width);
    rhs.block(offset, 0, width, width).setIdentity();
    return solved.emplace(id, llt.solve(rhs)).first->second;
  };

  for (KeyId id : keys) {
    const Eigen::MatrixXd& x = solve_block(id);
    const auto [offset, width] = sys.column_index.at(id);
    out.blocks[id] = x.block(offset, 0, width, width);
  }
  for (const auto& [a, b] : pairs) {
    const Eigen::MatrixXd& xb = solve_block(b);
    auto ca = sys.column_index.find(a);
    if (ca == sys.column_index.end()) {
      throw UnknownKey("covariance requested for unknown continuous key " + std::to_string(a));
    }
    const auto [oa, wa] = ca->second;
    out.joint_blocks[{a, b}] = xb.block(oa, 0, wa, xb.cols());
  }
  return out;
}

}  // namespace dcfg

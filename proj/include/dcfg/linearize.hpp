#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <map>

#include "dcfg/graph.hpp"

namespace dcfg {

/// Whitened Gauss-Newton system at a linearization point: rows are stacked
/// whitened residual Jacobians with respect to tangent perturbations under
/// retract, rhs is the negated whitened residual. Column blocks cover every
/// continuous variable of the graph in ascending key order.
struct LinearSystem {
  Eigen::SparseMatrix<double> jacobian;
  Eigen::VectorXd rhs;
  std::map<KeyId, std::pair<int, int>> column_index;  // key -> (offset, width)

  int cols() const { return static_cast<int>(jacobian.cols()); }
  int rows() const { return static_cast<int>(jacobian.rows()); }
};

/// Linearizes all residual-bearing factors with the discrete assignment
/// fixed. Pure discrete factors contribute nothing; hybrid and mixture
/// factors contribute the residual selected by the assignment. Factors
/// without an analytic Jacobian fall back to central finite differences.
LinearSystem linearize(const FactorGraph& graph, const std::map<KeyId, int>& discrete,
                       const std::map<KeyId, Value>& continuous);

/// Sum of the residual-factor terms of the objective at (continuous,
/// discrete): 0.5 |whitened residual|^2 plus hybrid/mixture offsets. Discrete
/// tables, being constant in the continuous variables, are excluded.
double residual_objective(const FactorGraph& graph, const std::map<KeyId, int>& discrete,
                          const std::map<KeyId, Value>& continuous);

/// Central finite-difference Jacobian blocks of a residual function, step h,
/// perturbing each key through retract.
std::vector<Eigen::MatrixXd> numeric_jacobians(
    const std::function<Eigen::VectorXd(const std::vector<Value>&)>& fn,
    const std::vector<Value>& values, double h = 1e-6);

}  // namespace dcfg

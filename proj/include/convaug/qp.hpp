#pragma once

#include <vector>

#include "convaug/core.hpp"
#include "convaug/problems.hpp"

namespace convaug {

struct QpResult {
  Vector x;
  /// Multipliers of the working constraints at the solution (same order as `active`).
  Vector multipliers;
  std::vector<Eigen::Index> active;
  std::size_t iterations = 0;
};

/// Primal active-set method for min 1/2 x'Hx + c'x s.t. A x <= b with H
/// positive definite. `start` must be feasible. Dense KKT solves; intended for
/// the small problems the library ships (d <= 200, a few hundred rows).
QpResult solve_inequality_qp(const Matrix& H, const Vector& c, const Matrix& A, const Vector& b,
                             const Vector& start, std::size_t max_iterations = 10000,
                             double tol = 1e-12);

/// Constrained minimizer of a quadratic over a polytope. Starts from the
/// witness, the box centre, or an Agmon feasible point.
Vector constrained_minimizer(const QuadraticProblem& problem, const Polytope& polytope);

}  // namespace convaug

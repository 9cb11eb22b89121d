#include "convaug/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "convaug/augment.hpp"

namespace convaug {

namespace {

// Solves the equality-constrained step
//   [H  Aw'] [p     ]   [-g]
//   [Aw 0  ] [lambda] = [ 0]
void solve_kkt(const Matrix& H, const Matrix& Aw, const Vector& g, Vector& p, Vector& lambda) {
  const Eigen::Index d = H.rows();
  const Eigen::Index k = Aw.rows();
  if (k == 0) {
    p = H.llt().solve(-g);
    lambda.resize(0);
    return;
  }
  Matrix K = Matrix::Zero(d + k, d + k);
  K.topLeftCorner(d, d) = H;
  K.topRightCorner(d, k) = Aw.transpose();
  K.bottomLeftCorner(k, d) = Aw;
  Vector rhs = Vector::Zero(d + k);
  rhs.head(d) = -g;
  const Vector sol = K.fullPivLu().solve(rhs);
  p = sol.head(d);
  lambda = sol.tail(k);
}

}  // namespace

QpResult solve_inequality_qp(const Matrix& H, const Vector& c, const Matrix& A, const Vector& b,
                             const Vector& start, std::size_t max_iterations, double tol) {
  const Eigen::Index d = H.rows();
  const Eigen::Index m = A.rows();
  if (start.size() != d || c.size() != d || A.cols() != d || b.size() != m)
    throw InvalidArgument("qp: dimension mismatch");
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (m > 0 && (A * start - b).maxCoeff() > 1e-9 * scale)
    throw InvalidArgument("qp: start point is infeasible");

  QpResult result;
  Vector x = start;
  std::vector<Eigen::Index> working;
  std::vector<char> in_working(static_cast<std::size_t>(m), 0);
  const double step_tol = tol * std::max(1.0, start.norm());

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    result.iterations = iter + 1;
    Matrix Aw(static_cast<Eigen::Index>(working.size()), d);
    for (std::size_t r = 0; r < working.size(); ++r) Aw.row(static_cast<Eigen::Index>(r)) = A.row(working[r]);
    const Vector g = H * x + c;
    Vector p, lambda;
    solve_kkt(H, Aw, g, p, lambda);

    if (p.norm() <= step_tol) {
      // Multipliers for A_w x <= b_w must be non-negative.
      Eigen::Index worst = -1;
      double most_negative = -tol * std::max(1.0, g.norm());
      for (Eigen::Index r = 0; r < lambda.size(); ++r) {
        if (lambda[r] < most_negative) {
          most_negative = lambda[r];
          worst = r;
        }
      }
      if (worst < 0) {
        result.x = x;
        result.multipliers = lambda;
        result.active = working;
        return result;
      }
      in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(worst)])] = 0;
      working.erase(working.begin() + worst);
      continue;
    }

    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_working[static_cast<std::size_t>(i)]) continue;
      const double ap = A.row(i).dot(p);
      if (ap <= 1e-15 * p.norm()) continue;
      const double slack = std::max(0.0, b[i] - A.row(i).dot(x));
      const double ratio = slack / ap;
      if (ratio < alpha) {
        alpha = ratio;
        blocking = i;
      }
    }
    x += alpha * p;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_working[static_cast<std::size_t>(blocking)] = 1;
    }
  }
  throw ConvergenceFailure("qp: active-set iteration budget exhausted");
}

Vector constrained_minimizer(const QuadraticProblem& problem, const Polytope& polytope) {
  Vector start;
  if (polytope.witness) {
    start = *polytope.witness;
  } else {
    const CorrectionResult fixed =
        feasibility_correct(Vector::Zero(polytope.dim()), polytope, Vector::Zero(polytope.dim()),
                            0, 1e-12, /*require_feasible_anchor=*/false);
    if (fixed.warning) throw ConvergenceFailure("qp: could not find a feasible start point");
    start = fixed.v;
  }
  return solve_inequality_qp(problem.hessian, problem.linear, polytope.A, polytope.b, start).x;
}

}  // namespace convaug

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "convaug/core.hpp"

namespace convaug {

enum class ProblemClass { kRsi, kPl, kPlConvex, kStronglyConvex, kQuadratic };

std::string to_string(ProblemClass tag);
ProblemClass problem_class_from_string(const std::string& name);

/// Generic smooth objective with a known optimizer. The fixed-point set is a
/// single point for every problem the library ships.
struct SmoothProblem {
  std::string name;
  Eigen::Index dim = 0;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  /// prox(x, c) = argmin_y F(y) + |y - x|^2 / (2c). Empty when unavailable.
  std::function<Vector(const Vector&, double)> prox;
  Vector x_star;
  double mu = 0.0;
  double beta = 0.0;
  ProblemClass tag = ProblemClass::kStronglyConvex;

  double distance(const Vector& x) const { return (x - x_star).norm(); }
};

/// F(x) = 1/2 x'Hx + c'x + offset.
struct QuadraticProblem {
  std::string kind = "quadratic";
  Matrix hessian;
  Vector linear;
  double offset = 0.0;
  Vector x_star;
  double mu = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  /// Regression data when the instance is |Ax - b|^2.
  std::optional<Matrix> design;
  std::optional<Vector> target;

  Eigen::Index dim() const { return hessian.rows(); }
  double objective(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  /// Closed-form proximal map (I + cH)^{-1}(x - c*linear).
  Vector prox(const Vector& x, double c) const;
  SmoothProblem as_smooth() const;
};

/// {x : A x <= b}. `box_bound` marks the symmetric box |x|_inf <= bound, whose
/// rows are [I; -I].
struct Polytope {
  Matrix A;
  Vector b;
  std::optional<Vector> witness;
  std::optional<double> box_bound;

  static Polytope box(Eigen::Index dim, double bound);

  Eigen::Index dim() const { return A.cols(); }
  Eigen::Index rows() const { return A.rows(); }
  /// max_i (A_i x - b_i), clipped below at zero.
  double max_violation(const Vector& x) const;
  bool contains(const Vector& x, double tol = 0.0) const { return max_violation(x) <= tol; }
  /// Checks the interior witness, if present, with margin eps.
  void validate(double eps = 1e-8) const;
};

/// Linear MPC problem with its condensed (stacked) matrices for the
/// trajectory x_1..x_T = F x_0 + G u.
struct MpcProblem {
  Matrix dyn_A;
  Matrix dyn_B;
  Eigen::Index horizon = 0;
  Matrix Q, R, Q_T;
  double input_bound = 0.0;
  Matrix stacked_F;
  Matrix stacked_G;
  Matrix stacked_Q;
  Matrix stacked_R;

  Eigen::Index state_dim() const { return dyn_A.rows(); }
  Eigen::Index input_dim() const { return dyn_B.cols(); }
  /// Hessian of the condensed objective: 2 (G'QG + R).
  Matrix condensed_hessian() const;
};

struct Curvature {
  double mu;
  double beta;
  double kappa;
};

/// Extreme eigenvalues of a symmetric matrix.
Curvature curvature_constants(const Matrix& H);
/// Same, but raises PreconditionError unless mu > 0.
Curvature strongly_convex_constants(const Matrix& H);

/// Builds a quadratic, solving for x_star and the curvature constants.
/// Throws DegenerateInstance when mu <= 1e-14 * beta.
QuadraticProblem make_quadratic(Matrix hessian, Vector linear, double offset,
                                std::string kind = "quadratic", std::uint64_t seed = 0);

/// |Ax - b|^2 with A = base_A + noise, b = b_mean + noise.
QuadraticProblem sample_regression_instance(const Matrix& base_A, double noise_std_A,
                                            double b_mean, double noise_std_b,
                                            std::uint64_t seed);

/// U diag(s) V' with geometric singular values so that cond(A'A) = kappa.
Matrix synthetic_base_matrix(Eigen::Index dim, double kappa_AtA, std::uint64_t seed);

/// Random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
Matrix random_orthogonal(Eigen::Index dim, std::uint64_t seed);

/// Strongly convex quadratic with eigenvalues geometric in [mu, mu*kappa]
/// (both endpoints attained) and a random optimizer.
QuadraticProblem random_sc_quadratic(Eigen::Index dim, double kappa, std::uint64_t seed,
                                     double mu = 1.0);

/// f(x) = |x|^2 + 3 sum sin^2(x_i): nonconvex, x_star = 0, beta = 8. Tagged
/// PL; promote with certify_rsi before using it with gradient descent.
SmoothProblem make_sine_bowl(Eigen::Index dim, double declared_mu = 0.65);

/// Smallest sampled value of grad F(x)'(x - x*) / |x - x*|^2.
double estimate_rsi_constant(const SmoothProblem& problem, std::size_t probes,
                             std::uint64_t seed, double radius = 10.0);

/// Returns a copy tagged kRsi when the sampled RSI constant is at least the
/// declared mu; throws PreconditionError naming both values otherwise.
SmoothProblem certify_rsi(const SmoothProblem& problem, std::size_t probes, std::uint64_t seed);

/// Largest relative error between the gradient and central differences.
double gradient_check(const SmoothProblem& problem, std::size_t probes, std::uint64_t seed);

MpcProblem make_mpc(const Matrix& dyn_A, const Matrix& dyn_B, Eigen::Index horizon,
                    const Matrix& Q, const Matrix& R, const Matrix& Q_T, double input_bound);

/// Double integrator, T = 20, identity weights, |u|_inf <= 0.25.
MpcProblem double_integrator_mpc();

/// Condensed QP in the stacked input for initial state x0, together with the
/// box on the inputs. The objective equals the finite-horizon LQ cost
/// including the constant x0'(Q + F'QF)x0.
std::pair<QuadraticProblem, Polytope> build_stacked_mpc(const MpcProblem& mpc, const Vector& x0);

std::pair<QuadraticProblem, Polytope> build_stacked_mpc(const Matrix& dyn_A, const Matrix& dyn_B,
                                                        Eigen::Index horizon, const Matrix& Q,
                                                        const Matrix& R, const Matrix& Q_T,
                                                        double input_bound, const Vector& x0);

}  // namespace convaug

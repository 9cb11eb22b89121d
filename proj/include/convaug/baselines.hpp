#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "convaug/core.hpp"
#include "convaug/problems.hpp"

namespace convaug {

/// dist(xi_t, Fix) <= p(t) gamma^t dist(xi_0, Fix), with p given by its
/// coefficients in the monomial basis (poly_coeffs[j] multiplies t^j).
struct RateCertificate {
  std::vector<double> poly_coeffs{1.0};
  double gamma = 0.0;
  /// True iff p == 1, i.e. the distance contracts every step.
  bool monotone = true;

  static RateCertificate exp(double gamma);
  /// Constant polynomial p == c (c >= 1); monotone only when c == 1.
  static RateCertificate pexp(double c, double gamma);

  std::size_t degree() const { return poly_coeffs.empty() ? 0 : poly_coeffs.size() - 1; }
  double p(double t) const;
  double bound(double t) const;
  /// p(0) > 0, sampled monotonicity of p, gamma in (0,1). Rate 0 is allowed
  /// for perfectly conditioned problems.
  void validate() const;
};

/// A baseline fixed-point iteration xi_{t+1} = step(xi_t) bound to one
/// problem instance, with its rate certificate.
struct BaselineSpec {
  std::string name;
  Eigen::Index state_dim = 0;
  Eigen::Index decision_dim = 0;
  std::function<Vector(const Vector&)> step;
  /// phi: state -> decision.
  std::function<Vector(const Vector&)> output;
  /// decision -> state used to start a run (NAG: [x; x]).
  std::function<Vector(const Vector&)> lift;
  /// The unique fixed point, in state space.
  Vector fixed_point;
  std::optional<RateCertificate> certificate;
  double lipschitz = 1.0;
  /// Step size, when the method has one.
  double step_size = 0.0;
  std::shared_ptr<const SmoothProblem> problem;
  /// Feasible set for projected methods.
  std::optional<Polytope> constraints;
  /// Set by compose_baseline when the composed certificate is dropped.
  std::string warning;

  double distance(const Vector& state) const { return (state - fixed_point).norm(); }
  const RateCertificate& cert() const;
};

BaselineSpec gd_rsi(const SmoothProblem& problem);
BaselineSpec gd_rsi(const QuadraticProblem& problem);

struct NagOptions {
  /// Constant of the degree-0 certificate polynomial. When unset it is
  /// computed by nag_transient_constant.
  std::optional<double> poly_constant;
};

BaselineSpec nag(const SmoothProblem& problem, const NagOptions& options = {});
BaselineSpec nag(const QuadraticProblem& problem, const NagOptions& options = {});

/// sup over t and over curvatures lambda in [mu, beta] (log grid plus the
/// supplied spectrum) of |T(lambda)^t| / gamma^t, where T(lambda) is the 2x2
/// NAG iteration on the mode lambda. For quadratics whose spectrum is passed
/// this bounds the Euclidean state transient of every start point.
double nag_transient_constant(double mu, double beta, const std::vector<double>& spectrum = {},
                              std::size_t grid = 512);

/// Both branches of the proximal point rate min{1/sqrt(1+c mu), 1/sqrt(1+c^2/(beta mu))}.
struct ProxRateBranches {
  double curvature_branch;
  double smoothness_branch;
  double rate() const { return curvature_branch < smoothness_branch ? curvature_branch : smoothness_branch; }
};
ProxRateBranches prox_rate_branches(double mu, double beta, double c);

BaselineSpec proximal_point(const QuadraticProblem& problem, double c);
/// Generic version; requires problem.prox. Throws UnsupportedProblem otherwise.
BaselineSpec proximal_point(const SmoothProblem& problem, double c);

BaselineSpec projected_gradient(const QuadraticProblem& problem, const Polytope& polytope,
                                double eta);

/// Exact projection onto {|x|_inf <= bound}.
Vector project_box(const Vector& x, double bound);

/// Euclidean projection onto a polytope by Dykstra's alternating projections
/// over the half-spaces. Box polytopes are clamped exactly.
Vector project_polytope(const Vector& x, const Polytope& polytope, std::size_t max_iters = 100000,
                        double tol = 1e-12);

/// Builds a baseline by string id: "gd", "nag", "prox", "pgd".
BaselineSpec make_baseline(const std::string& id, const QuadraticProblem& problem,
                           const std::optional<Polytope>& polytope = std::nullopt,
                           double prox_c = 1.0);

}  // namespace convaug

#include "convaug/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "convaug/qp.hpp"

namespace convaug {

RateCertificate RateCertificate::exp(double gamma) {
  RateCertificate c;
  c.poly_coeffs = {1.0};
  c.gamma = gamma;
  c.monotone = true;
  return c;
}

RateCertificate RateCertificate::pexp(double constant, double gamma) {
  RateCertificate c;
  c.poly_coeffs = {constant};
  c.gamma = gamma;
  c.monotone = constant == 1.0;
  return c;
}

double RateCertificate::p(double t) const {
  double acc = 0.0;
  for (auto it = poly_coeffs.rbegin(); it != poly_coeffs.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double RateCertificate::bound(double t) const { return p(t) * std::pow(gamma, t); }

void RateCertificate::validate() const {
  if (poly_coeffs.empty() || !(p(0.0) > 0.0)) throw InvalidArgument("certificate: p(0) must be positive");
  for (int t = 0; t < 1000; ++t)
    if (p(t + 1) < p(t)) throw InvalidArgument("certificate: p must be non-decreasing");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("certificate: gamma must lie in [0, 1)");
}

const RateCertificate& BaselineSpec::cert() const {
  if (!certificate) throw PreconditionError("baseline '" + name + "' carries no rate certificate");
  return *certificate;
}

namespace {

Vector identity_map(const Vector& x) { return x; }

void require_positive_mu(const SmoothProblem& problem, const char* who) {
  if (!(problem.mu > 0.0) || !(problem.beta > 0.0)) {
    std::ostringstream os;
    os << who << ": requires mu > 0 and beta > 0 (got mu = " << problem.mu
       << ", beta = " << problem.beta << ")";
    throw PreconditionError(os.str());
  }
  if (problem.mu > problem.beta * (1.0 + 1e-12)) throw InvalidArgument(std::string(who) + ": mu > beta");
}

}  // namespace

BaselineSpec gd_rsi(const SmoothProblem& problem) {
  switch (problem.tag) {
    case ProblemClass::kRsi:
    case ProblemClass::kStronglyConvex:
    case ProblemClass::kQuadratic:
      break;
    default:
      throw PreconditionError("gd: problem class " + to_string(problem.tag) +
                              " does not certify monotone gradient descent; certify RSI first");
  }
  require_positive_mu(problem, "gd");
  auto data = std::make_shared<const SmoothProblem>(problem);
  const double mu = problem.mu;
  const double beta = problem.beta;
  const double eta = mu / (beta * beta);
  const double ratio = std::min(1.0, mu / beta);

  BaselineSpec spec;
  spec.name = "gd";
  spec.state_dim = problem.dim;
  spec.decision_dim = problem.dim;
  spec.step = [data, eta](const Vector& x) -> Vector { return x - eta * data->gradient(x); };
  spec.output = identity_map;
  spec.lift = identity_map;
  spec.fixed_point = problem.x_star;
  spec.certificate = RateCertificate::exp(std::sqrt(1.0 - ratio * ratio));
  spec.lipschitz = 1.0 + eta * beta;
  spec.step_size = eta;
  spec.problem = data;
  return spec;
}

BaselineSpec gd_rsi(const QuadraticProblem& problem) { return gd_rsi(problem.as_smooth()); }

namespace {

double spectral_norm_2x2(double a, double b, double c, double d) {
  const double s = a * a + b * b + c * c + d * d;
  const double det = a * d - b * c;
  const double disc = std::sqrt(std::max(0.0, s * s - 4.0 * det * det));
  return std::sqrt(0.5 * (s + disc));
}

}  // namespace

double nag_transient_constant(double mu, double beta, const std::vector<double>& spectrum,
                              std::size_t grid) {
  if (!(mu > 0.0) || !(beta >= mu)) throw InvalidArgument("nag constant: need 0 < mu <= beta");
  const double kappa = beta / mu;
  const double eta = 1.0 / beta;
  const double sk = std::sqrt(kappa);
  const double alpha = (sk - 1.0) / (sk + 1.0);
  const double gamma = std::sqrt(1.0 - 1.0 / sk);
  if (gamma == 0.0) return std::numeric_limits<double>::infinity();

  std::vector<double> lambdas = spectrum;
  for (std::size_t i = 0; i < grid; ++i) {
    const double frac = grid > 1 ? static_cast<double>(i) / static_cast<double>(grid - 1) : 0.0;
    lambdas.push_back(mu * std::pow(kappa, frac));
  }
  const auto cap = static_cast<std::size_t>(60.0 * sk + 200.0);
  double best = 1.0;
  for (double lambda : lambdas) {
    lambda = std::clamp(lambda, mu, beta);
    const double s = 1.0 - eta * lambda;
    const double t11 = (1.0 + alpha) * s, t12 = -alpha * s;
    // P = T^t, tracked entrywise.
    double p11 = 1.0, p12 = 0.0, p21 = 0.0, p22 = 1.0;
    double scale = 1.0;  // gamma^t
    for (std::size_t t = 1; t <= cap; ++t) {
      const double n11 = t11 * p11 + t12 * p21;
      const double n12 = t11 * p12 + t12 * p22;
      const double n21 = p11;
      const double n22 = p12;
      p11 = n11, p12 = n12, p21 = n21, p22 = n22;
      scale *= gamma;
      best = std::max(best, spectral_norm_2x2(p11, p12, p21, p22) / scale);
    }
  }
  return best;
}

BaselineSpec nag(const SmoothProblem& problem, const NagOptions& options) {
  if (problem.tag != ProblemClass::kStronglyConvex && problem.tag != ProblemClass::kQuadratic)
    throw PreconditionError("nag: requires a strongly convex problem");
  require_positive_mu(problem, "nag");
  const double kappa = problem.beta / problem.mu;
  if (kappa < 1.0) throw InvalidArgument("nag: kappa < 1");
  const Eigen::Index d = problem.dim;
  const double eta = 1.0 / problem.beta;
  const double sk = std::sqrt(kappa);
  const double alpha = (sk - 1.0) / (sk + 1.0);
  const double gamma = std::sqrt(1.0 - 1.0 / sk);
  auto data = std::make_shared<const SmoothProblem>(problem);

  BaselineSpec spec;
  spec.name = "nag";
  spec.state_dim = 2 * d;
  spec.decision_dim = d;
  spec.step = [data, eta, alpha, d](const Vector& xi) -> Vector {
    const auto x = xi.head(d);
    const auto x_prev = xi.tail(d);
    const Vector y = (1.0 + alpha) * x - alpha * x_prev;
    Vector next(2 * d);
    next.head(d) = y - eta * data->gradient(y);
    next.tail(d) = x;
    return next;
  };
  spec.output = [d](const Vector& xi) -> Vector { return xi.head(d); };
  spec.lift = [d](const Vector& x) -> Vector {
    Vector xi(2 * d);
    xi << x, x;
    return xi;
  };
  spec.fixed_point.resize(2 * d);
  spec.fixed_point << problem.x_star, problem.x_star;
  const double constant =
      options.poly_constant ? *options.poly_constant : nag_transient_constant(problem.mu, problem.beta);
  spec.certificate = RateCertificate::pexp(std::max(1.0, constant), gamma);
  const double block = (1.0 + eta * problem.beta) *
                       std::sqrt((1.0 + alpha) * (1.0 + alpha) + alpha * alpha);
  spec.lipschitz = std::sqrt(block * block + 1.0);
  spec.step_size = eta;
  spec.problem = data;
  return spec;
}

BaselineSpec nag(const QuadraticProblem& problem, const NagOptions& options) {
  NagOptions opts = options;
  if (!opts.poly_constant) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(problem.hessian, Eigen::EigenvaluesOnly);
    std::vector<double> spectrum(eig.eigenvalues().data(),
                                 eig.eigenvalues().data() + eig.eigenvalues().size());
    opts.poly_constant = nag_transient_constant(problem.mu, problem.beta, spectrum);
  }
  return nag(problem.as_smooth(), opts);
}

ProxRateBranches prox_rate_branches(double mu, double beta, double c) {
  if (!(c > 0.0)) throw InvalidArgument("prox: c must be positive");
  if (!(mu > 0.0) || !(beta > 0.0)) throw PreconditionError("prox: requires mu > 0 and beta > 0");
  return {1.0 / std::sqrt(1.0 + c * mu), 1.0 / std::sqrt(1.0 + c * c / (beta * mu))};
}

BaselineSpec proximal_point(const QuadraticProblem& problem, double c) {
  const ProxRateBranches branches = prox_rate_branches(problem.mu, problem.beta, c);
  const Eigen::Index d = problem.dim();
  Matrix system = Matrix::Identity(d, d) + c * problem.hessian;
  auto factor = std::make_shared<const Eigen::LLT<Matrix>>(system);
  const Vector shift = c * problem.linear;

  BaselineSpec spec;
  spec.name = "prox";
  spec.state_dim = d;
  spec.decision_dim = d;
  spec.step = [factor, shift](const Vector& x) -> Vector { return factor->solve(x - shift); };
  spec.output = identity_map;
  spec.lift = identity_map;
  spec.fixed_point = problem.x_star;
  spec.certificate = RateCertificate::exp(branches.rate());
  spec.lipschitz = 1.0 / (1.0 + c * problem.mu);
  spec.step_size = c;
  spec.problem = std::make_shared<const SmoothProblem>(problem.as_smooth());
  return spec;
}

BaselineSpec proximal_point(const SmoothProblem& problem, double c) {
  if (!problem.prox)
    throw UnsupportedProblem("prox: problem '" + problem.name + "' has no proximal oracle");
  const ProxRateBranches branches = prox_rate_branches(problem.mu, problem.beta, c);
  auto data = std::make_shared<const SmoothProblem>(problem);
  BaselineSpec spec;
  spec.name = "prox";
  spec.state_dim = problem.dim;
  spec.decision_dim = problem.dim;
  spec.step = [data, c](const Vector& x) { return data->prox(x, c); };
  spec.output = identity_map;
  spec.lift = identity_map;
  spec.fixed_point = problem.x_star;
  spec.certificate = RateCertificate::exp(branches.rate());
  spec.lipschitz = 1.0;
  spec.step_size = c;
  spec.problem = data;
  return spec;
}

Vector project_box(const Vector& x, double bound) { return x.cwiseMax(-bound).cwiseMin(bound); }

Vector project_polytope(const Vector& x, const Polytope& polytope, std::size_t max_iters,
                        double tol) {
  if (polytope.box_bound) return project_box(x, *polytope.box_bound);
  const Eigen::Index m = polytope.rows();
  if (m == 0 || polytope.contains(x)) return x;
  Vector y = x;
  Matrix increments = Matrix::Zero(polytope.dim(), m);
  Vector row_norm2(m);
  for (Eigen::Index i = 0; i < m; ++i) row_norm2[i] = polytope.A.row(i).squaredNorm();
  for (std::size_t sweep = 0; sweep < max_iters; ++sweep) {
    double change = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vector z = y + increments.col(i);
      const double excess = polytope.A.row(i).dot(z) - polytope.b[i];
      Vector projected = z;
      if (excess > 0.0) projected -= (excess / row_norm2[i]) * polytope.A.row(i).transpose();
      change = std::max(change, (projected - y).cwiseAbs().maxCoeff());
      increments.col(i) = z - projected;
      y = std::move(projected);
    }
    if (change <= tol && polytope.max_violation(y) <= tol) return y;
  }
  if (polytope.max_violation(y) <= tol) return y;
  throw ConvergenceFailure("project_polytope: iteration budget exhausted with violation " +
                           std::to_string(polytope.max_violation(y)));
}

BaselineSpec projected_gradient(const QuadraticProblem& problem, const Polytope& polytope,
                                double eta) {
  if (!(eta > 0.0) || eta > (1.0 + 1e-12) / problem.beta) {
    std::ostringstream os;
    os << "pgd: step size " << eta << " outside (0, 1/beta] with beta = " << problem.beta;
    throw InvalidArgument(os.str());
  }
  if (!(problem.mu > 0.0)) throw PreconditionError("pgd: requires a strongly convex objective");
  if (polytope.dim() != problem.dim()) throw InvalidArgument("pgd: polytope dimension mismatch");
  auto data = std::make_shared<const QuadraticProblem>(problem);
  auto set = std::make_shared<const Polytope>(polytope);

  BaselineSpec spec;
  spec.name = "pgd";
  spec.state_dim = problem.dim();
  spec.decision_dim = problem.dim();
  spec.step = [data, set, eta](const Vector& x) -> Vector {
    return project_polytope(x - eta * data->gradient(x), *set);
  };
  spec.output = identity_map;
  spec.lift = identity_map;
  spec.fixed_point = constrained_minimizer(problem, polytope);
  spec.certificate = RateCertificate::exp(1.0 - eta * problem.mu);
  spec.lipschitz = 1.0 + eta * problem.beta;
  spec.step_size = eta;
  spec.problem = std::make_shared<const SmoothProblem>(problem.as_smooth());
  spec.constraints = polytope;
  return spec;
}

BaselineSpec make_baseline(const std::string& id, const QuadraticProblem& problem,
                           const std::optional<Polytope>& polytope, double prox_c) {
  if (id == "gd") return gd_rsi(problem);
  if (id == "nag") return nag(problem);
  if (id == "prox") return proximal_point(problem, prox_c);
  if (id == "pgd") {
    if (!polytope) throw InvalidArgument("pgd: a polytope is required");
    return projected_gradient(problem, *polytope, 1.0 / problem.beta);
  }
  throw InvalidArgument("unknown baseline id: " + id);
}

}  // namespace convaug

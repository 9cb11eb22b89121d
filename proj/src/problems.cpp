#include "convaug/problems.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <limits>
#include <sstream>

#include "convaug/rng.hpp"

namespace convaug {

std::string to_string(ProblemClass tag) {
  switch (tag) {
    case ProblemClass::kRsi: return "RSI";
    case ProblemClass::kPl: return "PL";
    case ProblemClass::kPlConvex: return "PL-convex";
    case ProblemClass::kStronglyConvex: return "strongly-convex";
    case ProblemClass::kQuadratic: return "quadratic";
  }
  return "unknown";
}

ProblemClass problem_class_from_string(const std::string& name) {
  if (name == "RSI") return ProblemClass::kRsi;
  if (name == "PL") return ProblemClass::kPl;
  if (name == "PL-convex") return ProblemClass::kPlConvex;
  if (name == "strongly-convex") return ProblemClass::kStronglyConvex;
  if (name == "quadratic") return ProblemClass::kQuadratic;
  throw InvalidArgument("unknown problem class: " + name);
}

double QuadraticProblem::objective(const Vector& x) const {
  return 0.5 * x.dot(hessian * x) + linear.dot(x) + offset;
}

Vector QuadraticProblem::gradient(const Vector& x) const { return hessian * x + linear; }

Vector QuadraticProblem::prox(const Vector& x, double c) const {
  Matrix system = Matrix::Identity(dim(), dim()) + c * hessian;
  return system.llt().solve(x - c * linear);
}

SmoothProblem QuadraticProblem::as_smooth() const {
  // Copy the data once; the closures share it.
  auto data = std::make_shared<const QuadraticProblem>(*this);
  SmoothProblem p;
  p.name = kind;
  p.dim = dim();
  p.objective = [data](const Vector& x) { return data->objective(x); };
  p.gradient = [data](const Vector& x) { return data->gradient(x); };
  p.prox = [data](const Vector& x, double c) { return data->prox(x, c); };
  p.x_star = x_star;
  p.mu = mu;
  p.beta = beta;
  p.tag = ProblemClass::kQuadratic;
  return p;
}

Polytope Polytope::box(Eigen::Index dim, double bound) {
  if (!(bound > 0.0)) throw InvalidArgument("box bound must be positive");
  Polytope p;
  p.A.resize(2 * dim, dim);
  p.A << Matrix::Identity(dim, dim), -Matrix::Identity(dim, dim);
  p.b = Vector::Constant(2 * dim, bound);
  p.witness = Vector::Zero(dim);
  p.box_bound = bound;
  return p;
}

double Polytope::max_violation(const Vector& x) const {
  if (box_bound) {
    const double m = x.cwiseAbs().maxCoeff();
    return std::max(0.0, m - *box_bound);
  }
  if (A.rows() == 0) return 0.0;
  return std::max(0.0, (A * x - b).maxCoeff());
}

void Polytope::validate(double eps) const {
  if (A.rows() != b.size()) throw InvalidArgument("polytope: A and b row counts differ");
  if (witness) {
    if (witness->size() != A.cols()) throw InvalidArgument("polytope: witness has wrong size");
    if (A.rows() > 0 && ((A * *witness - b).array() > -eps).any())
      throw InvalidArgument("polytope: witness is not strictly interior");
  }
}

Matrix MpcProblem::condensed_hessian() const {
  return 2.0 * (stacked_G.transpose() * stacked_Q * stacked_G + stacked_R);
}

Curvature curvature_constants(const Matrix& H) {
  if (H.rows() != H.cols() || H.rows() == 0) throw InvalidArgument("curvature: H must be square");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidArgument("curvature: H must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
  const double mu = eig.eigenvalues().minCoeff();
  const double beta = eig.eigenvalues().maxCoeff();
  const double kappa = mu > 0.0 ? beta / mu : std::numeric_limits<double>::infinity();
  return {mu, beta, kappa};
}

Curvature strongly_convex_constants(const Matrix& H) {
  Curvature c = curvature_constants(H);
  if (!(c.mu > 0.0)) {
    std::ostringstream os;
    os << "problem is not strongly convex (lambda_min = " << c.mu << ")";
    throw PreconditionError(os.str());
  }
  return c;
}

QuadraticProblem make_quadratic(Matrix hessian, Vector linear, double offset, std::string kind,
                                std::uint64_t seed) {
  if (hessian.rows() != linear.size()) throw InvalidArgument("quadratic: dimension mismatch");
  // Symmetrize exactly; callers pass matrices symmetric up to round-off.
  hessian = 0.5 * (hessian + hessian.transpose()).eval();
  const Curvature c = curvature_constants(hessian);
  if (!(c.mu > 1e-14 * c.beta)) {
    std::ostringstream os;
    os << "degenerate instance: lambda_min = " << c.mu << ", lambda_max = " << c.beta;
    throw DegenerateInstance(os.str());
  }
  QuadraticProblem q;
  q.kind = std::move(kind);
  q.hessian = std::move(hessian);
  q.linear = std::move(linear);
  q.offset = offset;
  q.mu = c.mu;
  q.beta = c.beta;
  q.seed = seed;
  q.x_star = q.hessian.ldlt().solve(-q.linear);
  return q;
}

QuadraticProblem sample_regression_instance(const Matrix& base_A, double noise_std_A,
                                            double b_mean, double noise_std_b,
                                            std::uint64_t seed) {
  if (base_A.rows() != base_A.cols()) throw InvalidArgument("regression: base_A must be square");
  if (noise_std_A < 0.0 || noise_std_b < 0.0)
    throw InvalidArgument("regression: noise stds must be non-negative");
  const Eigen::Index d = base_A.rows();
  Rng rng_a(seed, "regression/A");
  Rng rng_b(seed, "regression/b");
  Matrix A = base_A;
  if (noise_std_A > 0.0) A += rng_a.normal_matrix(d, d, noise_std_A);
  Vector b = Vector::Constant(d, b_mean);
  if (noise_std_b > 0.0) b += rng_b.normal_vector(d, noise_std_b);
  Matrix H = 2.0 * A.transpose() * A;
  Vector c = -2.0 * A.transpose() * b;
  QuadraticProblem q = make_quadratic(std::move(H), std::move(c), b.squaredNorm(), "regression", seed);
  // The direct solve of A x = b is better conditioned than the normal equations.
  q.x_star = A.partialPivLu().solve(b);
  q.design = std::move(A);
  q.target = std::move(b);
  return q;
}

Matrix random_orthogonal(Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed, "orthogonal");
  Matrix g = rng.normal_matrix(dim, dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

namespace {

Vector geometric_spectrum(Eigen::Index dim, double lo, double hi) {
  Vector s(dim);
  if (dim == 1) {
    s[0] = lo;
    return s;
  }
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(dim - 1);
    s[i] = lo * std::pow(hi / lo, frac);
  }
  return s;
}

}  // namespace

Matrix synthetic_base_matrix(Eigen::Index dim, double kappa_AtA, std::uint64_t seed) {
  if (!(kappa_AtA >= 1.0)) throw InvalidArgument("synthetic base: kappa must be >= 1");
  const Vector s = geometric_spectrum(dim, 1.0, std::sqrt(kappa_AtA));
  const Matrix U = random_orthogonal(dim, derive_seed(seed, "base/U"));
  const Matrix V = random_orthogonal(dim, derive_seed(seed, "base/V"));
  return U * s.asDiagonal() * V.transpose();
}

QuadraticProblem random_sc_quadratic(Eigen::Index dim, double kappa, std::uint64_t seed,
                                     double mu) {
  if (!(kappa >= 1.0) || !(mu > 0.0)) throw InvalidArgument("random quadratic: need kappa >= 1, mu > 0");
  const Vector eig = geometric_spectrum(dim, mu, mu * kappa);
  const Matrix U = random_orthogonal(dim, derive_seed(seed, "sc/U"));
  Matrix H = U * eig.asDiagonal() * U.transpose();
  H = 0.5 * (H + H.transpose()).eval();
  Rng rng(seed, "sc/xstar");
  const Vector x_star = rng.normal_vector(dim);
  Vector c = -(H * x_star);
  QuadraticProblem q = make_quadratic(std::move(H), std::move(c), 0.0, "sc-quadratic", seed);
  // Exact spectrum endpoints are known by construction.
  q.mu = mu;
  q.beta = mu * kappa;
  q.x_star = x_star;
  return q;
}

SmoothProblem make_sine_bowl(Eigen::Index dim, double declared_mu) {
  SmoothProblem p;
  p.name = "sine-bowl";
  p.dim = dim;
  p.objective = [](const Vector& x) {
    return x.squaredNorm() + 3.0 * x.array().sin().square().sum();
  };
  p.gradient = [](const Vector& x) -> Vector {
    return 2.0 * x + 3.0 * (2.0 * x).array().sin().matrix();
  };
  p.x_star = Vector::Zero(dim);
  p.mu = declared_mu;
  p.beta = 8.0;
  p.tag = ProblemClass::kPl;
  return p;
}

double estimate_rsi_constant(const SmoothProblem& problem, std::size_t probes,
                             std::uint64_t seed, double radius) {
  Rng rng(seed, "rsi-probes");
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < probes; ++k) {
    // Mix scales so that both the far field and the neighbourhood of x* are probed.
    const double r = radius * std::pow(rng.uniform(), 2.0) + 1e-6;
    const Vector x = problem.x_star + r * rng.unit_vector(problem.dim);
    const Vector diff = x - problem.x_star;
    const double ratio = problem.gradient(x).dot(diff) / diff.squaredNorm();
    worst = std::min(worst, ratio);
  }
  return worst;
}

SmoothProblem certify_rsi(const SmoothProblem& problem, std::size_t probes, std::uint64_t seed) {
  const double sampled = estimate_rsi_constant(problem, probes, seed);
  if (sampled < problem.mu) {
    std::ostringstream os;
    os << "sampled RSI constant " << sampled << " is below the declared mu " << problem.mu;
    throw PreconditionError(os.str());
  }
  SmoothProblem out = problem;
  out.tag = ProblemClass::kRsi;
  return out;
}

double gradient_check(const SmoothProblem& problem, std::size_t probes, std::uint64_t seed) {
  Rng rng(seed, "gradient-check");
  double worst = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    const Vector x = problem.x_star + rng.normal_vector(problem.dim);
    const Vector g = problem.gradient(x);
    Vector fd(problem.dim);
    for (Eigen::Index i = 0; i < problem.dim; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fd[i] = (problem.objective(xp) - problem.objective(xm)) / (2.0 * h);
    }
    const double rel = (fd - g).norm() / std::max(1.0, g.norm());
    worst = std::max(worst, rel);
  }
  return worst;
}

MpcProblem make_mpc(const Matrix& dyn_A, const Matrix& dyn_B, Eigen::Index horizon,
                    const Matrix& Q, const Matrix& R, const Matrix& Q_T, double input_bound) {
  if (horizon < 1) throw InvalidArgument("mpc: horizon must be >= 1");
  const Eigen::Index n = dyn_A.rows();
  const Eigen::Index m = dyn_B.cols();
  if (dyn_A.cols() != n || dyn_B.rows() != n) throw InvalidArgument("mpc: dynamics shapes");
  if (Q.rows() != n || Q_T.rows() != n || R.rows() != m) throw InvalidArgument("mpc: weight shapes");
  if (!(input_bound > 0.0)) throw InvalidArgument("mpc: input bound must be positive");
  const Curvature rc = curvature_constants(R);
  if (!(rc.mu > 0.0)) throw PreconditionError("mpc: R must be positive definite");
  if (curvature_constants(Q).mu < -1e-12 || curvature_constants(Q_T).mu < -1e-12)
    throw PreconditionError("mpc: Q and Q_T must be positive semidefinite");

  MpcProblem p;
  p.dyn_A = dyn_A;
  p.dyn_B = dyn_B;
  p.horizon = horizon;
  p.Q = Q;
  p.R = R;
  p.Q_T = Q_T;
  p.input_bound = input_bound;

  const Eigen::Index T = horizon;
  p.stacked_F = Matrix::Zero(n * T, n);
  p.stacked_G = Matrix::Zero(n * T, m * T);
  p.stacked_Q = Matrix::Zero(n * T, n * T);
  p.stacked_R = Matrix::Zero(m * T, m * T);
  // Row block k holds x_{k+1}.
  std::vector<Matrix> powers(static_cast<std::size_t>(T + 1));
  powers[0] = Matrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= T; ++k) powers[k] = dyn_A * powers[k - 1];
  for (Eigen::Index k = 0; k < T; ++k) {
    p.stacked_F.block(k * n, 0, n, n) = powers[k + 1];
    for (Eigen::Index j = 0; j <= k; ++j)
      p.stacked_G.block(k * n, j * m, n, m) = powers[k - j] * dyn_B;
    p.stacked_Q.block(k * n, k * n, n, n) = (k + 1 == T) ? Q_T : Q;
    p.stacked_R.block(k * m, k * m, m, m) = R;
  }
  const Curvature hc = curvature_constants(p.condensed_hessian());
  if (!(hc.mu > 0.0)) throw PreconditionError("mpc: condensed Hessian is not positive definite");
  return p;
}

MpcProblem double_integrator_mpc() {
  Matrix A(2, 2);
  A << 1.0, 1.0, 0.0, 1.0;
  Matrix B(2, 1);
  B << 0.0, 1.0;
  return make_mpc(A, B, 20, Matrix::Identity(2, 2), Matrix::Identity(1, 1), Matrix::Identity(2, 2),
                  0.25);
}

std::pair<QuadraticProblem, Polytope> build_stacked_mpc(const MpcProblem& mpc, const Vector& x0) {
  if (x0.size() != mpc.state_dim()) throw InvalidArgument("mpc: x0 has wrong size");
  const Matrix& F = mpc.stacked_F;
  const Matrix& G = mpc.stacked_G;
  const Matrix& Qs = mpc.stacked_Q;
  Matrix H = mpc.condensed_hessian();
  Vector c = 2.0 * G.transpose() * (Qs * (F * x0));
  const double offset = x0.dot(mpc.Q * x0) + (F * x0).dot(Qs * (F * x0));
  QuadraticProblem qp = make_quadratic(std::move(H), std::move(c), offset, "mpc");
  Polytope box = Polytope::box(mpc.input_dim() * mpc.horizon, mpc.input_bound);
  return {std::move(qp), std::move(box)};
}

std::pair<QuadraticProblem, Polytope> build_stacked_mpc(const Matrix& dyn_A, const Matrix& dyn_B,
                                                        Eigen::Index horizon, const Matrix& Q,
                                                        const Matrix& R, const Matrix& Q_T,
                                                        double input_bound, const Vector& x0) {
  return build_stacked_mpc(make_mpc(dyn_A, dyn_B, horizon, Q, R, Q_T, input_bound), x0);
}

}  // namespace convaug

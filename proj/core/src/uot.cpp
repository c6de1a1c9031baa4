#include "dga/uot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace dga::uot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// KL(x, y) = sum x log(x/y) - x + y; +inf where y = 0 but x > 0.
double kl_divergence(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) {
      if (y[i] <= 0.0) return kInf;
      acc += x[i] * std::log(x[i] / y[i]) - x[i] + y[i];
    } else {
      acc += y[i];
    }
  }
  return acc;
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

void TransportProblem::validate() const {
  if (cost.rows() < 1 || cost.cols() < 1) {
    throw std::invalid_argument("TransportProblem: empty cost matrix");
  }
  if (a.size() != cost.rows() || b.size() != cost.cols()) {
    throw std::invalid_argument("TransportProblem: marginal size mismatch");
  }
  if (!cost.allFinite() || (cost.array() < 0.0).any()) {
    throw std::invalid_argument("TransportProblem: cost entries must be finite and >= 0");
  }
  if ((a.array() <= 0.0).any() || (b.array() < 0.0).any()) {
    throw std::invalid_argument("TransportProblem: invalid marginal masses");
  }
  if (epsilon <= 0.0 || rho <= 0.0) {
    throw std::invalid_argument("TransportProblem: epsilon and rho must be > 0");
  }
}

double objective(const Eigen::MatrixXd& pi, const TransportProblem& problem,
                 bool kl_terms) {
  if (pi.rows() != problem.rows() || pi.cols() != problem.cols()) {
    throw std::invalid_argument("uot::objective: plan shape mismatch");
  }
  double transport = (problem.cost.array() * pi.array()).sum();
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    for (Eigen::Index j = 0; j < pi.cols(); ++j) {
      entropy += xlogx(pi(i, j)) - pi(i, j);
    }
  }
  double obj = transport + problem.epsilon * entropy;
  if (kl_terms) {
    obj += problem.rho * kl_divergence(pi.rowwise().sum(), problem.a);
    obj += problem.rho * kl_divergence(pi.colwise().sum().transpose(), problem.b);
  }
  return obj;
}

TransportPlan solve(const TransportProblem& problem, const SolveOptions& opts) {
  problem.validate();
  const Eigen::Index m = problem.rows();
  const Eigen::Index n = problem.cols();

  TransportPlan plan;
  plan.pi = Eigen::MatrixXd::Zero(m, n);

  if (!opts.kl_terms) {
    // With both KL penalties off the minimizer of <C,pi> + eps*R(pi) is
    // closed-form: pi = exp(-C / eps).
    plan.pi = (-problem.cost / problem.epsilon).array().exp();
    plan.objective = objective(plan.pi, problem, false);
    plan.converged = true;
    return plan;
  }

  // Columns with zero anchor mass cannot receive transport (KL against 0);
  // compact to the active columns.
  std::vector<Eigen::Index> active;
  active.reserve(static_cast<size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (problem.b[j] > 0.0) active.push_back(j);
  }
  if (active.empty()) {
    plan.objective = objective(plan.pi, problem);
    plan.converged = true;
    return plan;
  }
  const Eigen::Index na = static_cast<Eigen::Index>(active.size());

  // pi_ij = exp(u_i + v_j + G_ij) with G = -C/eps; alternating updates
  //   u_i = kappa * (log a_i - LSE_j(v_j + G_ij)),  kappa = rho/(rho+eps).
  Eigen::MatrixXd g(m, na);
  Eigen::VectorXd log_b(na);
  for (Eigen::Index jj = 0; jj < na; ++jj) {
    g.col(jj) = -problem.cost.col(active[static_cast<size_t>(jj)]) / problem.epsilon;
    log_b[jj] = std::log(problem.b[active[static_cast<size_t>(jj)]]);
  }
  const Eigen::VectorXd log_a = problem.a.array().log();
  const double kappa = problem.rho / (problem.rho + problem.epsilon);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(na);
  Eigen::VectorXd u_prev(m), v_prev(na);

  for (int it = 0; it < opts.max_iterations; ++it) {
    u_prev = u;
    v_prev = v;
    for (Eigen::Index i = 0; i < m; ++i) {
      u[i] = kappa * (log_a[i] - log_sum_exp(g.row(i).transpose() + v));
    }
    for (Eigen::Index jj = 0; jj < na; ++jj) {
      v[jj] = kappa * (log_b[jj] - log_sum_exp(g.col(jj) + u));
    }
    plan.iterations = it + 1;
    const double delta = std::max((u - u_prev).cwiseAbs().maxCoeff(),
                                  (v - v_prev).cwiseAbs().maxCoeff());
    if (delta < opts.tolerance) {
      plan.converged = true;
      break;
    }
  }

  for (Eigen::Index jj = 0; jj < na; ++jj) {
    plan.pi.col(active[static_cast<size_t>(jj)]) =
        (g.col(jj).array() + u.array() + v[jj]).exp();
  }
  plan.objective = objective(plan.pi, problem);
  return plan;
}

namespace {

// Entropic mirror descent with backtracking. Multiplicative updates match
// the log-barrier geometry of the objective, so steps stay strictly interior
// and convergence does not stall near small entries the way additive
// projected steps do.
TransportPlan pgd_from(const Eigen::MatrixXd& start,
                       const TransportProblem& p,
                       const std::vector<bool>& col_active) {
  constexpr double kFloor = 1e-16;
  const Eigen::Index m = p.rows();
  const Eigen::Index n = p.cols();

  Eigen::MatrixXd pi = start.cwiseMax(kFloor);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!col_active[static_cast<size_t>(j)]) pi.col(j).setZero();
  }
  double f = objective(pi, p);

  Eigen::MatrixXd grad(m, n);
  double step = 1.0;
  for (int it = 0; it < 50000; ++it) {
    const Eigen::VectorXd r = pi.rowwise().sum();
    const Eigen::VectorXd c = pi.colwise().sum().transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!col_active[static_cast<size_t>(j)]) {
          grad(i, j) = 0.0;
          continue;
        }
        grad(i, j) = p.cost(i, j) + p.epsilon * std::log(pi(i, j)) +
                     p.rho * std::log(r[i] / p.a[i]) +
                     p.rho * std::log(c[j] / p.b[j]);
      }
    }
    step = std::min(step * 2.0, 8.0);
    bool improved = false;
    for (int bt = 0; bt < 80; ++bt) {
      Eigen::MatrixXd cand =
          (pi.array() * (-step * grad).array().exp()).cwiseMax(kFloor);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!col_active[static_cast<size_t>(j)]) cand.col(j).setZero();
      }
      const double fc = objective(cand, p);
      if (fc < f - 1e-15 * (1.0 + std::abs(f))) {
        pi = cand;
        f = fc;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }

  TransportPlan plan;
  plan.pi = pi;
  plan.objective = f;
  plan.converged = true;
  return plan;
}

}  // namespace

TransportPlan brute_force(const TransportProblem& problem) {
  problem.validate();
  const Eigen::Index m = problem.rows();
  const Eigen::Index n = problem.cols();
  if (m * n > 9) {
    throw std::invalid_argument("uot::brute_force: restricted to m*n <= 9");
  }

  std::vector<bool> col_active(static_cast<size_t>(n));
  bool any_active = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    col_active[static_cast<size_t>(j)] = problem.b[j] > 0.0;
    any_active = any_active || col_active[static_cast<size_t>(j)];
  }
  if (!any_active) {
    TransportPlan plan;
    plan.pi = Eigen::MatrixXd::Zero(m, n);
    plan.objective = objective(plan.pi, problem);
    plan.converged = true;
    return plan;
  }

  std::vector<Eigen::MatrixXd> starts;
  starts.push_back(Eigen::MatrixXd::Constant(m, n, 0.5));
  starts.push_back((-problem.cost / problem.epsilon).array().exp());
  starts.push_back(problem.a * problem.b.transpose() / problem.b.sum());
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uni(0.01, 1.5);
  for (int s = 0; s < 3; ++s) {
    Eigen::MatrixXd r(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) r(i, j) = uni(rng);
    starts.push_back(r);
  }

  TransportPlan best;
  best.objective = kInf;
  for (const auto& s0 : starts) {
    TransportPlan cand = pgd_from(s0, problem, col_active);
    if (cand.objective < best.objective) best = cand;
  }
  return best;
}

}  // namespace dga::uot

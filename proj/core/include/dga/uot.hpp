#pragma once

#include <Eigen/Dense>

namespace dga::uot {

/// Cost charged to masked-out (GT, anchor) pairs. Large enough that the
/// entropic solver transports < 1e-6 through such pairs at any useful epsilon.
inline constexpr double kSentinelCost = 1e6;

/// Entropic unbalanced transport problem
///   min_{pi >= 0} <C, pi> + eps * sum pi (log pi - 1)
///                 + rho * KL(pi 1, a) + rho * KL(pi^T 1, b)
/// with KL(x, y) = sum x log(x/y) - x + y and 0 log 0 := 0.
struct TransportProblem {
  Eigen::MatrixXd cost;  // m x n, entries >= 0 and finite
  Eigen::VectorXd a;     // GT mass, length m (all ones in this pipeline)
  Eigen::VectorXd b;     // anchor mass, length n, entries >= 0
  double epsilon = 0.1;
  double rho = 1.0;  // weight on both KL marginal penalties

  Eigen::Index rows() const { return cost.rows(); }
  Eigen::Index cols() const { return cost.cols(); }

  /// Throws std::invalid_argument if shapes or value ranges are off.
  void validate() const;
};

struct TransportPlan {
  Eigen::MatrixXd pi;       // m x n, entries >= 0
  double objective = 0.0;   // problem objective evaluated at pi
  int iterations = 0;
  bool converged = false;
};

struct SolveOptions {
  int max_iterations = 500;
  double tolerance = 1e-6;  // max-norm on dual potential updates
  // Balanced sub-mode: drop both KL terms and enforce nothing (pure
  // entropic smoothing of exp(-C/eps) against a, b as reference weights).
  // Used by scaling-consistency checks only.
  bool kl_terms = true;
};

/// Objective of the problem evaluated at an arbitrary nonnegative plan.
/// Throws on shape mismatch.
double objective(const Eigen::MatrixXd& pi, const TransportProblem& problem,
                 bool kl_terms = true);

/// Log-domain generalized Sinkhorn. Deterministic; returns
/// converged = false when max_iterations is exhausted.
TransportPlan solve(const TransportProblem& problem,
                    const SolveOptions& opts = {});

/// Test oracle: multi-start projected gradient descent over pi >= 0.
/// Restricted to m * n <= 9; throws std::invalid_argument beyond that.
TransportPlan brute_force(const TransportProblem& problem);

}  // namespace dga::uot

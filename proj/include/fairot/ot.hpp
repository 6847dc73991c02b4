#pragma once

#include <Eigen/Dense>
#include <span>

namespace fairot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense non-negative cost matrix for one transport instance. Infinite
/// entries are never materialized; structural exclusions are handled by the
/// callers that know about them (see bicausal).
struct CostMatrix {
  Matrix entries;

  CostMatrix() = default;
  explicit CostMatrix(Matrix m);

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

/// |x_i - y_j|^p for two atom lists.
CostMatrix pairwise_power_cost(std::span<const double> x, std::span<const double> y, int p);

/// Coupling with validated marginals.
struct TransportPlan {
  Matrix entries;
  Vector row_marginal;
  Vector col_marginal;

  // Throws unless row/col sums match the marginals within tol and all
  // entries are non-negative.
  static TransportPlan checked(Matrix entries, Vector a, Vector b, double tol = 1e-6);
};

struct SinkhornConfig {
  double epsilon = 0.0;  // <= 0 selects 1e-2 * median pairwise cost
  int max_iter = 20000;
  double tol = 1e-6;  // max marginal violation at convergence
  int p = 1;          // Wasserstein order, carried for callers building costs
};

struct SinkhornResult {
  TransportPlan plan;
  double transport_cost = 0.0;          // <plan, cost>
  double regularized_objective = 0.0;   // <plan, cost> + eps * sum plan (log plan - 1)
  double epsilon = 0.0;                 // epsilon actually used
  bool converged = false;
  int iterations = 0;
};

/// Entropic OT in the log domain with epsilon scaling. Marginals must be
/// strictly positive probability vectors. Non-convergence after
/// cfg.max_iter total iterations returns the best iterate with
/// converged=false; NaN/overflow raises numeric_failure.
SinkhornResult sinkhorn(const CostMatrix& cost, const Vector& a, const Vector& b,
                        const SinkhornConfig& cfg);

/// Gradient of the regularized objective with respect to the cost matrix:
/// exactly the optimal plan (envelope identity). Rejects non-converged runs.
Matrix entropic_gradient_wrt_cost(const SinkhornResult& result);

struct ExactOtResult {
  double value = 0.0;
  Matrix plan;
};

/// Exact (unregularized) optimal transport value and an optimal vertex plan.
/// Dispatches on size: exhaustive vertex enumeration for tiny instances,
/// min-cost assignment for uniform square instances, transportation simplex
/// otherwise. Throws invalid_input above the desk-scale cap (m*n > 10000).
ExactOtResult brute_force_ot(const CostMatrix& cost, const Vector& a, const Vector& b);

/// Exhaustive vertex enumeration only (recursive search over all greedy
/// saturation orders). Independent of the simplex path; throws
/// invalid_input above the m*n <= 64 desk-scale cap or when the search
/// explodes.
double enumerate_ot(const CostMatrix& cost, const Vector& a, const Vector& b);

/// Transportation simplex, exposed for cross-validation in tests.
ExactOtResult transport_simplex(const CostMatrix& cost, const Vector& a, const Vector& b);

/// 1e-2 times the median cost entry (0 for all-zero costs).
double default_epsilon(const CostMatrix& cost);

}  // namespace fairot

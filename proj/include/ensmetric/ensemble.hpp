#pragma once

#include <cstddef>
#include <vector>

#include "ensmetric/inner_qp.hpp"
#include "ensmetric/types.hpp"

namespace ensmetric {

struct CuttingPlaneConfig {
  double nu = 100.0;                 // regularisation weight on the slack
  double epsilon = 1e-6;             // stop once g(S, P, w) <= xi + epsilon
  std::size_t k = 10;                // recall cutoff (CMC-top only)
  std::size_t max_iterations = 1000;
  double qp_tolerance = 1e-8;

  /// Throws InvalidInput unless nu > 0, epsilon > 0 and 1 <= k <= m_prime.
  void validate(std::size_t m_prime) const;
};

/// Delta(P*, P) = 1/(m k) * sum_i sum_{pos < k} P(i, pos).
double delta_loss(const OrderingMatrix& ordering);

/// psi(S, P) = 1/(m k) * sum_i sum_{pos < k} (1 - P(i, pos)) (d^-_{i, c(pos)} - d^+_i).
Vector psi(const TripletDistanceTable& table, const OrderingMatrix& ordering);

/// Per-probe candidate order by ascending margin score w^T (d^-_j - d^+_i);
/// ties go to the smaller candidate id.
std::vector<std::vector<std::size_t>> rank_positions(const TripletDistanceTable& table,
                                                     const Vector& w);

/// g(S, P, w) = Delta(P*, P) - 1/(m k) * sum over all (i, pos) of
/// P(i, pos) w^T (d^-_{i, c(pos)} - d^+_i).
double violation(const TripletDistanceTable& table, const OrderingMatrix& ordering,
                 const Vector& w);

/// argmax_P g(S, P, w) under the rank_positions() assignment:
/// P(i, pos) = [score <= 1] for pos < k, [score <= 0] below the cutoff.
OrderingMatrix most_violated_ordering(const TripletDistanceTable& table, const WeightVector& w,
                                      std::size_t k);

/// Constraint of ordering P: a = 1/(m k) * sum over P(i, pos) = 1 of the margin
/// vectors, delta = Delta(P*, P), so that delta - w^T a = g(S, P, w).
ConstraintRecord ordering_constraint(const TripletDistanceTable& table,
                                     const OrderingMatrix& ordering);

/// The single averaged constraint of the one-slack triplet formulation:
/// a = 1/(m m') * sum_{i,j} (d^-_{i,j} - d^+_i), delta = 1.
ConstraintRecord triplet_constraint(const TripletDistanceTable& table);

struct CuttingPlaneTrace {
  std::vector<double> objectives;      // inner-QP objective per round
  std::vector<double> violations;      // g(S, P_bar, w) - xi per round
  std::vector<double> kkt_residuals;   // inner-QP residual per round
  std::size_t iterations = 0;
  bool converged = false;
  /// True when every round's objective was >= the previous one (up to
  /// qp_tolerance).
  bool objective_monotone = true;
};

struct EnsembleFit {
  WeightVector weights;
  CuttingPlaneTrace trace;
  std::vector<ConstraintRecord> working_set;
};

/// Cutting-plane solver for the top-k structured formulation. Throws
/// ConvergenceError (carrying the violation trace) when max_iterations is
/// reached or a most-violated ordering repeats after the QP tolerance was
/// already tightened once.
EnsembleFit fit_cmc_top(const TripletDistanceTable& table, const CuttingPlaneConfig& config);

/// One-slack triplet formulation; a single cutting-plane round.
EnsembleFit fit_cmc_triplet(const TripletDistanceTable& table, const CuttingPlaneConfig& config);

}  // namespace ensmetric

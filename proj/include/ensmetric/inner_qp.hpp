#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ensmetric/types.hpp"

namespace ensmetric {

/// One working-set constraint  w^T a + xi >= delta.
struct ConstraintRecord {
  Vector a;
  double delta = 0.0;
  /// Candidate-indexed selection that generated the constraint (m x m');
  /// empty for constraints that do not come from an ordering.
  BinaryMatrix origin;
};

/// KKT residuals of a primal/dual pair for
///   min 1/2 ||w||^2 + nu xi  s.t.  w^T a_c + xi >= delta_c, w >= 0, xi >= 0.
struct QpResiduals {
  double primal_infeasibility = 0.0;  // worst constraint / bound violation
  double dual_infeasibility = 0.0;    // negative multipliers or sum(alpha) > nu
  double duality_gap = 0.0;           // primal minus dual objective (>= 0)

  double max() const noexcept;
};

struct InnerQpResult {
  WeightVector solution;
  Vector multipliers;  // alpha_c, one per constraint
  QpResiduals residuals;
  std::size_t iterations = 0;
  bool polished = false;  // finished by the exact active-set solve
};

/// Exact minimiser of the working-set QP.
///
/// Runs dual coordinate ascent (pairwise updates on the multipliers, closed
/// form for the w >= 0 multipliers) and periodically tries to finish with a
/// dense solve of the KKT system on the current active set. The result is
/// accepted once residuals().max() <= tolerance. Throws InvalidInput for
/// nu <= 0 or constraints whose length differs from `dimension`, and
/// ConvergenceError (carrying the residual trace) when max_iterations passes
/// first. An empty working set yields w = 0, xi = 0.
InnerQpResult solve_inner_qp(std::span<const ConstraintRecord> working_set, std::size_t dimension,
                             double nu, double tolerance = 1e-8,
                             std::size_t max_iterations = 200000);

/// Residuals of an arbitrary candidate (w, xi, alpha); exposed for tests.
QpResiduals qp_residuals(std::span<const ConstraintRecord> working_set, double nu,
                         const WeightVector& primal, const Vector& multipliers);

}  // namespace ensmetric

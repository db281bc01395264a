#include "ensmetric/inner_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "ensmetric/errors.hpp"

namespace ensmetric {
namespace {

struct Problem {
  Matrix a;      // T x C, one column per constraint
  Vector delta;  // C
  double nu = 1.0;
};

double primal_objective(const Vector& w, double xi, double nu) {
  return 0.5 * w.squaredNorm() + nu * xi;
}

// Primal point induced by dual multipliers: w = max(A alpha, 0), xi = smallest
// feasible slack.
WeightVector primal_from_dual(const Problem& p, const Vector& alpha) {
  WeightVector out;
  out.w = (p.a * alpha).cwiseMax(0.0);
  out.xi = 0.0;
  if (p.delta.size() > 0) {
    out.xi = std::max(0.0, (p.delta - p.a.transpose() * out.w).maxCoeff());
  }
  out.objective = primal_objective(out.w, out.xi, p.nu);
  return out;
}

QpResiduals residuals_of(const Problem& p, const WeightVector& primal, const Vector& alpha) {
  QpResiduals r;
  double worst = 0.0;
  if (p.delta.size() > 0) {
    worst = (p.delta - p.a.transpose() * primal.w).maxCoeff() - primal.xi;
  }
  if (primal.w.size() > 0) worst = std::max(worst, -primal.w.minCoeff());
  worst = std::max(worst, -primal.xi);
  r.primal_infeasibility = std::max(0.0, worst);

  double dual_bad = 0.0;
  if (alpha.size() > 0) dual_bad = std::max(-alpha.minCoeff(), alpha.sum() - p.nu);
  r.dual_infeasibility = std::max(0.0, dual_bad);

  const Vector u = (p.a * alpha).cwiseMax(0.0);
  const double dual = p.delta.dot(alpha) - 0.5 * u.squaredNorm();
  r.duality_gap = std::abs(primal_objective(primal.w, primal.xi, p.nu) - dual);
  return r;
}

// Solves the KKT system restricted to the current active pattern of `alpha`
// and returns the multipliers if the solution verifies.
std::optional<Vector> polish(const Problem& p, const Vector& alpha, double alpha_slack,
                             double tolerance) {
  std::vector<Eigen::Index> active;
  for (Eigen::Index c = 0; c < alpha.size(); ++c) {
    if (alpha[c] > 0.0) active.push_back(c);
  }
  if (active.empty()) return std::nullopt;
  const Vector lin = p.a * alpha;
  std::vector<Eigen::Index> support;
  for (Eigen::Index t = 0; t < lin.size(); ++t) {
    if (lin[t] > 0.0) support.push_back(t);
  }
  const bool sum_tight = alpha_slack <= 0.0;

  const auto ns = static_cast<Eigen::Index>(active.size());
  Matrix af(static_cast<Eigen::Index>(support.size()), ns);
  Vector rhs_delta(ns);
  for (Eigen::Index s = 0; s < ns; ++s) {
    rhs_delta[s] = p.delta[active[static_cast<std::size_t>(s)]];
    for (std::size_t f = 0; f < support.size(); ++f) {
      af(static_cast<Eigen::Index>(f), s) = p.a(support[f], active[static_cast<std::size_t>(s)]);
    }
  }
  const Matrix gram = af.transpose() * af;

  const Eigen::Index dim = sum_tight ? ns + 1 : ns;
  Matrix kkt = Matrix::Zero(dim, dim);
  Vector rhs(dim);
  kkt.topLeftCorner(ns, ns) = gram;
  rhs.head(ns) = rhs_delta;
  if (sum_tight) {
    kkt.block(0, ns, ns, 1).setOnes();
    kkt.block(ns, 0, 1, ns).setOnes();
    rhs[ns] = p.nu;
  }
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
  const Vector x = cod.solve(rhs);
  if (!x.allFinite()) return std::nullopt;
  const double scale = std::max({1.0, rhs.cwiseAbs().maxCoeff(), kkt.cwiseAbs().maxCoeff()});
  if ((kkt * x - rhs).cwiseAbs().maxCoeff() > 1e-10 * scale * std::max(1.0, x.cwiseAbs().maxCoeff())) {
    return std::nullopt;
  }

  Vector candidate = Vector::Zero(alpha.size());
  for (Eigen::Index s = 0; s < ns; ++s) {
    double v = x[s];
    if (v < 0.0) {
      if (v < -1e-12 * std::max(1.0, p.nu)) return std::nullopt;
      v = 0.0;
    }
    candidate[active[static_cast<std::size_t>(s)]] = v;
  }
  if (candidate.sum() > p.nu) candidate *= p.nu / candidate.sum();
  const auto primal = primal_from_dual(p, candidate);
  if (residuals_of(p, primal, candidate).max() > tolerance) return std::nullopt;
  return candidate;
}

Problem make_problem(std::span<const ConstraintRecord> working_set, std::size_t dimension,
                     double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidInput("inner QP: nu must be positive");
  Problem p;
  p.nu = nu;
  const auto t = static_cast<Eigen::Index>(dimension);
  const auto c = static_cast<Eigen::Index>(working_set.size());
  p.a.resize(t, c);
  p.delta.resize(c);
  for (Eigen::Index j = 0; j < c; ++j) {
    const auto& rec = working_set[static_cast<std::size_t>(j)];
    if (rec.a.size() != t) throw InvalidInput("inner QP: constraint length differs from dimension");
    if (!rec.a.allFinite() || !std::isfinite(rec.delta)) {
      throw InvalidInput("inner QP: non-finite constraint");
    }
    p.a.col(j) = rec.a;
    p.delta[j] = rec.delta;
  }
  return p;
}

}  // namespace

double QpResiduals::max() const noexcept {
  return std::max({primal_infeasibility, dual_infeasibility, duality_gap});
}

QpResiduals qp_residuals(std::span<const ConstraintRecord> working_set, double nu,
                         const WeightVector& primal, const Vector& multipliers) {
  const Problem p = make_problem(working_set, static_cast<std::size_t>(primal.w.size()), nu);
  if (multipliers.size() != p.delta.size()) {
    throw InvalidInput("qp_residuals: one multiplier per constraint required");
  }
  return residuals_of(p, primal, multipliers);
}

InnerQpResult solve_inner_qp(std::span<const ConstraintRecord> working_set, std::size_t dimension,
                             double nu, double tolerance, std::size_t max_iterations) {
  if (!(tolerance > 0.0)) throw InvalidInput("inner QP: tolerance must be positive");
  const Problem p = make_problem(working_set, dimension, nu);
  const Eigen::Index c = p.delta.size();

  InnerQpResult result;
  result.multipliers = Vector::Zero(c);
  if (c == 0) {
    result.solution.w = Vector::Zero(static_cast<Eigen::Index>(dimension));
    return result;
  }

  // Dual: max delta^T alpha - 1/2 ||max(A alpha, 0)||^2 over alpha >= 0,
  // sum(alpha) + slack = nu, slack >= 0. The slack is an extra coordinate
  // with a = 0, delta = 0 so pairwise moves keep the sum fixed.
  Vector alpha = Vector::Zero(c);
  double slack = p.nu;
  Vector lin = Vector::Zero(p.a.rows());  // A alpha
  Vector sq_norm(c);
  for (Eigen::Index j = 0; j < c; ++j) sq_norm[j] = p.a.col(j).squaredNorm();

  std::vector<double> trace;
  constexpr std::size_t kPolishEvery = 16;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    result.iterations = it + 1;
    const Vector w = lin.cwiseMax(0.0);
    const Vector grad = p.delta - p.a.transpose() * w;

    const WeightVector primal = primal_from_dual(p, alpha);
    const QpResiduals res = residuals_of(p, primal, alpha);
    trace.push_back(res.max());
    if (res.max() <= tolerance) {
      result.solution = primal;
      result.multipliers = alpha;
      result.residuals = res;
      return result;
    }
    if (it % kPolishEvery == kPolishEvery - 1) {
      if (auto exact = polish(p, alpha, slack, tolerance)) {
        result.multipliers = *exact;
        result.solution = primal_from_dual(p, *exact);
        result.residuals = residuals_of(p, result.solution, *exact);
        result.polished = true;
        return result;
      }
    }

    // Maximal violating pair; index c stands for the slack coordinate.
    Eigen::Index up = c;
    double up_grad = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      if (grad[j] > up_grad) {
        up_grad = grad[j];
        up = j;
      }
    }
    Eigen::Index down = -1;
    double down_grad = std::numeric_limits<double>::infinity();
    if (slack > 0.0) {
      down = c;
      down_grad = 0.0;
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      if (alpha[j] > 0.0 && grad[j] < down_grad) {
        down_grad = grad[j];
        down = j;
      }
    }
    if (down < 0 || up == down || up_grad - down_grad <= 0.0) {
      // Stationary in the pair sense; only rounding separates us from the
      // optimum. Try the exact solve before giving up.
      if (auto exact = polish(p, alpha, slack, tolerance)) {
        result.multipliers = *exact;
        result.solution = primal_from_dual(p, *exact);
        result.residuals = residuals_of(p, result.solution, *exact);
        result.polished = true;
        return result;
      }
      break;
    }

    const double room = down == c ? slack : alpha[down];
    Vector diff = Vector::Zero(p.a.rows());
    if (up < c) diff += p.a.col(up);
    if (down < c) diff -= p.a.col(down);
    const double curvature = diff.squaredNorm();
    const double gain = up_grad - down_grad;
    double step = curvature > 0.0 ? gain / curvature : room;
    step = std::min(step, room);

    if (up < c) alpha[up] += step;
    else slack += step;
    if (down < c) {
      alpha[down] = step == room ? 0.0 : alpha[down] - step;
    } else {
      slack = step == room ? 0.0 : slack - step;
    }
    lin += step * diff;
  }

  std::ostringstream msg;
  msg << "inner QP did not reach tolerance " << tolerance << " after " << result.iterations
      << " iterations (residual " << (trace.empty() ? 0.0 : trace.back()) << ")";
  throw ConvergenceError(msg.str(), std::move(trace));
}

}  // namespace ensmetric

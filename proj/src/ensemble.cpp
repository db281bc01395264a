#include "ensmetric/ensemble.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "ensmetric/errors.hpp"

namespace ensmetric {
namespace {

void check_shapes(const TripletDistanceTable& table, const OrderingMatrix& ordering) {
  if (ordering.m() != table.m() || ordering.m_prime() != table.m_prime() ||
      ordering.position_to_candidate.size() != table.m()) {
    throw InvalidInput("ordering matrix does not match the triplet table");
  }
  if (ordering.k < 1 || ordering.k > ordering.m_prime()) {
    throw InvalidInput("ordering matrix: k must lie in [1, m']");
  }
}

double normaliser(std::size_t m, std::size_t k) {
  return 1.0 / (static_cast<double>(m) * static_cast<double>(k));
}

}  // namespace

void CuttingPlaneConfig::validate(std::size_t m_prime) const {
  if (!(nu > 0.0)) throw InvalidInput("cutting plane: nu must be positive");
  if (!(epsilon > 0.0)) throw InvalidInput("cutting plane: epsilon must be positive");
  if (!(qp_tolerance > 0.0)) throw InvalidInput("cutting plane: qp_tolerance must be positive");
  if (max_iterations < 1) throw InvalidInput("cutting plane: max_iterations must be >= 1");
  if (k < 1 || k > m_prime) {
    std::ostringstream msg;
    msg << "cutting plane: k = " << k << " outside [1, " << m_prime << "]";
    throw InvalidInput(msg.str());
  }
}

double delta_loss(const OrderingMatrix& ordering) {
  if (ordering.k < 1 || ordering.k > ordering.m_prime()) {
    throw InvalidInput("delta_loss: k must lie in [1, m']");
  }
  const auto k = static_cast<Eigen::Index>(ordering.k);
  const double ones = ordering.entries.leftCols(k).cast<double>().sum();
  return ones * normaliser(ordering.m(), ordering.k);
}

Vector psi(const TripletDistanceTable& table, const OrderingMatrix& ordering) {
  check_shapes(table, ordering);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(table.T()));
  for (std::size_t i = 0; i < table.m(); ++i) {
    const Matrix& margins = table.margins(i);
    for (std::size_t pos = 0; pos < ordering.k; ++pos) {
      if (ordering.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pos)) == 0) {
        out += margins.row(static_cast<Eigen::Index>(ordering.position_to_candidate[i][pos]))
                   .transpose();
      }
    }
  }
  return out * normaliser(table.m(), ordering.k);
}

std::vector<std::vector<std::size_t>> rank_positions(const TripletDistanceTable& table,
                                                     const Vector& w) {
  if (static_cast<std::size_t>(w.size()) != table.T()) {
    throw InvalidInput("rank_positions: weight length differs from base-metric count");
  }
  std::vector<std::vector<std::size_t>> order(table.m());
  for (std::size_t i = 0; i < table.m(); ++i) {
    const Vector score = table.margins(i) * w;
    const IdList& ids = table.candidate_ids(i);
    auto& row = order[i];
    row.resize(table.m_prime());
    std::iota(row.begin(), row.end(), std::size_t{0});
    std::sort(row.begin(), row.end(), [&](std::size_t x, std::size_t y) {
      const double sx = score[static_cast<Eigen::Index>(x)];
      const double sy = score[static_cast<Eigen::Index>(y)];
      if (sx != sy) return sx < sy;
      if (ids[x] != ids[y]) return ids[x] < ids[y];
      return x < y;
    });
  }
  return order;
}

double violation(const TripletDistanceTable& table, const OrderingMatrix& ordering,
                 const Vector& w) {
  check_shapes(table, ordering);
  if (static_cast<std::size_t>(w.size()) != table.T()) {
    throw InvalidInput("violation: weight length differs from base-metric count");
  }
  double loss = 0.0;
  double margin = 0.0;
  for (std::size_t i = 0; i < table.m(); ++i) {
    const Vector score = table.margins(i) * w;
    for (std::size_t pos = 0; pos < table.m_prime(); ++pos) {
      if (ordering.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pos)) == 0) {
        continue;
      }
      if (pos < ordering.k) loss += 1.0;
      margin += score[static_cast<Eigen::Index>(ordering.position_to_candidate[i][pos])];
    }
  }
  return (loss - margin) * normaliser(table.m(), ordering.k);
}

OrderingMatrix most_violated_ordering(const TripletDistanceTable& table, const WeightVector& w,
                                      std::size_t k) {
  if (k < 1 || k > table.m_prime()) throw InvalidInput("most_violated_ordering: k outside [1, m']");
  OrderingMatrix out;
  out.k = k;
  out.position_to_candidate = rank_positions(table, w.w);
  out.entries = BinaryMatrix::Zero(static_cast<Eigen::Index>(table.m()),
                                   static_cast<Eigen::Index>(table.m_prime()));
  for (std::size_t i = 0; i < table.m(); ++i) {
    const Vector score = table.margins(i) * w.w;
    for (std::size_t pos = 0; pos < table.m_prime(); ++pos) {
      const double s = score[static_cast<Eigen::Index>(out.position_to_candidate[i][pos])];
      const bool set = pos < k ? s <= 1.0 : s <= 0.0;
      out.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pos)) = set ? 1 : 0;
    }
  }
  return out;
}

ConstraintRecord ordering_constraint(const TripletDistanceTable& table,
                                     const OrderingMatrix& ordering) {
  check_shapes(table, ordering);
  ConstraintRecord rec;
  rec.a = Vector::Zero(static_cast<Eigen::Index>(table.T()));
  for (std::size_t i = 0; i < table.m(); ++i) {
    const Matrix& margins = table.margins(i);
    for (std::size_t pos = 0; pos < table.m_prime(); ++pos) {
      if (ordering.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pos)) != 0) {
        rec.a += margins.row(static_cast<Eigen::Index>(ordering.position_to_candidate[i][pos]))
                     .transpose();
      }
    }
  }
  rec.a *= normaliser(table.m(), ordering.k);
  rec.delta = delta_loss(ordering);
  rec.origin = ordering.by_candidate();
  return rec;
}

ConstraintRecord triplet_constraint(const TripletDistanceTable& table) {
  ConstraintRecord rec;
  rec.a = Vector::Zero(static_cast<Eigen::Index>(table.T()));
  for (std::size_t i = 0; i < table.m(); ++i) {
    rec.a += table.margins(i).colwise().sum().transpose();
  }
  rec.a /= static_cast<double>(table.m()) * static_cast<double>(table.m_prime());
  rec.delta = 1.0;
  return rec;
}

EnsembleFit fit_cmc_top(const TripletDistanceTable& table, const CuttingPlaneConfig& config) {
  config.validate(table.m_prime());
  EnsembleFit fit;
  auto& trace = fit.trace;
  double tolerance = config.qp_tolerance;
  bool tightened = false;

  for (std::size_t round = 0; round < config.max_iterations; ++round) {
    const auto qp = solve_inner_qp(fit.working_set, table.T(), config.nu, tolerance);
    const WeightVector& w = qp.solution;
    if (!trace.objectives.empty() &&
        w.objective < trace.objectives.back() - config.qp_tolerance) {
      trace.objective_monotone = false;
    }
    trace.objectives.push_back(w.objective);
    trace.kkt_residuals.push_back(qp.residuals.max());
    trace.iterations = round + 1;
    fit.weights = w;

    const OrderingMatrix worst = most_violated_ordering(table, w, config.k);
    ConstraintRecord rec = ordering_constraint(table, worst);
    const double g = rec.delta - w.w.dot(rec.a);
    trace.violations.push_back(g - w.xi);
    if (g <= w.xi + config.epsilon) {
      trace.converged = true;
      return fit;
    }

    const bool repeated =
        std::any_of(fit.working_set.begin(), fit.working_set.end(),
                    [&](const ConstraintRecord& c) { return c.origin == rec.origin; });
    if (repeated) {
      if (tightened) {
        std::ostringstream msg;
        msg << "cutting plane: most-violated ordering repeats with violation " << g - w.xi
            << " at round " << round + 1;
        throw ConvergenceError(msg.str(), trace.violations);
      }
      tolerance *= 0.5;
      tightened = true;
      continue;
    }
    fit.working_set.push_back(std::move(rec));
  }
  std::ostringstream msg;
  msg << "cutting plane: no convergence within " << config.max_iterations << " rounds";
  throw ConvergenceError(msg.str(), trace.violations);
}

EnsembleFit fit_cmc_triplet(const TripletDistanceTable& table, const CuttingPlaneConfig& config) {
  CuttingPlaneConfig cfg = config;
  cfg.k = 1;  // unused by the triplet formulation
  cfg.validate(table.m_prime());
  EnsembleFit fit;
  fit.working_set.push_back(triplet_constraint(table));
  const auto qp = solve_inner_qp(fit.working_set, table.T(), cfg.nu, cfg.qp_tolerance);
  fit.weights = qp.solution;
  const double g = 1.0 - qp.solution.w.dot(fit.working_set.front().a);
  fit.trace.objectives.push_back(qp.solution.objective);
  fit.trace.kkt_residuals.push_back(qp.residuals.max());
  fit.trace.violations.push_back(g - qp.solution.xi);
  fit.trace.iterations = 1;
  fit.trace.converged = g <= qp.solution.xi + cfg.epsilon;
  if (!fit.trace.converged) {
    throw ConvergenceError("cutting plane (triplet): single constraint still violated",
                           fit.trace.violations);
  }
  return fit;
}

}  // namespace ensmetric

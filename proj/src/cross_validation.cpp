#include "ensmetric/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ensmetric/errors.hpp"
#include "ensmetric/nystrom.hpp"

namespace ensmetric {

CrossValidationResult cross_validate_nu(const IdList& ids, const std::vector<double>& grid,
                                        std::size_t folds, std::uint64_t seed,
                                        const FoldScorer& scorer) {
  if (grid.empty()) throw InvalidInput("cross-validation: empty grid");
  if (folds < 2) throw InvalidInput("cross-validation: need at least two folds");
  if (ids.size() / folds < 2) {
    std::ostringstream msg;
    msg << "cross-validation: " << ids.size() << " identities cannot fill " << folds
        << " folds of at least two";
    throw InvalidInput(msg.str());
  }

  CrossValidationResult result;
  if (grid.size() == 1) {
    result.best_nu = grid.front();
    result.mean_scores.assign(1, 0.0);
    return result;
  }

  const auto order = sample_without_replacement(ids.size(), ids.size(), seed);
  std::vector<std::vector<std::size_t>> members(folds);
  for (std::size_t i = 0; i < order.size(); ++i) members[i % folds].push_back(order[i]);

  result.mean_scores.assign(grid.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<char> held(ids.size(), 0);
    for (auto i : members[f]) held[i] = 1;
    IdList fit_ids;
    IdList held_ids;
    for (std::size_t i = 0; i < ids.size(); ++i) (held[i] ? held_ids : fit_ids).push_back(ids[i]);
    const auto scores = scorer(fit_ids, held_ids, grid);
    if (scores.size() != grid.size()) {
      throw InvalidInput("cross-validation: scorer returned the wrong number of scores");
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      result.mean_scores[g] += scores[g] / static_cast<double>(folds);
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double s = result.mean_scores[g];
    const double b = result.mean_scores[best];
    if (s > b || (s == b && grid[g] < grid[best])) best = g;
  }
  result.best_nu = grid[best];
  return result;
}

std::vector<double> log_grid(double lo_exponent, double hi_exponent, std::size_t points) {
  if (points < 1) throw InvalidInput("log_grid: need at least one point");
  if (points == 1) return {std::pow(10.0, lo_exponent)};
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double e = lo_exponent + (hi_exponent - lo_exponent) * static_cast<double>(i) /
                                       static_cast<double>(points - 1);
    out[i] = std::pow(10.0, e);
  }
  return out;
}

}  // namespace ensmetric

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ensmetric/types.hpp"

namespace ensmetric {

/// Scores every grid value on one fold: fit on `fit_ids`, evaluate rank-1 on
/// `held_out_ids`. Returns one score per grid entry.
using FoldScorer = std::function<std::vector<double>(
    const IdList& fit_ids, const IdList& held_out_ids, const std::vector<double>& grid)>;

struct CrossValidationResult {
  double best_nu = 0.0;
  std::vector<double> mean_scores;  // aligned with the grid
};

/// Splits `ids` into `folds` seeded folds and picks the grid value with the
/// highest mean fold score; exact ties go to the smaller value. Throws
/// InvalidInput on an empty grid, folds < 2 or a fold with fewer than two
/// identities.
CrossValidationResult cross_validate_nu(const IdList& ids, const std::vector<double>& grid,
                                        std::size_t folds, std::uint64_t seed,
                                        const FoldScorer& scorer);

/// {10^lo, 10^(lo + step), ..., 10^hi} with `points` entries.
std::vector<double> log_grid(double lo_exponent, double hi_exponent, std::size_t points);

}  // namespace ensmetric

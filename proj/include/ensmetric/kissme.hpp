#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ensmetric/types.hpp"

namespace ensmetric {

/// KISS metric: M = clip(Sigma_S^-1 - Sigma_D^-1) where Sigma_S / Sigma_D are
/// second-moment matrices of similar / dissimilar pair differences.
struct KissmeModel {
  Matrix M;            // symmetric PSD after spectrum clipping
  Matrix M_raw;        // before clipping
  Matrix factor;       // L with M = L^T L
  Matrix sigma_s;      // ridge already added
  Matrix sigma_d;
  double ridge_s = 0.0;
  double ridge_d = 0.0;
  std::size_t similar_pairs = 0;
  std::size_t dissimilar_pairs = 0;

  /// (a - b)^T M (a - b), evaluated as ||L (a - b)||^2.
  double distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const;
};

struct KissmeOptions {
  /// Added to both covariance diagonals. nullopt selects 1e-6 * trace(Sigma) / D
  /// per matrix; 0 disables regularisation.
  std::optional<double> ridge;
  /// Up to this many matched pairs every cross pair is used as a dissimilar
  /// pair; above it 10 x (#similar) cross pairs are drawn with `seed`.
  std::size_t full_enumeration_limit = 500;
  std::uint64_t seed = 0;
};

/// Row pairs (row in view A, row in view B) of the same identity.
using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

/// Fits from explicit difference vectors (one per row). Requires at least
/// D + 1 rows in each matrix. Throws NumericalError naming "Sigma_S" or
/// "Sigma_D" when a covariance is singular.
KissmeModel fit_kissme_from_differences(const Matrix& similar_diffs,
                                        const Matrix& dissimilar_diffs,
                                        std::optional<double> ridge);

/// Fits from two views in a common (typically PCA-reduced) space.
KissmeModel fit_kissme(const Matrix& view_a, const Matrix& view_b, const PairList& pairs,
                       const KissmeOptions& options = {});

/// Pairs every identity of `view_a` with the same identity in `view_b`.
/// Throws InvalidInput when an identity is missing from view B.
PairList matched_pairs(const DescriptorSet& view_a, const DescriptorSet& view_b);

}  // namespace ensmetric

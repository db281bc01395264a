#pragma once

#include <cstddef>

#include "ensmetric/types.hpp"

namespace ensmetric {

/// Affine map onto the leading principal directions of a training sample.
struct PcaProjection {
  Vector mean;      // length D
  Matrix basis;     // D x D', orthonormal columns, descending variance
  Vector variances; // length D', eigenvalues of the sample covariance

  std::size_t input_dimension() const noexcept { return static_cast<std::size_t>(basis.rows()); }
  std::size_t output_dimension() const noexcept { return static_cast<std::size_t>(basis.cols()); }

  /// Projects every row of `rows` (n x D) to n x D'.
  Matrix apply(const Matrix& rows) const;
};

/// Requires 1 <= target_dim <= min(rows, cols); throws InvalidInput otherwise.
PcaProjection fit_pca(const Matrix& x, std::size_t target_dim);
PcaProjection fit_pca(const DescriptorSet& x, std::size_t target_dim);

}  // namespace ensmetric

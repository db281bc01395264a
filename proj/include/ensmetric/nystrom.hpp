#pragma once

#include <cstddef>
#include <cstdint>

#include "ensmetric/kernel.hpp"
#include "ensmetric/types.hpp"

namespace ensmetric {

/// Low-rank Nystrom feature map z(x) = D_r^{-1/2} V_r^T (k(x, a_1), ..., k(x, a_s))^T
/// built from s sampled anchors a_i.
class NystromMap {
 public:
  NystromMap() = default;

  /// Rebuilds a fitted map; checks shapes and eigenvalue ordering.
  NystromMap(Matrix anchors, Vector eigenvalues, Matrix eigenvectors, KernelSpec kernel);

  const Matrix& anchors() const noexcept { return anchors_; }
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  const Matrix& eigenvectors() const noexcept { return eigenvectors_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(eigenvalues_.size()); }
  std::size_t input_dimension() const noexcept { return static_cast<std::size_t>(anchors_.cols()); }

  Vector embed(const Eigen::Ref<const Vector>& x) const;
  /// One embedding per row of `rows` (n x r).
  Matrix embed_rows(const Matrix& rows) const;

 private:
  Matrix anchors_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  Matrix projection_;  // V_r D_r^{-1/2}
  KernelSpec kernel_;
};

/// Samples `sample_count` rows of `x` without replacement (seeded), keeps the
/// top-r eigenpairs of their kernel matrix and drops eigenvalues below
/// 1e-12 * lambda_1 (the returned rank may be smaller than r).
/// Requires 1 <= r <= sample_count <= rows. Throws NumericalError when no
/// eigenvalue survives.
NystromMap fit_nystrom(const Matrix& x, std::size_t sample_count, std::size_t r,
                       const KernelSpec& kernel, std::uint64_t seed);
NystromMap fit_nystrom(const DescriptorSet& x, std::size_t sample_count, std::size_t r,
                       const KernelSpec& kernel, std::uint64_t seed);

/// Uniform sample of `count` distinct indices in [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    std::uint64_t seed);

inline constexpr std::size_t kDenseEigenLimit = 2000;

/// Descending eigenvalues of the full kernel matrix over the rows of `x`.
/// Throws InvalidInput when rows > limit.
Vector eigen_spectrum(const Matrix& x, const KernelSpec& kernel,
                      std::size_t limit = kDenseEigenLimit);
Vector eigen_spectrum(const DescriptorSet& x, const KernelSpec& kernel,
                      std::size_t limit = kDenseEigenLimit);

}  // namespace ensmetric

#pragma once

#include <cstddef>

#include "ensmetric/kernel.hpp"
#include "ensmetric/types.hpp"

namespace ensmetric {

struct KlfdaOptions {
  KernelSpec kernel;
  double beta = 0.01;          // ridge added to the within-class scatter
  std::size_t dimension = 0;   // 0 selects min(n - 1, 40)
  std::size_t neighbours = 7;  // local-scaling neighbour rank
};

/// Pairwise weights of local Fisher discriminant analysis.
struct LocalFisherWeights {
  Matrix affinity;  // A_ij, zero across classes
  Matrix within;    // W^w
  Matrix between;   // W^b
};

/// Local-scaling affinities from squared distances: A_ij =
/// exp(-d2_ij / (s_i s_j)) for same-label pairs, where s_i is the distance to
/// the `neighbours`-th nearest same-label sample (the farthest one when the
/// class is smaller). Throws InvalidInput when a label occurs only once.
LocalFisherWeights local_fisher_weights(const Matrix& squared_distances, const IdList& labels,
                                        std::size_t neighbours);

/// Kernel local Fisher discriminant projection.
class KlfdaModel {
 public:
  KlfdaModel() = default;

  /// Rows of `x` are training samples labelled by `labels` (identity ids; every
  /// id must occur at least twice).
  static KlfdaModel fit(const Matrix& x, const IdList& labels, const KlfdaOptions& options);

  /// n x r coefficients over the training samples.
  const Matrix& alpha() const noexcept { return alpha_; }
  const Matrix& anchors() const noexcept { return anchors_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  double beta() const noexcept { return beta_; }
  /// Generalised eigenvalues of the kept directions, descending.
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }

  std::size_t input_dimension() const noexcept { return static_cast<std::size_t>(anchors_.cols()); }
  std::size_t output_dimension() const noexcept { return static_cast<std::size_t>(alpha_.cols()); }

  /// alpha^T k(x) for every row x of `rows`.
  Matrix project(const Matrix& rows) const;

  /// Rebuilds a fitted model (deserialisation).
  static KlfdaModel from_parts(Matrix alpha, Matrix anchors, KernelSpec kernel, double beta,
                               Vector eigenvalues);

 private:
  Matrix alpha_;
  Matrix anchors_;
  KernelSpec kernel_;
  double beta_ = 0.01;
  Vector eigenvalues_;
  Matrix linear_map_;  // anchors^T alpha, only for the linear kernel
};

}  // namespace ensmetric

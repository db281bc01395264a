#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ensmetric/types.hpp"

namespace ensmetric {

enum class KernelKind { RbfChi2, Rbf, Linear };

std::string to_string(KernelKind kind);
/// Accepts "rbf-chi2", "rbf", "linear"; throws ConfigError otherwise.
KernelKind parse_kernel_kind(std::string_view name);

struct KernelSpec {
  KernelKind kind = KernelKind::RbfChi2;
  double sigma2 = 1.0;  // bandwidth; ignored for linear

  /// Throws InvalidInput if an rbf kind has sigma2 <= 0.
  void validate() const;
};

/// sum_d (a_d - b_d)^2 / (a_d + b_d), skipping bins where a_d + b_d == 0.
/// Throws InvalidInput on negative entries or length mismatch.
double chi2_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// exp(-chi2(a, b) / sigma2), in (0, 1].
double chi2_kernel(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                   double sigma2);

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Vector>& a,
                    const Eigen::Ref<const Vector>& b);

/// Gram matrix between the rows of `x` and the rows of `y`.
Matrix kernel_matrix(const KernelSpec& spec, const Matrix& x, const Matrix& y);
Matrix kernel_matrix(const KernelSpec& spec, const Matrix& x);

/// The distance an rbf-style kernel exponentiates: chi2 for rbf-chi2, squared
/// Euclidean for rbf and linear.
double base_distance(KernelKind kind, const Eigen::Ref<const Vector>& a,
                     const Eigen::Ref<const Vector>& b);

/// Linear-interpolation quantile (position p * (n - 1) in the sorted sample).
double quantile(std::vector<double> values, double p);

/// Bandwidth heuristic: the 0.25 quantile of all pairwise base distances
/// between the rows of `x`. Falls back to the smallest positive distance when
/// the quantile is 0; throws DataError when every distance is 0.
double select_sigma2(const Matrix& x, KernelKind kind);
double select_sigma2(const DescriptorSet& x, KernelKind kind);

}  // namespace ensmetric

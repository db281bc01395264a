#include "ensmetric/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ensmetric/errors.hpp"

namespace ensmetric {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::RbfChi2:
      return "rbf-chi2";
    case KernelKind::Rbf:
      return "rbf";
    case KernelKind::Linear:
      return "linear";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "rbf-chi2") return KernelKind::RbfChi2;
  if (name == "rbf") return KernelKind::Rbf;
  if (name == "linear") return KernelKind::Linear;
  throw ConfigError("unknown kernel kind '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  if (kind != KernelKind::Linear && !(sigma2 > 0.0 && std::isfinite(sigma2))) {
    throw InvalidInput("rbf kernels need sigma2 > 0");
  }
}

double chi2_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) throw InvalidInput("chi2: histogram lengths differ");
  double sum = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    if (a[d] < 0.0 || b[d] < 0.0) {
      throw InvalidInput("chi2: histogram bins must be non-negative");
    }
    const double denom = a[d] + b[d];
    if (denom > 0.0) {
      const double diff = a[d] - b[d];
      sum += diff * diff / denom;
    }
  }
  return sum;
}

double chi2_kernel(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                   double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidInput("chi2 kernel needs sigma2 > 0");
  return std::exp(-chi2_distance(a, b) / sigma2);
}

double base_distance(KernelKind kind, const Eigen::Ref<const Vector>& a,
                     const Eigen::Ref<const Vector>& b) {
  if (kind == KernelKind::RbfChi2) return chi2_distance(a, b);
  if (a.size() != b.size()) throw InvalidInput("kernel: vector lengths differ");
  return (a - b).squaredNorm();
}

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Vector>& a,
                    const Eigen::Ref<const Vector>& b) {
  switch (spec.kind) {
    case KernelKind::RbfChi2:
      return chi2_kernel(a, b, spec.sigma2);
    case KernelKind::Rbf:
      return std::exp(-base_distance(spec.kind, a, b) / spec.sigma2);
    case KernelKind::Linear:
      if (a.size() != b.size()) throw InvalidInput("kernel: vector lengths differ");
      return a.dot(b);
  }
  return 0.0;
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& x, const Matrix& y) {
  spec.validate();
  if (x.cols() != y.cols()) throw InvalidInput("kernel_matrix: column counts differ");
  if (spec.kind == KernelKind::Linear) return x * y.transpose();
  Matrix k(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      k(i, j) = kernel_value(spec, x.row(i).transpose(), y.row(j).transpose());
    }
  }
  return k;
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& x) {
  spec.validate();
  if (spec.kind == KernelKind::Linear) return x * x.transpose();
  const Eigen::Index n = x.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = kernel_value(spec, x.row(i).transpose(), x.row(i).transpose());
    for (Eigen::Index j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = kernel_value(spec, x.row(i).transpose(), x.row(j).transpose());
    }
  }
  return k;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double select_sigma2(const Matrix& x, KernelKind kind) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw InvalidInput("select_sigma2 needs at least two rows");
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  double smallest_positive = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = base_distance(kind, x.row(i).transpose(), x.row(j).transpose());
      dists.push_back(d);
      if (d > 0.0) smallest_positive = std::min(smallest_positive, d);
    }
  }
  if (!std::isfinite(smallest_positive)) {
    throw DataError("select_sigma2: all pairwise distances are zero (degenerate data)");
  }
  const double q = quantile(std::move(dists), 0.25);
  return q > 0.0 ? q : smallest_positive;
}

double select_sigma2(const DescriptorSet& x, KernelKind kind) {
  return select_sigma2(x.descriptors(), kind);
}

}  // namespace ensmetric

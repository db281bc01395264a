#include "ensmetric/nystrom.hpp"

#include <numeric>
#include <random>
#include <sstream>

#include "detail/linalg.hpp"
#include "ensmetric/errors.hpp"

namespace ensmetric {

NystromMap::NystromMap(Matrix anchors, Vector eigenvalues, Matrix eigenvectors, KernelSpec kernel)
    : anchors_(std::move(anchors)),
      eigenvalues_(std::move(eigenvalues)),
      eigenvectors_(std::move(eigenvectors)),
      kernel_(kernel) {
  kernel_.validate();
  if (eigenvalues_.size() < 1 || eigenvectors_.rows() != anchors_.rows() ||
      eigenvectors_.cols() != eigenvalues_.size()) {
    throw InvalidInput("nystrom: inconsistent map shapes");
  }
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    if (!(eigenvalues_[i] > 0.0) || (i > 0 && eigenvalues_[i] > eigenvalues_[i - 1])) {
      throw InvalidInput("nystrom: eigenvalues must be positive and descending");
    }
  }
  projection_ = eigenvectors_ * eigenvalues_.cwiseSqrt().cwiseInverse().asDiagonal();
}

Vector NystromMap::embed(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != anchors_.cols()) {
    std::ostringstream msg;
    msg << "nystrom: expected a " << anchors_.cols() << "-dim descriptor, got " << x.size();
    throw InvalidInput(msg.str());
  }
  Vector k(anchors_.rows());
  for (Eigen::Index i = 0; i < anchors_.rows(); ++i) {
    k[i] = kernel_value(kernel_, x, anchors_.row(i).transpose());
  }
  return projection_.transpose() * k;
}

Matrix NystromMap::embed_rows(const Matrix& rows) const {
  if (rows.cols() != anchors_.cols()) {
    std::ostringstream msg;
    msg << "nystrom: expected " << anchors_.cols() << "-dim rows, got " << rows.cols();
    throw InvalidInput(msg.str());
  }
  return kernel_matrix(kernel_, rows, anchors_) * projection_;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    std::uint64_t seed) {
  if (count > n) throw InvalidInput("cannot sample more items than available");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with an explicit draw so results do not depend on the
  // standard library's shuffle.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

NystromMap fit_nystrom(const Matrix& x, std::size_t sample_count, std::size_t r,
                       const KernelSpec& kernel, std::uint64_t seed) {
  kernel.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (r < 1 || r > sample_count || sample_count > n) {
    std::ostringstream msg;
    msg << "nystrom: need 1 <= r (" << r << ") <= samples (" << sample_count << ") <= n (" << n
        << ")";
    throw InvalidInput(msg.str());
  }
  const auto picked = sample_without_replacement(n, sample_count, seed);
  Matrix anchors(static_cast<Eigen::Index>(sample_count), x.cols());
  for (std::size_t i = 0; i < sample_count; ++i) {
    anchors.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(picked[i]));
  }

  const auto eig = detail::sorted_symmetric_eigen(kernel_matrix(kernel, anchors));
  const double top = eig.values[0];
  if (!(top > 0.0)) throw NumericalError("nystrom: kernel matrix of the samples is degenerate");
  Eigen::Index keep = 0;
  while (keep < static_cast<Eigen::Index>(r) && eig.values[keep] > 1e-12 * top) ++keep;
  return NystromMap(std::move(anchors), eig.values.head(keep), eig.vectors.leftCols(keep), kernel);
}

NystromMap fit_nystrom(const DescriptorSet& x, std::size_t sample_count, std::size_t r,
                       const KernelSpec& kernel, std::uint64_t seed) {
  return fit_nystrom(x.descriptors(), sample_count, r, kernel, seed);
}

Vector eigen_spectrum(const Matrix& x, const KernelSpec& kernel, std::size_t limit) {
  if (static_cast<std::size_t>(x.rows()) > limit) {
    std::ostringstream msg;
    msg << "eigen_spectrum: " << x.rows() << " rows exceed the dense limit of " << limit
        << "; subsample the data first";
    throw InvalidInput(msg.str());
  }
  if (x.rows() < 1) throw InvalidInput("eigen_spectrum: empty data");
  Matrix k = kernel_matrix(kernel, x);
  k = 0.5 * (k + k.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(k, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().reverse();
}

Vector eigen_spectrum(const DescriptorSet& x, const KernelSpec& kernel, std::size_t limit) {
  return eigen_spectrum(x.descriptors(), kernel, limit);
}

}  // namespace ensmetric

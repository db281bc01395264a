#include "ensmetric/pca.hpp"

#include <algorithm>
#include <sstream>

#include "detail/linalg.hpp"
#include "ensmetric/errors.hpp"

namespace ensmetric {

Matrix PcaProjection::apply(const Matrix& rows) const {
  if (rows.cols() != basis.rows()) {
    std::ostringstream msg;
    msg << "pca: expected " << basis.rows() << "-dim rows, got " << rows.cols();
    throw InvalidInput(msg.str());
  }
  return (rows.rowwise() - mean.transpose()) * basis;
}

PcaProjection fit_pca(const Matrix& x, std::size_t target_dim) {
  const auto limit = static_cast<std::size_t>(std::min(x.rows(), x.cols()));
  if (target_dim < 1 || target_dim > limit) {
    std::ostringstream msg;
    msg << "pca: target dimension " << target_dim << " outside [1, " << limit << "]";
    throw InvalidInput(msg.str());
  }
  PcaProjection pca;
  pca.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - pca.mean.transpose();
  const double denom = x.rows() > 1 ? static_cast<double>(x.rows() - 1) : 1.0;
  const auto d = static_cast<Eigen::Index>(target_dim);

  // Wide data: diagonalise the n x n Gram matrix instead of the D x D covariance.
  if (x.cols() > x.rows()) {
    const auto gram = detail::sorted_symmetric_eigen(centered * centered.transpose() / denom);
    const double floor = 1e-12 * std::max(gram.values[0], 1e-300);
    if (gram.values[d - 1] > floor) {
      pca.basis = centered.transpose() * gram.vectors.leftCols(d);
      for (Eigen::Index c = 0; c < d; ++c) pca.basis.col(c).normalize();
      detail::fix_column_signs(pca.basis);
      pca.variances = gram.values.head(d);
      return pca;
    }
  }
  const auto eig = detail::sorted_symmetric_eigen(centered.transpose() * centered / denom);
  pca.basis = eig.vectors.leftCols(d);
  pca.variances = eig.values.head(d).cwiseMax(0.0);
  return pca;
}

PcaProjection fit_pca(const DescriptorSet& x, std::size_t target_dim) {
  return fit_pca(x.descriptors(), target_dim);
}

}  // namespace ensmetric

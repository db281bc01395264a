#include "ensmetric/klfda.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "detail/linalg.hpp"
#include "ensmetric/errors.hpp"

namespace ensmetric {
namespace {

Matrix squared_distances_from_gram(const Matrix& k) {
  const Vector diag = k.diagonal();
  Matrix d2 = (-2.0 * k).colwise() + diag;
  d2.rowwise() += diag.transpose();
  return d2.cwiseMax(0.0);
}

}  // namespace

LocalFisherWeights local_fisher_weights(const Matrix& squared_distances, const IdList& labels,
                                        std::size_t neighbours) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (squared_distances.rows() != n || squared_distances.cols() != n) {
    throw InvalidInput("klfda: distance matrix does not match label count");
  }
  if (neighbours < 1) throw InvalidInput("klfda: neighbour rank must be >= 1");

  std::map<std::string, std::vector<Eigen::Index>> classes;
  for (Eigen::Index i = 0; i < n; ++i) classes[labels[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto& [label, members] : classes) {
    if (members.size() < 2) {
      throw InvalidInput("klfda: identity '" + label + "' has a single sample");
    }
  }

  LocalFisherWeights weights;
  weights.affinity = Matrix::Zero(n, n);
  weights.within = Matrix::Zero(n, n);
  weights.between = Matrix::Constant(n, n, 1.0 / static_cast<double>(n));

  for (const auto& [label, members] : classes) {
    const auto nc = members.size();
    std::vector<double> scale(nc);
    for (std::size_t a = 0; a < nc; ++a) {
      std::vector<double> d;
      d.reserve(nc - 1);
      for (std::size_t b = 0; b < nc; ++b) {
        if (a != b) d.push_back(squared_distances(members[a], members[b]));
      }
      std::sort(d.begin(), d.end());
      const std::size_t rank = std::min(neighbours, d.size());
      scale[a] = std::sqrt(std::max(d[rank - 1], 0.0));
    }
    for (std::size_t a = 0; a < nc; ++a) {
      for (std::size_t b = 0; b < nc; ++b) {
        const Eigen::Index i = members[a];
        const Eigen::Index j = members[b];
        const double d2 = std::max(squared_distances(i, j), 0.0);
        const double s = scale[a] * scale[b];
        const double aff = d2 == 0.0 ? 1.0 : (s > 0.0 ? std::exp(-d2 / s) : 0.0);
        weights.affinity(i, j) = aff;
        weights.within(i, j) = aff / static_cast<double>(nc);
        weights.between(i, j) =
            aff * (1.0 / static_cast<double>(n) - 1.0 / static_cast<double>(nc));
      }
    }
  }
  return weights;
}

KlfdaModel KlfdaModel::fit(const Matrix& x, const IdList& labels, const KlfdaOptions& options) {
  options.kernel.validate();
  if (!(options.beta > 0.0)) throw InvalidInput("klfda: beta must be positive");
  const auto n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n) throw InvalidInput("klfda: one label per row required");
  if (n < 2) throw InvalidInput("klfda: need at least two samples");
  const std::size_t r = options.dimension == 0 ? std::min<std::size_t>(n - 1, 40) : options.dimension;
  if (r > n) throw InvalidInput("klfda: projection dimension exceeds sample count");

  Matrix k = kernel_matrix(options.kernel, x);
  k = 0.5 * (k + k.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Matrix> check(k, Eigen::EigenvaluesOnly);
    const double top = std::max(check.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
    if (check.eigenvalues().minCoeff() < -1e-8 * top) {
      std::ostringstream msg;
      msg << "klfda: kernel matrix is not PSD (min eigenvalue " << check.eigenvalues().minCoeff()
          << ")";
      throw NumericalError(msg.str());
    }
  }

  const auto w = local_fisher_weights(squared_distances_from_gram(k), labels, options.neighbours);
  const auto laplacian = [](const Matrix& weights) {
    Matrix l = -weights;
    l.diagonal() += weights.rowwise().sum();
    return l;
  };
  Matrix s_between = k * laplacian(w.between) * k;
  Matrix s_within = k * laplacian(w.within) * k;
  s_between = 0.5 * (s_between + s_between.transpose());
  s_within = 0.5 * (s_within + s_within.transpose());
  s_within.diagonal().array() += options.beta;

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(s_between, s_within);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("klfda: generalised eigenproblem failed");
  }
  const auto ri = static_cast<Eigen::Index>(r);
  KlfdaModel model;
  model.eigenvalues_ = solver.eigenvalues().reverse().head(ri);
  model.alpha_ = solver.eigenvectors().rowwise().reverse().leftCols(ri);
  detail::fix_column_signs(model.alpha_);
  if (!model.alpha_.allFinite()) throw NumericalError("klfda: non-finite projection");
  model.anchors_ = x;
  model.kernel_ = options.kernel;
  model.beta_ = options.beta;
  if (model.kernel_.kind == KernelKind::Linear) model.linear_map_ = x.transpose() * model.alpha_;
  return model;
}

KlfdaModel KlfdaModel::from_parts(Matrix alpha, Matrix anchors, KernelSpec kernel, double beta,
                                  Vector eigenvalues) {
  kernel.validate();
  if (alpha.rows() != anchors.rows()) throw InvalidInput("klfda: alpha rows must match anchors");
  KlfdaModel model;
  model.alpha_ = std::move(alpha);
  model.anchors_ = std::move(anchors);
  model.kernel_ = kernel;
  model.beta_ = beta;
  model.eigenvalues_ = std::move(eigenvalues);
  if (kernel.kind == KernelKind::Linear) {
    model.linear_map_ = model.anchors_.transpose() * model.alpha_;
  }
  return model;
}

Matrix KlfdaModel::project(const Matrix& rows) const {
  if (rows.cols() != anchors_.cols()) {
    std::ostringstream msg;
    msg << "klfda: expected " << anchors_.cols() << "-dim rows, got " << rows.cols();
    throw InvalidInput(msg.str());
  }
  if (kernel_.kind == KernelKind::Linear) return rows * linear_map_;
  return kernel_matrix(kernel_, rows, anchors_) * alpha_;
}

}  // namespace ensmetric

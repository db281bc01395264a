#include "ensmetric/kissme.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <unordered_map>

#include "detail/linalg.hpp"
#include "ensmetric/errors.hpp"

namespace ensmetric {
namespace {

Matrix second_moment(const Matrix& diffs) {
  return diffs.transpose() * diffs / static_cast<double>(diffs.rows());
}

// Adds the ridge, then inverts through the eigendecomposition so that rank
// deficiency is reported instead of silently producing garbage.
Matrix regularised_inverse(Matrix& sigma, std::optional<double> ridge, double& used_ridge,
                           const char* name) {
  const auto d = static_cast<double>(sigma.rows());
  used_ridge = ridge.value_or(1e-6 * sigma.trace() / d);
  if (used_ridge < 0.0) throw InvalidInput("kissme: ridge must be non-negative");
  sigma.diagonal().array() += used_ridge;
  sigma = 0.5 * (sigma + sigma.transpose());

  const auto eig = detail::sorted_symmetric_eigen(sigma);
  const double top = eig.values[0];
  const double bottom = eig.values[eig.values.size() - 1];
  if (!(top > 0.0) || bottom <= 1e-12 * top) {
    std::ostringstream msg;
    msg << "kissme: " << name << " is numerically singular (eigenvalues in [" << bottom << ", "
        << top << "]); use a positive ridge or more pairs";
    throw NumericalError(msg.str());
  }
  return eig.vectors * eig.values.cwiseInverse().asDiagonal() * eig.vectors.transpose();
}

}  // namespace

double KissmeModel::distance(const Eigen::Ref<const Vector>& a,
                             const Eigen::Ref<const Vector>& b) const {
  if (a.size() != factor.cols() || b.size() != factor.cols()) {
    throw InvalidInput("kissme: descriptor dimension does not match the metric");
  }
  return (factor * (a - b)).squaredNorm();
}

KissmeModel fit_kissme_from_differences(const Matrix& similar_diffs,
                                        const Matrix& dissimilar_diffs,
                                        std::optional<double> ridge) {
  const Eigen::Index d = similar_diffs.cols();
  if (d < 1 || dissimilar_diffs.cols() != d) {
    throw InvalidInput("kissme: difference matrices disagree on dimension");
  }
  if (similar_diffs.rows() < d + 1 || dissimilar_diffs.rows() < d + 1) {
    std::ostringstream msg;
    msg << "kissme: need at least " << d + 1 << " similar and dissimilar pairs in " << d
        << " dimensions, got " << similar_diffs.rows() << " and " << dissimilar_diffs.rows();
    throw InvalidInput(msg.str());
  }

  KissmeModel model;
  model.similar_pairs = static_cast<std::size_t>(similar_diffs.rows());
  model.dissimilar_pairs = static_cast<std::size_t>(dissimilar_diffs.rows());
  model.sigma_s = second_moment(similar_diffs);
  model.sigma_d = second_moment(dissimilar_diffs);
  const Matrix inv_s = regularised_inverse(model.sigma_s, ridge, model.ridge_s, "Sigma_S");
  const Matrix inv_d = regularised_inverse(model.sigma_d, ridge, model.ridge_d, "Sigma_D");

  model.M_raw = inv_s - inv_d;
  model.M_raw = 0.5 * (model.M_raw + model.M_raw.transpose());

  // Clip the negative part of the spectrum to 0, keeping all eigenvectors.
  const auto eig = detail::sorted_symmetric_eigen(model.M_raw);
  const Vector clipped = eig.values.cwiseMax(0.0);
  model.M = eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
  model.M = 0.5 * (model.M + model.M.transpose());
  model.factor = clipped.cwiseSqrt().asDiagonal() * eig.vectors.transpose();
  return model;
}

KissmeModel fit_kissme(const Matrix& view_a, const Matrix& view_b, const PairList& pairs,
                       const KissmeOptions& options) {
  if (view_a.cols() != view_b.cols()) throw InvalidInput("kissme: views differ in dimension");
  if (pairs.size() < 2) throw InvalidInput("kissme: need at least two matched pairs");
  for (const auto& [ia, ib] : pairs) {
    if (ia >= static_cast<std::size_t>(view_a.rows()) ||
        ib >= static_cast<std::size_t>(view_b.rows())) {
      throw InvalidInput("kissme: pair index out of range");
    }
  }

  const auto n = pairs.size();
  Matrix similar(static_cast<Eigen::Index>(n), view_a.cols());
  for (std::size_t p = 0; p < n; ++p) {
    similar.row(static_cast<Eigen::Index>(p)) =
        view_a.row(static_cast<Eigen::Index>(pairs[p].first)) -
        view_b.row(static_cast<Eigen::Index>(pairs[p].second));
  }

  std::vector<std::pair<std::size_t, std::size_t>> cross;  // (pair p, pair q), p != q
  if (n <= options.full_enumeration_limit) {
    cross.reserve(n * (n - 1));
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) {
        if (p != q) cross.emplace_back(p, q);
      }
    }
  } else {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t wanted = 10 * n;
    cross.reserve(wanted);
    while (cross.size() < wanted) {
      const std::size_t p = pick(rng);
      const std::size_t q = pick(rng);
      if (p != q) cross.emplace_back(p, q);
    }
  }
  Matrix dissimilar(static_cast<Eigen::Index>(cross.size()), view_a.cols());
  for (std::size_t c = 0; c < cross.size(); ++c) {
    dissimilar.row(static_cast<Eigen::Index>(c)) =
        view_a.row(static_cast<Eigen::Index>(pairs[cross[c].first].first)) -
        view_b.row(static_cast<Eigen::Index>(pairs[cross[c].second].second));
  }
  return fit_kissme_from_differences(similar, dissimilar, options.ridge);
}

PairList matched_pairs(const DescriptorSet& view_a, const DescriptorSet& view_b) {
  std::unordered_map<std::string, std::size_t> row_b;
  for (std::size_t j = 0; j < view_b.size(); ++j) row_b.emplace(view_b.identities()[j], j);
  PairList pairs;
  pairs.reserve(view_a.size());
  for (std::size_t i = 0; i < view_a.size(); ++i) {
    const auto& id = view_a.identities()[i];
    auto it = row_b.find(id);
    if (it == row_b.end()) throw InvalidInput("identity '" + id + "' missing from view B");
    pairs.emplace_back(i, it->second);
  }
  return pairs;
}

}  // namespace ensmetric

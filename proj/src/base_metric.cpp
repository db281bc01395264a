#include "ensmetric/base_metric.hpp"

#include <algorithm>
#include <sstream>

#include "detail/linalg.hpp"
#include "ensmetric/errors.hpp"

namespace ensmetric {
namespace {

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

IdList stack_ids(const IdList& top, const IdList& bottom) {
  IdList out = top;
  out.insert(out.end(), bottom.begin(), bottom.end());
  return out;
}

}  // namespace

void BaseMetric::check_dimension(Eigen::Index cols) const {
  if (static_cast<std::size_t>(cols) != input_dimension()) {
    std::ostringstream msg;
    msg << "metric '" << feature_name_ << "': expected " << input_dimension()
        << "-dim descriptors, got " << cols;
    throw InvalidInput(msg.str());
  }
}

double BaseMetric::distance(const Eigen::Ref<const Vector>& a,
                            const Eigen::Ref<const Vector>& b) const {
  if (b.size() != a.size()) throw InvalidInput("metric: descriptor lengths differ");
  Matrix rows(2, a.size());
  rows.row(0) = a.transpose();
  rows.row(1) = b.transpose();
  const Matrix z = embed(rows);
  return (z.row(0) - z.row(1)).squaredNorm();
}

Matrix BaseMetric::pairwise(const Matrix& probes, const Matrix& gallery) const {
  const Matrix zp = embed(probes);
  const Matrix zg = embed(gallery);
  Matrix d(zp.rows(), zg.rows());
  for (Eigen::Index i = 0; i < zp.rows(); ++i) {
    d.row(i) = (zg.rowwise() - zp.row(i)).rowwise().squaredNorm().transpose();
  }
  return d;
}

MahalanobisMetric::MahalanobisMetric(std::string feature_name, Matrix M,
                                     std::optional<PcaProjection> pca)
    : BaseMetric(std::move(feature_name)), m_(std::move(M)), pca_(std::move(pca)) {
  if (m_.rows() != m_.cols() || m_.rows() < 1) throw InvalidInput("mahalanobis: M must be square");
  if (!m_.allFinite()) throw InvalidInput("mahalanobis: M has non-finite entries");
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidInput("mahalanobis: M is not symmetric");
  }
  if (pca_ && pca_->output_dimension() != static_cast<std::size_t>(m_.rows())) {
    throw InvalidInput("mahalanobis: PCA output dimension does not match M");
  }
  const auto eig = detail::sorted_symmetric_eigen(m_);
  const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  if (eig.values[eig.values.size() - 1] < -1e-10 * scale) {
    throw InvalidInput("mahalanobis: M is not positive semi-definite");
  }
  factor_ = eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.vectors.transpose();
}

std::size_t MahalanobisMetric::input_dimension() const noexcept {
  return pca_ ? pca_->input_dimension() : static_cast<std::size_t>(m_.rows());
}

Matrix MahalanobisMetric::embed(const Matrix& rows) const {
  check_dimension(rows.cols());
  if (pca_) return pca_->apply(rows) * factor_.transpose();
  return rows * factor_.transpose();
}

KernelProjectionMetric::KernelProjectionMetric(std::string feature_name, KlfdaModel model,
                                               std::optional<NystromMap> nystrom)
    : BaseMetric(std::move(feature_name)), model_(std::move(model)), nystrom_(std::move(nystrom)) {
  if (nystrom_ && nystrom_->rank() != model_.input_dimension()) {
    throw InvalidInput("kernel metric: Nystrom rank does not match the kLFDA input dimension");
  }
}

std::size_t KernelProjectionMetric::input_dimension() const noexcept {
  return nystrom_ ? nystrom_->input_dimension() : model_.input_dimension();
}

Matrix KernelProjectionMetric::embed(const Matrix& rows) const {
  check_dimension(rows.cols());
  if (nystrom_) return model_.project(nystrom_->embed_rows(rows));
  return model_.project(rows);
}

MetricPtr fit_kissme_metric(const ChannelPair& train, const KissmeFitOptions& options) {
  const auto& a = train.view_a;
  const auto& b = train.view_b;
  if (a.dimension() != b.dimension()) throw InvalidInput("kissme: views differ in dimension");
  const PairList pairs = matched_pairs(a, b);
  if (pairs.size() < 3) throw InvalidInput("kissme: need at least three training identities");
  const std::size_t dim =
      std::min({options.pca_dim, a.dimension(), pairs.size() - 1});
  if (dim < 1) throw InvalidInput("kissme: PCA dimension must be >= 1");
  auto pca = fit_pca(stack_rows(a.descriptors(), b.descriptors()), dim);
  const auto model =
      fit_kissme(pca.apply(a.descriptors()), pca.apply(b.descriptors()), pairs, options.kissme);
  return std::make_shared<MahalanobisMetric>(a.feature_name(), model.M, std::move(pca));
}

MetricPtr fit_klfda_metric(const ChannelPair& train, const KlfdaFitOptions& options) {
  const auto& a = train.view_a;
  const auto& b = train.view_b;
  if (a.dimension() != b.dimension()) throw InvalidInput("klfda: views differ in dimension");
  const Matrix x = stack_rows(a.descriptors(), b.descriptors());
  const IdList labels = stack_ids(a.identities(), b.identities());

  KernelSpec kernel{options.kernel, options.sigma2};
  if (kernel.kind != KernelKind::Linear && !(kernel.sigma2 > 0.0)) {
    kernel.sigma2 = select_sigma2(x, kernel.kind);
  }

  KlfdaOptions klfda;
  klfda.beta = options.beta;
  klfda.dimension = options.dimension;
  klfda.neighbours = options.neighbours;
  if (!options.nystrom) {
    klfda.kernel = kernel;
    return std::make_shared<KernelProjectionMetric>(a.feature_name(),
                                                    KlfdaModel::fit(x, labels, klfda));
  }

  const auto n = static_cast<std::size_t>(x.rows());
  const std::size_t samples = std::min(options.nystrom_samples, n);
  const std::size_t rank =
      options.nystrom_rank == 0 ? samples : std::min(options.nystrom_rank, samples);
  auto map = fit_nystrom(x, samples, rank, kernel, options.seed);
  const Matrix z = map.embed_rows(x);
  klfda.kernel = KernelSpec{KernelKind::Linear, 1.0};
  return std::make_shared<KernelProjectionMetric>(
      a.feature_name(), KlfdaModel::fit(z, labels, klfda), std::move(map));
}

}  // namespace ensmetric

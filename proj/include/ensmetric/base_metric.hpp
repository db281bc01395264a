#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ensmetric/kissme.hpp"
#include "ensmetric/klfda.hpp"
#include "ensmetric/nystrom.hpp"
#include "ensmetric/pca.hpp"
#include "ensmetric/types.hpp"

namespace ensmetric {

enum class MetricKind { Mahalanobis, KernelProjection };

/// A learned per-channel distance d_t. Every concrete metric is a squared
/// Euclidean distance after a fixed feature map, so d(a, a) = 0, d >= 0 and
/// d is symmetric exactly.
class BaseMetric {
 public:
  explicit BaseMetric(std::string feature_name) : feature_name_(std::move(feature_name)) {}
  virtual ~BaseMetric() = default;

  virtual MetricKind kind() const noexcept = 0;
  virtual std::size_t input_dimension() const noexcept = 0;

  /// Feature map applied to every row of `rows`.
  virtual Matrix embed(const Matrix& rows) const = 0;

  const std::string& feature_name() const noexcept { return feature_name_; }

  double distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const;

  /// probes.rows() x gallery.rows() matrix of distances.
  Matrix pairwise(const Matrix& probes, const Matrix& gallery) const;

 protected:
  void check_dimension(Eigen::Index cols) const;

 private:
  std::string feature_name_;
};

using MetricPtr = std::shared_ptr<const BaseMetric>;

/// (a - b)^T M (a - b), optionally after a PCA projection.
class MahalanobisMetric final : public BaseMetric {
 public:
  /// M must be symmetric (1e-10) and PSD (min eigenvalue >= -1e-10, relative to
  /// the largest magnitude when that exceeds 1); throws
  /// InvalidInput otherwise. Negative rounding-level eigenvalues are clipped.
  MahalanobisMetric(std::string feature_name, Matrix M, std::optional<PcaProjection> pca = {});

  MetricKind kind() const noexcept override { return MetricKind::Mahalanobis; }
  std::size_t input_dimension() const noexcept override;
  Matrix embed(const Matrix& rows) const override;

  const Matrix& M() const noexcept { return m_; }
  const std::optional<PcaProjection>& pca() const noexcept { return pca_; }

 private:
  Matrix m_;
  Matrix factor_;
  std::optional<PcaProjection> pca_;
};

/// Squared distance between kLFDA projections, optionally of Nystrom embeddings.
class KernelProjectionMetric final : public BaseMetric {
 public:
  KernelProjectionMetric(std::string feature_name, KlfdaModel model,
                         std::optional<NystromMap> nystrom = {});

  MetricKind kind() const noexcept override { return MetricKind::KernelProjection; }
  std::size_t input_dimension() const noexcept override;
  Matrix embed(const Matrix& rows) const override;

  const KlfdaModel& model() const noexcept { return model_; }
  const std::optional<NystromMap>& nystrom() const noexcept { return nystrom_; }

 private:
  KlfdaModel model_;
  std::optional<NystromMap> nystrom_;
};

// Fitting helpers used by the training pipeline. `train` holds the same
// identities in both views.

struct KissmeFitOptions {
  std::size_t pca_dim = 64;  // clamped to min(D, m - 1) so covariances are estimable
  KissmeOptions kissme;
};

/// PCA on both views stacked, then KISSME on the projected matched pairs.
MetricPtr fit_kissme_metric(const ChannelPair& train, const KissmeFitOptions& options);

struct KlfdaFitOptions {
  KernelKind kernel = KernelKind::RbfChi2;
  double sigma2 = 0.0;  // <= 0 selects the first-quartile heuristic
  double beta = 0.01;
  std::size_t dimension = 0;
  std::size_t neighbours = 7;
  bool nystrom = false;
  std::size_t nystrom_samples = 300;  // clamped to the sample count
  std::size_t nystrom_rank = 0;       // 0 = nystrom_samples
  std::uint64_t seed = 0;
};

/// kLFDA on both views stacked (labels = identities). With `nystrom` set, the
/// data are first embedded by a Nystrom map and kLFDA uses a linear kernel.
MetricPtr fit_klfda_metric(const ChannelPair& train, const KlfdaFitOptions& options);

}  // namespace ensmetric

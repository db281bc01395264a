#include "ensmetric/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "ensmetric/errors.hpp"

namespace ensmetric {
namespace {

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n01(rng);
  }
  return m;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double top = x.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (x.row(r).array() - top).exp().matrix();
    out.row(r) = e / e.sum();
  }
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (identities < 4) throw InvalidInput("synthetic: need at least 4 identities");
  if (dims.empty()) throw InvalidInput("synthetic: need at least one channel");
  if (informativeness.size() != dims.size()) {
    throw InvalidInput("synthetic: one informativeness value per channel required");
  }
  if (!names.empty() && names.size() != dims.size()) {
    throw InvalidInput("synthetic: one name per channel required");
  }
  for (auto d : dims) {
    if (d < 1) throw InvalidInput("synthetic: channel dimension must be >= 1");
  }
  if (latent_dim < 1) throw InvalidInput("synthetic: latent dimension must be >= 1");
  if (!(noise >= 0.0)) throw InvalidInput("synthetic: noise must be non-negative");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto m = static_cast<Eigen::Index>(spec.identities);
  const auto latent_dim = static_cast<Eigen::Index>(spec.latent_dim);

  IdList ids;
  ids.reserve(spec.identities);
  for (std::size_t i = 0; i < spec.identities; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "id%05zu", i);
    ids.emplace_back(buf);
  }

  const Matrix latent = gaussian(rng, m, latent_dim);
  Dataset data;
  for (std::size_t t = 0; t < spec.dims.size(); ++t) {
    const auto d = static_cast<Eigen::Index>(spec.dims[t]);
    const Matrix projection = gaussian(rng, latent_dim, d) / std::sqrt(static_cast<double>(latent_dim));
    const double inf = spec.informativeness[t];
    Matrix views[2];
    for (auto& raw : views) {
      const Matrix perturb = gaussian(rng, m, d);
      const Matrix noise = gaussian(rng, m, d);
      if (inf > 0.0) {
        raw = latent * projection;
        if (std::isfinite(inf)) raw += perturb / inf;
      } else {
        raw = perturb;
      }
      raw += spec.noise * noise;
    }
    const std::string name = spec.names.empty() ? "ch" + std::to_string(t) : spec.names[t];
    data.channels.push_back({DescriptorSet(name, "a", ids, softmax_rows(views[0])),
                             DescriptorSet(name, "b", ids, softmax_rows(views[1]))});
  }
  return data;
}

}  // namespace ensmetric

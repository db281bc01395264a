#include "ensmetric/model_io.hpp"

#include "ensmetric/errors.hpp"

namespace ensmetric {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
      throw DataError("matrix payload has the wrong number of values");
    }
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed matrix: ") + e.what());
  }
}

json vector_to_json(const Vector& v) {
  json data = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v[i]);
  return data;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw DataError("malformed vector: expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

namespace {

json kernel_to_json(const KernelSpec& k) {
  return json{{"kind", to_string(k.kind)}, {"sigma2", k.sigma2}};
}

KernelSpec kernel_from_json(const json& j) {
  try {
    return KernelSpec{parse_kernel_kind(j.at("kind").get<std::string>()),
                      j.at("sigma2").get<double>()};
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
}

}  // namespace

json metric_to_json(const BaseMetric& metric) {
  json j;
  j["feature"] = metric.feature_name();
  if (const auto* maha = dynamic_cast<const MahalanobisMetric*>(&metric)) {
    j["kind"] = "mahalanobis";
    j["M"] = matrix_to_json(maha->M());
    if (maha->pca()) {
      j["pca"] = json{{"mean", vector_to_json(maha->pca()->mean)},
                      {"basis", matrix_to_json(maha->pca()->basis)},
                      {"variances", vector_to_json(maha->pca()->variances)}};
    }
    return j;
  }
  if (const auto* kp = dynamic_cast<const KernelProjectionMetric*>(&metric)) {
    j["kind"] = "kernel-projection";
    const auto& model = kp->model();
    j["klfda"] = json{{"alpha", matrix_to_json(model.alpha())},
                      {"anchors", matrix_to_json(model.anchors())},
                      {"kernel", kernel_to_json(model.kernel())},
                      {"beta", model.beta()},
                      {"eigenvalues", vector_to_json(model.eigenvalues())}};
    if (kp->nystrom()) {
      const auto& map = *kp->nystrom();
      j["nystrom"] = json{{"anchors", matrix_to_json(map.anchors())},
                          {"eigenvalues", vector_to_json(map.eigenvalues())},
                          {"eigenvectors", matrix_to_json(map.eigenvectors())},
                          {"kernel", kernel_to_json(map.kernel())}};
    }
    return j;
  }
  throw DataError("metric_to_json: unsupported metric type");
}

MetricPtr metric_from_json(const json& j) {
  try {
    const auto feature = j.at("feature").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "mahalanobis") {
      std::optional<PcaProjection> pca;
      if (j.contains("pca")) {
        const auto& p = j.at("pca");
        pca = PcaProjection{vector_from_json(p.at("mean")), matrix_from_json(p.at("basis")),
                            vector_from_json(p.at("variances"))};
      }
      return std::make_shared<MahalanobisMetric>(feature, matrix_from_json(j.at("M")),
                                                 std::move(pca));
    }
    if (kind == "kernel-projection") {
      const auto& k = j.at("klfda");
      auto model = KlfdaModel::from_parts(matrix_from_json(k.at("alpha")),
                                          matrix_from_json(k.at("anchors")),
                                          kernel_from_json(k.at("kernel")),
                                          k.at("beta").get<double>(),
                                          vector_from_json(k.at("eigenvalues")));
      std::optional<NystromMap> map;
      if (j.contains("nystrom")) {
        const auto& n = j.at("nystrom");
        map = NystromMap(matrix_from_json(n.at("anchors")), vector_from_json(n.at("eigenvalues")),
                         matrix_from_json(n.at("eigenvectors")), kernel_from_json(n.at("kernel")));
      }
      return std::make_shared<KernelProjectionMetric>(feature, std::move(model), std::move(map));
    }
    throw DataError("unknown metric kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed metric: ") + e.what());
  } catch (const InvalidInput& e) {
    throw DataError(std::string("inconsistent metric: ") + e.what());
  }
}

json weights_to_json(const WeightVector& w) {
  return json{{"w", vector_to_json(w.w)}, {"xi", w.xi}, {"objective", w.objective}};
}

WeightVector weights_from_json(const json& j) {
  try {
    WeightVector w;
    w.w = vector_from_json(j.at("w"));
    w.xi = j.at("xi").get<double>();
    w.objective = j.at("objective").get<double>();
    return w;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed weights: ") + e.what());
  }
}

}  // namespace ensmetric

#pragma once

#include <json.hpp>

#include "ensmetric/base_metric.hpp"
#include "ensmetric/inner_qp.hpp"
#include "ensmetric/types.hpp"

namespace ensmetric {

// JSON encodings used by model bundles. Doubles are written with round-trip
// precision, so decode(encode(x)) reproduces x bit for bit.

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

nlohmann::json metric_to_json(const BaseMetric& metric);
/// Throws DataError on an unknown metric kind or malformed payload.
MetricPtr metric_from_json(const nlohmann::json& j);

nlohmann::json weights_to_json(const WeightVector& w);
WeightVector weights_from_json(const nlohmann::json& j);

}  // namespace ensmetric

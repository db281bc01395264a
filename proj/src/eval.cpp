#include "ensmetric/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ensmetric/errors.hpp"

namespace ensmetric {
namespace {

void check_channels(const std::vector<MetricPtr>& metrics, const std::vector<DescriptorSet>& sets,
                    const char* what) {
  if (sets.size() != metrics.size()) {
    std::ostringstream msg;
    msg << what << ": " << sets.size() << " channels but " << metrics.size() << " metrics";
    throw InvalidInput(msg.str());
  }
  for (std::size_t t = 0; t < sets.size(); ++t) {
    if (sets[t].feature_name() != metrics[t]->feature_name()) {
      throw InvalidInput(std::string(what) + ": channel '" + sets[t].feature_name() +
                         "' does not match metric '" + metrics[t]->feature_name() + "'");
    }
    if (t > 0 && sets[t].identities() != sets[0].identities()) {
      throw InvalidInput(std::string(what) + ": channel '" + sets[t].feature_name() +
                         "' lists identities in a different order");
    }
  }
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

RankingResult rank_from_distances(const std::string& probe_id, const IdList& gallery_ids,
                                  const Vector& combined) {
  std::vector<std::size_t> order(gallery_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = combined[static_cast<Eigen::Index>(a)];
    const double db = combined[static_cast<Eigen::Index>(b)];
    if (da != db) return da < db;
    return gallery_ids[a] < gallery_ids[b];
  });
  RankingResult result;
  result.probe_id = probe_id;
  result.true_rank = 0;
  result.gallery_order.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    result.gallery_order.push_back(gallery_ids[order[r]]);
    if (gallery_ids[order[r]] == probe_id) result.true_rank = r + 1;
  }
  if (result.true_rank == 0) {
    throw InvalidInput("probe '" + probe_id + "' has no true match in the gallery");
  }
  return result;
}

}  // namespace

Vector normalize_probe_distances(const Eigen::Ref<const Vector>& distances) {
  if (distances.size() == 0) throw InvalidInput("normalize: empty gallery");
  if (!distances.allFinite()) throw InvalidInput("normalize: non-finite distance");
  const double lo = distances.minCoeff();
  const double hi = distances.maxCoeff();
  if (hi == lo) return Vector::Zero(distances.size());
  return (distances.array() - lo) / (hi - lo);
}

double CmcCurve::at(std::size_t rank) const {
  if (rank < 1 || rank > recognition_rate.size()) throw InvalidInput("CMC rank out of range");
  return recognition_rate[rank - 1];
}

CmcCurve cmc_curve(const std::vector<RankingResult>& results) {
  if (results.empty()) throw InvalidInput("cmc_curve: no ranking results");
  const std::size_t n = results.front().gallery_order.size();
  std::vector<std::size_t> hits(n + 1, 0);
  for (const auto& r : results) {
    if (r.gallery_order.size() != n) throw InvalidInput("cmc_curve: mixed gallery sizes");
    if (r.true_rank < 1 || r.true_rank > n) throw InvalidInput("cmc_curve: true rank out of range");
    ++hits[r.true_rank];
  }
  CmcCurve curve;
  curve.recognition_rate.resize(n);
  std::size_t cumulative = 0;
  for (std::size_t rank = 1; rank <= n; ++rank) {
    cumulative += hits[rank];
    curve.recognition_rate[rank - 1] =
        static_cast<double>(cumulative) / static_cast<double>(results.size());
  }
  return curve;
}

double mean_reciprocal_rank(const std::vector<RankingResult>& results) {
  if (results.empty()) throw InvalidInput("mean_reciprocal_rank: no ranking results");
  double sum = 0.0;
  for (const auto& r : results) {
    if (r.true_rank < 1) throw InvalidInput("mean_reciprocal_rank: true rank must be >= 1");
    sum += 1.0 / static_cast<double>(r.true_rank);
  }
  return sum / static_cast<double>(results.size());
}

std::vector<Matrix> channel_distances(const std::vector<MetricPtr>& metrics,
                                      const std::vector<DescriptorSet>& probes,
                                      const std::vector<DescriptorSet>& gallery) {
  check_channels(metrics, probes, "probes");
  check_channels(metrics, gallery, "gallery");
  std::vector<Matrix> out;
  out.reserve(metrics.size());
  for (std::size_t t = 0; t < metrics.size(); ++t) {
    Matrix d = metrics[t]->pairwise(probes[t].descriptors(), gallery[t].descriptors());
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      d.row(i) = normalize_probe_distances(d.row(i).transpose()).transpose();
    }
    out.push_back(std::move(d));
  }
  return out;
}

RankingResult rank_gallery(const WeightVector& w, const std::vector<MetricPtr>& metrics,
                           const std::string& probe_id, const std::vector<Vector>& probe,
                           const std::vector<DescriptorSet>& gallery) {
  if (probe.size() != metrics.size()) throw InvalidInput("rank_gallery: probe channel mismatch");
  if (w.size() != metrics.size()) throw InvalidInput("rank_gallery: weight count mismatch");
  check_channels(metrics, gallery, "gallery");
  Vector combined = Vector::Zero(static_cast<Eigen::Index>(gallery.front().size()));
  for (std::size_t t = 0; t < metrics.size(); ++t) {
    const Matrix d = metrics[t]->pairwise(probe[t].transpose(), gallery[t].descriptors());
    combined += w.w[static_cast<Eigen::Index>(t)] *
                normalize_probe_distances(d.row(0).transpose());
  }
  return rank_from_distances(probe_id, gallery.front().identities(), combined);
}

std::vector<RankingResult> rank_all(const WeightVector& w, const std::vector<MetricPtr>& metrics,
                                    const std::vector<DescriptorSet>& probes,
                                    const std::vector<DescriptorSet>& gallery) {
  if (w.size() != metrics.size()) throw InvalidInput("rank_all: weight count mismatch");
  const auto dists = channel_distances(metrics, probes, gallery);
  const IdList& probe_ids = probes.front().identities();
  const IdList& gallery_ids = gallery.front().identities();
  std::vector<RankingResult> results;
  results.reserve(probe_ids.size());
  for (std::size_t i = 0; i < probe_ids.size(); ++i) {
    Vector combined = Vector::Zero(static_cast<Eigen::Index>(gallery_ids.size()));
    for (std::size_t t = 0; t < metrics.size(); ++t) {
      combined += w.w[static_cast<Eigen::Index>(t)] *
                  dists[t].row(static_cast<Eigen::Index>(i)).transpose();
    }
    results.push_back(rank_from_distances(probe_ids[i], gallery_ids, combined));
  }
  return results;
}

TripletDistanceTable build_triplet_table(const std::vector<MetricPtr>& metrics,
                                         const std::vector<DescriptorSet>& probes,
                                         const std::vector<DescriptorSet>& gallery) {
  if (metrics.empty()) throw InvalidInput("triplet table: no base metrics");
  const auto dists = channel_distances(metrics, probes, gallery);
  const IdList& probe_ids = probes.front().identities();
  const IdList& gallery_ids = gallery.front().identities();
  const auto m = probe_ids.size();
  const auto t_count = static_cast<Eigen::Index>(metrics.size());

  Matrix d_plus(static_cast<Eigen::Index>(m), t_count);
  std::vector<Matrix> d_minus;
  std::vector<IdList> candidates;
  d_minus.reserve(m);
  candidates.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<Eigen::Index> wrong;
    Eigen::Index match = -1;
    for (std::size_t g = 0; g < gallery_ids.size(); ++g) {
      if (gallery_ids[g] == probe_ids[i]) match = static_cast<Eigen::Index>(g);
      else wrong.push_back(static_cast<Eigen::Index>(g));
    }
    if (match < 0) throw InvalidInput("triplet table: probe '" + probe_ids[i] + "' has no match");
    Matrix block(static_cast<Eigen::Index>(wrong.size()), t_count);
    IdList ids;
    ids.reserve(wrong.size());
    for (std::size_t j = 0; j < wrong.size(); ++j) ids.push_back(gallery_ids[static_cast<std::size_t>(wrong[j])]);
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const Matrix& d = dists[static_cast<std::size_t>(t)];
      d_plus(static_cast<Eigen::Index>(i), t) = d(static_cast<Eigen::Index>(i), match);
      for (std::size_t j = 0; j < wrong.size(); ++j) {
        block(static_cast<Eigen::Index>(j), t) = d(static_cast<Eigen::Index>(i), wrong[j]);
      }
    }
    d_minus.push_back(std::move(block));
    candidates.push_back(std::move(ids));
  }
  return TripletDistanceTable(probe_ids, std::move(d_plus), std::move(d_minus),
                              std::move(candidates));
}

CmcSummary summarize(std::vector<CmcCurve> curves, std::vector<double> mrr) {
  if (curves.empty()) throw InvalidInput("summarize: no curves");
  if (mrr.size() != curves.size()) throw InvalidInput("summarize: one MRR per curve required");
  const std::size_t n = curves.front().recognition_rate.size();
  for (const auto& c : curves) {
    if (c.recognition_rate.size() != n) throw InvalidInput("summarize: curves differ in length");
  }
  CmcSummary s;
  s.mean.resize(n);
  s.stddev.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> col;
    col.reserve(curves.size());
    for (const auto& c : curves) col.push_back(c.recognition_rate[r]);
    s.mean[r] = mean_of(col);
    s.stddev[r] = stddev_of(col);
  }
  s.mrr_mean = mean_of(mrr);
  s.mrr_stddev = stddev_of(mrr);
  s.repeats = std::move(curves);
  s.mrr = std::move(mrr);
  return s;
}

void write_cmc_table(std::ostream& out, const CmcSummary& summary) {
  out << "rank";
  for (std::size_t r = 0; r < summary.repeats.size(); ++r) out << "\trepeat_" << r + 1;
  out << "\tmean\tstd\n";
  out << std::setprecision(17);
  for (std::size_t rank = 1; rank <= summary.mean.size(); ++rank) {
    out << rank;
    for (const auto& c : summary.repeats) out << '\t' << c.recognition_rate[rank - 1];
    out << '\t' << summary.mean[rank - 1] << '\t' << summary.stddev[rank - 1] << '\n';
  }
}

void write_rank_summary(std::ostream& out, const CmcSummary& summary) {
  out << "measure";
  for (std::size_t r = 0; r < summary.repeats.size(); ++r) out << "\trepeat_" << r + 1;
  out << "\tmean\tstd\n";
  out << std::setprecision(17);
  for (std::size_t rank : kReportRanks) {
    if (rank > summary.mean.size()) break;
    out << "rank-" << rank;
    for (const auto& c : summary.repeats) out << '\t' << c.recognition_rate[rank - 1];
    out << '\t' << summary.mean[rank - 1] << '\t' << summary.stddev[rank - 1] << '\n';
  }
  out << "mrr";
  for (double v : summary.mrr) out << '\t' << v;
  out << '\t' << summary.mrr_mean << '\t' << summary.mrr_stddev << '\n';
}

}  // namespace ensmetric

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ensmetric/base_metric.hpp"
#include "ensmetric/types.hpp"

namespace ensmetric {

/// Affine rescaling of one probe's gallery distances onto [0, 1]
/// (nearest -> 0, farthest -> 1). A constant vector maps to all zeros.
/// Throws InvalidInput on an empty or non-finite input.
Vector normalize_probe_distances(const Eigen::Ref<const Vector>& distances);

struct RankingResult {
  std::string probe_id;
  IdList gallery_order;   // ascending ensemble distance, ties by id
  std::size_t true_rank;  // 1-based rank of the probe's own identity
};

struct CmcCurve {
  std::vector<double> recognition_rate;  // entry r-1 = CMC(r)
  std::size_t repeats = 1;

  double at(std::size_t rank) const;  // CMC(rank), 1-based
};

/// Throws InvalidInput on an empty list or mixed gallery sizes.
CmcCurve cmc_curve(const std::vector<RankingResult>& results);
double mean_reciprocal_rank(const std::vector<RankingResult>& results);

/// Per-channel, per-probe normalised distances: one probes x gallery matrix
/// per metric. Channels must list the same identities in the same order.
std::vector<Matrix> channel_distances(const std::vector<MetricPtr>& metrics,
                                      const std::vector<DescriptorSet>& probes,
                                      const std::vector<DescriptorSet>& gallery);

/// Ranks one probe (one descriptor per channel) against the gallery.
RankingResult rank_gallery(const WeightVector& w, const std::vector<MetricPtr>& metrics,
                           const std::string& probe_id, const std::vector<Vector>& probe,
                           const std::vector<DescriptorSet>& gallery);

/// rank_gallery for every probe row, sharing the gallery embeddings.
std::vector<RankingResult> rank_all(const WeightVector& w, const std::vector<MetricPtr>& metrics,
                                    const std::vector<DescriptorSet>& probes,
                                    const std::vector<DescriptorSet>& gallery);

/// Triplet table over the training identities: probe i in `probes`, its true
/// match and every other identity in `gallery`, distances normalised per
/// probe and channel.
TripletDistanceTable build_triplet_table(const std::vector<MetricPtr>& metrics,
                                         const std::vector<DescriptorSet>& probes,
                                         const std::vector<DescriptorSet>& gallery);

/// Mean and sample standard deviation of several curves of equal length.
struct CmcSummary {
  std::vector<CmcCurve> repeats;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> mrr;  // per repeat
  double mrr_mean = 0.0;
  double mrr_stddev = 0.0;
};

CmcSummary summarize(std::vector<CmcCurve> curves, std::vector<double> mrr);

/// Rank grid reported in summary tables.
inline const std::vector<std::size_t> kReportRanks{1, 2, 5, 10, 20, 50, 100};

/// rank <TAB> repeat_1 ... repeat_R <TAB> mean <TAB> std, one line per rank.
void write_cmc_table(std::ostream& out, const CmcSummary& summary);
/// Rows of kReportRanks that fit the gallery, plus an MRR row.
void write_rank_summary(std::ostream& out, const CmcSummary& summary);

}  // namespace ensmetric

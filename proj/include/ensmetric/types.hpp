#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ensmetric {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IdList = std::vector<std::string>;

/// Descriptors of one feature channel seen from one camera view.
/// Row i belongs to identities()[i]; that row order is canonical for every
/// matrix derived from this set.
class DescriptorSet {
 public:
  DescriptorSet() = default;

  /// Validates shape (rows == ids, dim >= 1) and finiteness; throws DataError.
  DescriptorSet(std::string feature_name, std::string view, IdList identities,
                Matrix descriptors);

  const std::string& feature_name() const noexcept { return feature_name_; }
  const std::string& view() const noexcept { return view_; }
  const IdList& identities() const noexcept { return identities_; }
  const Matrix& descriptors() const noexcept { return descriptors_; }

  std::size_t size() const noexcept { return identities_.size(); }
  std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(descriptors_.cols());
  }

  /// Row index of `id`; throws InvalidInput if absent.
  std::size_t index_of(const std::string& id) const;

  /// Rows for `ids`, in that order. Throws InvalidInput on unknown ids.
  DescriptorSet subset(const IdList& ids) const;

 private:
  std::string feature_name_;
  std::string view_;
  IdList identities_;
  Matrix descriptors_;
};

/// Per-channel descriptors of the same identities in two views.
struct ChannelPair {
  DescriptorSet view_a;
  DescriptorSet view_b;
};

/// Base-metric distances for every training triplet.
///
/// For probe i: d_plus.row(i) holds the T base distances to its true match and
/// d_minus(i) is an m' x T block whose row j holds the distances to the j-th
/// wrong candidate (candidate_ids(i)[j]).
class TripletDistanceTable {
 public:
  TripletDistanceTable() = default;

  /// Throws InvalidInput on shape mismatch, negative or non-finite entries,
  /// or a candidate id equal to its probe id.
  TripletDistanceTable(IdList probe_ids, Matrix d_plus, std::vector<Matrix> d_minus,
                       std::vector<IdList> candidate_ids);

  std::size_t m() const noexcept { return probe_ids_.size(); }
  std::size_t m_prime() const noexcept { return m_prime_; }
  std::size_t T() const noexcept { return static_cast<std::size_t>(d_plus_.cols()); }

  const IdList& probe_ids() const noexcept { return probe_ids_; }
  const Matrix& d_plus() const noexcept { return d_plus_; }
  const Matrix& d_minus(std::size_t i) const { return d_minus_.at(i); }
  const IdList& candidate_ids(std::size_t i) const { return candidate_ids_.at(i); }

  /// m' x T block of d_{i,j}^- - d_i^+.
  const Matrix& margins(std::size_t i) const { return margins_.at(i); }

  /// Same table with every distance multiplied by `alpha` > 0.
  TripletDistanceTable scaled(double alpha) const;

 private:
  IdList probe_ids_;
  std::size_t m_prime_ = 0;
  Matrix d_plus_;
  std::vector<Matrix> d_minus_;
  std::vector<Matrix> margins_;
  std::vector<IdList> candidate_ids_;
};

using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Binary ordering matrix P over (probe, rank position).
///
/// entries(i, pos) = 0 when the true match of probe i is ranked above the
/// candidate sitting at position pos. position_to_candidate[i][pos] gives the
/// column of that candidate in the triplet table; positions 0..k-1 are the
/// top-k.
struct OrderingMatrix {
  BinaryMatrix entries;
  std::vector<std::vector<std::size_t>> position_to_candidate;
  std::size_t k = 1;

  std::size_t m() const noexcept { return static_cast<std::size_t>(entries.rows()); }
  std::size_t m_prime() const noexcept { return static_cast<std::size_t>(entries.cols()); }

  /// P* (all zeros) with identity position assignment.
  static OrderingMatrix reference(std::size_t m, std::size_t m_prime, std::size_t k);

  /// entries re-indexed by candidate column instead of rank position.
  BinaryMatrix by_candidate() const;
};

/// Non-negative ensemble weights with the slack and objective of the QP that
/// produced them.
struct WeightVector {
  Vector w;
  double xi = 0.0;
  double objective = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(w.size()); }
};

/// sum_t w_t d_t. Throws InvalidInput on length mismatch or non-finite input.
double weighted_distance(const WeightVector& w, const Eigen::Ref<const Vector>& d);

}  // namespace ensmetric

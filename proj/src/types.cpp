#include "ensmetric/types.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include "ensmetric/errors.hpp"

namespace ensmetric {

DescriptorSet::DescriptorSet(std::string feature_name, std::string view, IdList identities,
                             Matrix descriptors)
    : feature_name_(std::move(feature_name)),
      view_(std::move(view)),
      identities_(std::move(identities)),
      descriptors_(std::move(descriptors)) {
  if (static_cast<std::size_t>(descriptors_.rows()) != identities_.size()) {
    std::ostringstream msg;
    msg << "descriptor set '" << feature_name_ << "/" << view_ << "': " << descriptors_.rows()
        << " rows but " << identities_.size() << " identities";
    throw DataError(msg.str());
  }
  if (descriptors_.cols() < 1) {
    throw DataError("descriptor set '" + feature_name_ + "/" + view_ + "': dimension must be >= 1");
  }
  for (Eigen::Index r = 0; r < descriptors_.rows(); ++r) {
    if (!descriptors_.row(r).allFinite()) {
      std::ostringstream msg;
      msg << "descriptor set '" << feature_name_ << "/" << view_ << "': non-finite value in row "
          << r << " (identity " << identities_[static_cast<std::size_t>(r)] << ")";
      throw DataError(msg.str());
    }
  }
}

std::size_t DescriptorSet::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < identities_.size(); ++i) {
    if (identities_[i] == id) return i;
  }
  throw InvalidInput("identity '" + id + "' not in descriptor set '" + feature_name_ + "/" +
                     view_ + "'");
}

DescriptorSet DescriptorSet::subset(const IdList& ids) const {
  std::unordered_map<std::string, Eigen::Index> row_of;
  row_of.reserve(identities_.size());
  for (std::size_t i = 0; i < identities_.size(); ++i) {
    row_of.emplace(identities_[i], static_cast<Eigen::Index>(i));
  }
  Matrix rows(static_cast<Eigen::Index>(ids.size()), descriptors_.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = row_of.find(ids[i]);
    if (it == row_of.end()) {
      throw InvalidInput("identity '" + ids[i] + "' not in descriptor set '" + feature_name_ +
                         "/" + view_ + "'");
    }
    rows.row(static_cast<Eigen::Index>(i)) = descriptors_.row(it->second);
  }
  return DescriptorSet(feature_name_, view_, ids, std::move(rows));
}

TripletDistanceTable::TripletDistanceTable(IdList probe_ids, Matrix d_plus,
                                           std::vector<Matrix> d_minus,
                                           std::vector<IdList> candidate_ids)
    : probe_ids_(std::move(probe_ids)),
      d_plus_(std::move(d_plus)),
      d_minus_(std::move(d_minus)),
      candidate_ids_(std::move(candidate_ids)) {
  const std::size_t m = probe_ids_.size();
  if (m == 0) throw InvalidInput("triplet table needs at least one probe");
  if (static_cast<std::size_t>(d_plus_.rows()) != m || d_minus_.size() != m ||
      candidate_ids_.size() != m) {
    throw InvalidInput("triplet table: per-probe arrays disagree on probe count");
  }
  if (d_plus_.cols() < 1) throw InvalidInput("triplet table needs at least one base metric");
  m_prime_ = static_cast<std::size_t>(d_minus_.front().rows());
  if (m_prime_ == 0) throw InvalidInput("triplet table needs at least one wrong candidate");

  margins_.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Matrix& block = d_minus_[i];
    if (static_cast<std::size_t>(block.rows()) != m_prime_ || block.cols() != d_plus_.cols() ||
        candidate_ids_[i].size() != m_prime_) {
      throw InvalidInput("triplet table: probe " + probe_ids_[i] + " has a ragged candidate block");
    }
    if (!block.allFinite() || !d_plus_.row(static_cast<Eigen::Index>(i)).allFinite() ||
        (block.array() < 0.0).any() || (d_plus_.row(static_cast<Eigen::Index>(i)).array() < 0.0).any()) {
      throw InvalidInput("triplet table: probe " + probe_ids_[i] +
                         " has negative or non-finite distances");
    }
    for (const auto& cand : candidate_ids_[i]) {
      if (cand == probe_ids_[i]) {
        throw InvalidInput("triplet table: probe " + probe_ids_[i] + " lists itself as a wrong match");
      }
    }
    margins_.push_back(block.rowwise() - d_plus_.row(static_cast<Eigen::Index>(i)));
  }
}

TripletDistanceTable TripletDistanceTable::scaled(double alpha) const {
  if (!(alpha > 0.0)) throw InvalidInput("scale factor must be positive");
  std::vector<Matrix> d_minus;
  d_minus.reserve(d_minus_.size());
  for (const auto& block : d_minus_) d_minus.push_back(alpha * block);
  return TripletDistanceTable(probe_ids_, alpha * d_plus_, std::move(d_minus), candidate_ids_);
}

OrderingMatrix OrderingMatrix::reference(std::size_t m, std::size_t m_prime, std::size_t k) {
  OrderingMatrix p;
  p.entries = BinaryMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m_prime));
  p.position_to_candidate.assign(m, std::vector<std::size_t>(m_prime));
  for (auto& row : p.position_to_candidate) {
    for (std::size_t j = 0; j < m_prime; ++j) row[j] = j;
  }
  p.k = k;
  return p;
}

BinaryMatrix OrderingMatrix::by_candidate() const {
  BinaryMatrix out = BinaryMatrix::Zero(entries.rows(), entries.cols());
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    const auto& order = position_to_candidate[static_cast<std::size_t>(i)];
    for (Eigen::Index pos = 0; pos < entries.cols(); ++pos) {
      out(i, static_cast<Eigen::Index>(order[static_cast<std::size_t>(pos)])) = entries(i, pos);
    }
  }
  return out;
}

double weighted_distance(const WeightVector& w, const Eigen::Ref<const Vector>& d) {
  if (w.w.size() != d.size()) {
    std::ostringstream msg;
    msg << "weighted_distance: " << w.w.size() << " weights but " << d.size() << " distances";
    throw InvalidInput(msg.str());
  }
  if (!d.allFinite()) throw InvalidInput("weighted_distance: non-finite distance");
  return w.w.dot(d);
}

}  // namespace ensmetric

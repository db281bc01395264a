#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ensmetric/types.hpp"

namespace ensmetric {

/// All feature channels of a single-shot two-view dataset. Every descriptor
/// set lists the same identities in the same (canonical) order.
struct Dataset {
  std::vector<ChannelPair> channels;

  /// Canonical identity order (channel 0, view A).
  const IdList& identities() const;
  std::vector<std::string> channel_names() const;

  /// Restriction to `ids`, in that order.
  Dataset subset(const IdList& ids) const;

  std::vector<DescriptorSet> view_a() const;
  std::vector<DescriptorSet> view_b() const;

  /// Throws DataError when channels disagree on identities or order.
  void validate() const;
};

/// Reads a manifest and its matrix files (paths relative to the manifest's
/// directory). Rows are reordered to the canonical identity order.
/// Throws DataError naming the first offending identity, channel or row.
Dataset load_descriptors(const std::filesystem::path& manifest);

/// Writes `<dir>/manifest.txt` plus one little-endian float64 row-major file
/// per (channel, view).
void save_descriptors(const std::filesystem::path& dir, const Dataset& data);

}  // namespace ensmetric

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ensmetric/types.hpp"

namespace ensmetric {

struct SplitSpec {
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;

  /// Throws InvalidInput unless train + test <= population and repeats >= 1.
  void validate(std::size_t population) const;
};

struct Split {
  IdList train;
  IdList test;
};

/// `repeats` independent seeded draws of disjoint train/test identity sets.
/// Each side keeps the input order of `ids`.
std::vector<Split> make_splits(const IdList& ids, const SplitSpec& spec);

}  // namespace ensmetric

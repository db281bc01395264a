#include "ensmetric/splits.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "ensmetric/errors.hpp"
#include "ensmetric/nystrom.hpp"

namespace ensmetric {

void SplitSpec::validate(std::size_t population) const {
  if (repeats < 1) throw InvalidInput("split: repeats must be >= 1");
  if (train_count < 1 || test_count < 1) throw InvalidInput("split: counts must be >= 1");
  if (train_count + test_count > population) {
    std::ostringstream msg;
    msg << "split: " << train_count << " train + " << test_count << " test identities exceed the "
        << population << " available";
    throw InvalidInput(msg.str());
  }
}

std::vector<Split> make_splits(const IdList& ids, const SplitSpec& spec) {
  spec.validate(ids.size());
  std::mt19937_64 rng(spec.seed);
  std::vector<Split> splits;
  splits.reserve(spec.repeats);
  for (std::size_t r = 0; r < spec.repeats; ++r) {
    auto picked = sample_without_replacement(ids.size(), spec.train_count + spec.test_count, rng());
    std::vector<std::size_t> train(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(spec.train_count));
    std::vector<std::size_t> test(picked.begin() + static_cast<std::ptrdiff_t>(spec.train_count), picked.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    Split s;
    for (auto i : train) s.train.push_back(ids[i]);
    for (auto i : test) s.test.push_back(ids[i]);
    splits.push_back(std::move(s));
  }
  return splits;
}

}  // namespace ensmetric

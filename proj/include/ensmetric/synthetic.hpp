#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ensmetric/dataset.hpp"

namespace ensmetric {

/// Parameters of the synthetic two-view benchmark.
///
/// Each identity owns a latent vector. Channel t observes a fixed random
/// projection of it plus a per-view perturbation scaled by
/// 1 / informativeness[t] and isotropic noise, and the result is turned into a
/// histogram with a softmax. Informativeness <= 0 gives a channel that carries
/// no identity signal; +inf with zero noise gives identical views.
struct SyntheticSpec {
  std::size_t identities = 200;
  std::vector<std::size_t> dims{16, 16, 16};
  std::vector<double> informativeness{4.0, 3.0, 0.0};
  std::vector<std::string> names;  // defaults to ch0, ch1, ...
  double noise = 0.1;
  std::size_t latent_dim = 8;
  std::uint64_t seed = 0;

  /// Throws InvalidInput unless identities >= 4 and channels >= 1 with
  /// consistent per-channel lists.
  void validate() const;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace ensmetric

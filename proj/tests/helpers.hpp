// Small fixtures shared by the test executables.
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "ensmetric/types.hpp"

namespace testing_support {

using ensmetric::Matrix;

/// n x d matrix of random histograms (non-negative rows summing to 1).
inline Matrix random_histograms(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = g(rng);
    x.row(i) /= x.row(i).sum();
  }
  return x;
}

inline Matrix random_gaussian(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = g(rng);
  }
  return x;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ensmetric_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support

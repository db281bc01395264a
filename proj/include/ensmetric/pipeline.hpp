#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ensmetric/base_metric.hpp"
#include "ensmetric/cross_validation.hpp"
#include "ensmetric/dataset.hpp"
#include "ensmetric/ensemble.hpp"
#include "ensmetric/eval.hpp"
#include "ensmetric/splits.hpp"
#include "ensmetric/synthetic.hpp"

namespace ensmetric {

/// Everything a run depends on. Zero-valued "auto" fields are resolved from
/// the data at run time and the resolved values are logged per repeat.
struct RunConfig {
  // data
  std::string manifest;  // empty: generate `synthetic`
  SyntheticSpec synthetic;

  // base metrics; one entry per channel, or a single entry for all channels
  std::vector<std::string> metrics{"kissme"};  // kissme | klfda | klfda+nystrom
  std::size_t pca_dim = 64;
  double kissme_ridge = 0.0;  // <= 0: 1e-6 * trace / D per covariance
  std::string kernel = "rbf-chi2";
  double sigma2 = 0.0;  // <= 0: first-quartile heuristic per channel
  double klfda_beta = 0.01;
  std::size_t klfda_dim = 0;  // 0: min(n - 1, 40)
  std::size_t klfda_neighbours = 7;
  std::size_t nystrom_samples = 300;
  std::size_t nystrom_rank = 0;  // 0: nystrom_samples

  // ensemble
  std::string solver = "cmc-top";  // cmc-top | cmc-triplet
  double nu = 0.0;                 // > 0: fixed; otherwise cross-validated over nu_grid
  std::vector<double> nu_grid;     // empty: the solver's default grid
  std::size_t cv_folds = 3;
  std::size_t k = 0;  // 0: 10, or 30 with >= 400 training identities
  double epsilon = 1e-6;
  std::size_t max_iterations = 1000;
  double qp_tolerance = 1e-8;

  // protocol
  std::size_t train_count = 0;  // 0: half the identities (rounded up)
  std::size_t test_count = 0;   // 0: the remaining identities
  std::size_t repeats = 10;
  std::uint64_t seed = 0;

  std::string output = "run";
  std::size_t jobs = 1;

  /// Checks option values that do not depend on the data. Throws ConfigError.
  void validate() const;
  /// Metric choice for each of `channels` channels. Throws ConfigError when
  /// the per-channel list does not match.
  std::vector<std::string> channel_metrics(std::size_t channels) const;
  /// Cross-validation grid, or empty when nu is fixed.
  std::vector<double> effective_nu_grid() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// `key = value` lines, one per field, readable as a CLI config file.
  void write_text(std::ostream& out) const;
};

/// Loads the manifest, or generates the synthetic dataset.
Dataset load_dataset(const RunConfig& config);

/// Recall cutoff used for a training set of `train_identities`.
std::size_t resolve_k(const RunConfig& config, std::size_t train_identities);

std::vector<Split> resolve_splits(const RunConfig& config, const IdList& ids);

/// Base metrics for one training subset, one per channel.
std::vector<MetricPtr> fit_base_metrics(const RunConfig& config, const Dataset& train,
                                        std::uint64_t seed);

/// Ensemble fit with the configured solver.
EnsembleFit fit_ensemble(const RunConfig& config, const TripletDistanceTable& table, double nu,
                         std::size_t k);

struct RepeatModel {
  std::size_t repeat = 0;  // 1-based
  Split split;
  std::vector<MetricPtr> metrics;
  WeightVector weights;
  CuttingPlaneTrace trace;
  std::size_t k = 0;
  double nu = 0.0;
  std::vector<double> nu_grid;
  std::vector<double> cv_scores;
  /// Relative Frobenius error of each Nystrom-approximated training kernel
  /// (channels without a Nystrom map are omitted).
  std::vector<double> nystrom_errors;
};

/// One training repeat. Errors are rethrown with the stage name and repeat.
RepeatModel train_repeat(const RunConfig& config, const Dataset& data, const Split& split,
                         std::size_t repeat);

struct ModelBundle {
  RunConfig config;
  std::vector<std::string> channels;
  std::vector<RepeatModel> repeats;
};

/// Trains every repeat (up to config.jobs in parallel) and writes the bundle
/// into config.output: config.txt, bundle.json, repeat_NN.json, train_log.txt.
ModelBundle cmd_train(const RunConfig& config);

void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle);
/// Throws DataError when a file is missing or malformed.
ModelBundle load_bundle(const std::filesystem::path& dir);

/// Ranks each repeat's test identities (view a probes against view b
/// gallery) and writes cmc.tsv and summary.tsv into `out_dir`. `data`
/// defaults to the dataset named by the bundle's config; jobs = 0 keeps the
/// bundle's setting.
CmcSummary cmd_evaluate(const std::filesystem::path& bundle_dir,
                        const std::filesystem::path& out_dir,
                        const std::optional<Dataset>& data = std::nullopt,
                        std::size_t jobs = 0);

/// Evaluation of an in-memory bundle; no files are written.
CmcSummary evaluate_bundle(const ModelBundle& bundle, const Dataset& data);

enum class SweepAxis { Nu, K, NystromSamples };
SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepPoint {
  double value = 0.0;
  bool ok = false;
  std::string error;
  int error_code = 0;
  std::optional<CmcSummary> summary;
  double kernel_error = 0.0;  // mean Nystrom error; NystromSamples axis only
};

struct SweepResult {
  SweepAxis axis;
  std::vector<SweepPoint> points;
  std::size_t failures() const;
};

/// One train/evaluate cycle per value under `<output>/point_NN`, then
/// sweep.tsv in config.output. Point failures are recorded, not thrown.
SweepResult cmd_sweep(const RunConfig& config, SweepAxis axis, const std::vector<double>& values);

/// Kernel eigenvalues of each channel (both views stacked, at most
/// `max_rows` rows sampled with config.seed), written to spectrum.tsv.
std::vector<Vector> cmd_spectrum(const RunConfig& config, std::size_t max_rows);

/// Generates config.synthetic and writes it as a descriptor directory.
void cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& dir);

/// Process exit code for an exception escaping a command:
/// 2 config, 3 data, 4 convergence, 5 numerical, 1 anything else.
int exit_code_for(const std::exception& e);
inline constexpr int kExitPartialFailure = 6;

/// Runs fn(0..n-1) on up to `jobs` threads. Every index runs; the exception
/// of the lowest failing index is rethrown afterwards.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace ensmetric

// ensmetric command-line front end.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ensmetric/dataset.hpp"
#include "ensmetric/errors.hpp"
#include "ensmetric/pipeline.hpp"

namespace {

using ensmetric::RunConfig;

void add_synthetic_options(CLI::App* app, ensmetric::SyntheticSpec& s) {
  app->add_option("--synth-identities", s.identities, "identities in the synthetic dataset")
      ->capture_default_str();
  app->add_option("--synth-dims", s.dims, "descriptor dimension per channel")->capture_default_str();
  app->add_option("--synth-informativeness", s.informativeness,
                  "signal strength per channel (<= 0: no identity signal, inf: noiseless views)")
      ->capture_default_str();
  app->add_option("--synth-names", s.names, "channel names (default ch0, ch1, ...)");
  app->add_option("--synth-noise", s.noise, "isotropic noise scale")->capture_default_str();
  app->add_option("--synth-latent-dim", s.latent_dim, "latent identity dimension")
      ->capture_default_str();
  app->add_option("--synth-seed", s.seed, "synthetic generator seed")->capture_default_str();
}

void add_run_options(CLI::App* app, RunConfig& c) {
  app->set_config("--config", "", "read options from a key = value file");
  app->add_option("--manifest", c.manifest, "descriptor manifest (empty: synthetic data)");
  add_synthetic_options(app, c.synthetic);
  app->add_option("--metrics", c.metrics,
                  "base metric per channel, or one for all: kissme | klfda | klfda+nystrom")
      ->capture_default_str();
  app->add_option("--pca-dim", c.pca_dim, "PCA dimension before KISSME")->capture_default_str();
  app->add_option("--kissme-ridge", c.kissme_ridge, "KISSME covariance ridge (<= 0: automatic)")
      ->capture_default_str();
  app->add_option("--kernel", c.kernel, "kLFDA kernel: rbf-chi2 | rbf | linear")
      ->capture_default_str();
  app->add_option("--sigma2", c.sigma2, "kernel bandwidth (<= 0: first-quartile heuristic)")
      ->capture_default_str();
  app->add_option("--klfda-beta", c.klfda_beta, "kLFDA within-scatter regulariser")
      ->capture_default_str();
  app->add_option("--klfda-dim", c.klfda_dim, "kLFDA output dimension (0: min(n - 1, 40))")
      ->capture_default_str();
  app->add_option("--klfda-neighbours", c.klfda_neighbours, "local scaling neighbour index")
      ->capture_default_str();
  app->add_option("--nystrom-samples", c.nystrom_samples, "Nystrom anchor count")
      ->capture_default_str();
  app->add_option("--nystrom-rank", c.nystrom_rank, "Nystrom rank (0: anchor count)")
      ->capture_default_str();
  app->add_option("--solver", c.solver, "ensemble solver: cmc-top | cmc-triplet")
      ->capture_default_str();
  app->add_option("--nu", c.nu, "fixed slack weight (0: cross-validate)")->capture_default_str();
  app->add_option("--nu-grid", c.nu_grid, "cross-validation grid (empty: solver default)");
  app->add_option("--cv-folds", c.cv_folds, "cross-validation folds")->capture_default_str();
  app->add_option("-k,--k", c.k, "recall cutoff for cmc-top (0: 10, or 30 for >= 400 ids)")
      ->capture_default_str();
  app->add_option("--epsilon", c.epsilon, "cutting-plane termination threshold")
      ->capture_default_str();
  app->add_option("--max-iterations", c.max_iterations, "cutting-plane round limit")
      ->capture_default_str();
  app->add_option("--qp-tolerance", c.qp_tolerance, "inner QP residual tolerance")
      ->capture_default_str();
  app->add_option("--train-count", c.train_count, "training identities (0: half)")
      ->capture_default_str();
  app->add_option("--test-count", c.test_count, "test identities (0: the rest)")
      ->capture_default_str();
  app->add_option("--repeats", c.repeats, "random split repeats")->capture_default_str();
  app->add_option("--seed", c.seed, "split and sampling seed")->capture_default_str();
  app->add_option("-o,--output", c.output, "output directory")->capture_default_str();
  app->add_option("-j,--jobs", c.jobs, "parallel repeats or sweep points")->capture_default_str();
}

void print_summary(const ensmetric::CmcSummary& s) {
  ensmetric::write_rank_summary(std::cout, s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble metric learning for cross-view identity ranking"};
  app.require_subcommand(1);

  RunConfig train_cfg;
  auto* train = app.add_subcommand("train", "fit base metrics and ensemble weights per split repeat");
  add_run_options(train, train_cfg);

  std::string bundle_dir;
  std::string eval_out;
  std::string eval_manifest;
  std::size_t eval_jobs = 0;
  auto* evaluate = app.add_subcommand("evaluate", "CMC / rank-k / MRR report for a model bundle");
  evaluate->add_option("-b,--bundle", bundle_dir, "model bundle directory")->required();
  evaluate->add_option("-o,--output", eval_out, "report directory (default: the bundle)");
  evaluate->add_option("--manifest", eval_manifest,
                       "descriptor manifest (default: the dataset the bundle was trained on)");
  evaluate->add_option("-j,--jobs", eval_jobs, "parallel repeats (0: as trained)");

  RunConfig sweep_cfg;
  std::string axis_name;
  std::vector<double> axis_values;
  auto* sweep = app.add_subcommand("sweep", "train and evaluate over a grid of one parameter");
  add_run_options(sweep, sweep_cfg);
  sweep->add_option("--axis", axis_name, "nu | k | nystrom-samples")->required();
  sweep->add_option("--values", axis_values, "grid values")->required();

  ensmetric::SyntheticSpec synth_spec;
  std::string synth_out = "synthetic";
  auto* synth = app.add_subcommand("synth", "write a synthetic descriptor dataset");
  add_synthetic_options(synth, synth_spec);
  synth->add_option("-o,--output", synth_out, "output directory")->capture_default_str();

  RunConfig spectrum_cfg;
  std::size_t max_rows = 1000;
  auto* spectrum = app.add_subcommand("spectrum", "kernel eigenvalues per channel");
  add_run_options(spectrum, spectrum_cfg);
  spectrum->add_option("--max-rows", max_rows, "rows sampled per channel")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      const auto bundle = ensmetric::cmd_train(train_cfg);
      std::cout << "trained " << bundle.repeats.size() << " repeat(s) into " << train_cfg.output
                << '\n';
      return 0;
    }
    if (*evaluate) {
      std::optional<ensmetric::Dataset> data;
      if (!eval_manifest.empty()) data = ensmetric::load_descriptors(eval_manifest);
      const std::filesystem::path out = eval_out.empty() ? bundle_dir : eval_out;
      const auto summary = ensmetric::cmd_evaluate(bundle_dir, out, data, eval_jobs);
      print_summary(summary);
      return 0;
    }
    if (*sweep) {
      const auto result =
          ensmetric::cmd_sweep(sweep_cfg, ensmetric::parse_sweep_axis(axis_name), axis_values);
      for (const auto& p : result.points) {
        std::cout << axis_name << '=' << p.value << ' ';
        if (p.ok) {
          std::cout << "rank-1 " << p.summary->mean[0] << " +- " << p.summary->stddev[0] << '\n';
        } else {
          std::cout << "failed: " << p.error << '\n';
        }
      }
      return result.failures() ? ensmetric::kExitPartialFailure : 0;
    }
    if (*synth) {
      ensmetric::cmd_synth(synth_spec, synth_out);
      std::cout << "wrote " << synth_out << "/manifest.txt\n";
      return 0;
    }
    if (*spectrum) {
      const auto spectra = ensmetric::cmd_spectrum(spectrum_cfg, max_rows);
      std::cout << "wrote " << spectrum_cfg.output << "/spectrum.tsv (" << spectra.size()
                << " channels)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ensmetric::exit_code_for(e);
  }
  return 1;
}

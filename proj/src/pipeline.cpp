#include "ensmetric/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "ensmetric/errors.hpp"
#include "ensmetric/kernel.hpp"
#include "ensmetric/model_io.hpp"
#include "ensmetric/nystrom.hpp"

namespace ensmetric {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kBundleFormat = "ensmetric-bundle";
constexpr int kBundleVersion = 1;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix(splitmix(splitmix(base) ^ a) ^ b);
}

// Non-finite doubles are not representable in JSON; store them as strings.
json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw DataError("expected a number, got '" + s + "'");
}

json numbers_to_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number_to_json(x));
  return out;
}

std::vector<double> numbers_from_json(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from_json(x));
  return out;
}

void write_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + ": " + ec.message());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string in_stage(const char* stage, std::size_t repeat, const char* what) {
  std::ostringstream msg;
  msg << "repeat " << repeat << ", stage " << stage << ": " << what;
  return msg.str();
}

// Runs f and rethrows any library error with the stage and repeat attached,
// keeping its type so the exit code is unchanged.
template <class F>
auto in_stage_of(const char* stage, std::size_t repeat, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(in_stage(stage, repeat, e.what()), e.trace());
  } catch (const NumericalError& e) {
    throw NumericalError(in_stage(stage, repeat, e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(in_stage(stage, repeat, e.what()));
  } catch (const DataError& e) {
    throw DataError(in_stage(stage, repeat, e.what()));
  } catch (const InvalidInput& e) {
    throw InvalidInput(in_stage(stage, repeat, e.what()));
  }
}

Matrix stack_views(const ChannelPair& c) {
  Matrix x(c.view_a.descriptors().rows() + c.view_b.descriptors().rows(),
           c.view_a.descriptors().cols());
  x << c.view_a.descriptors(), c.view_b.descriptors();
  return x;
}

std::string repeat_file(std::size_t repeat) {
  std::ostringstream name;
  name << "repeat_" << std::setw(2) << std::setfill('0') << repeat << ".json";
  return name.str();
}

std::string point_dir(std::size_t index) {
  std::ostringstream name;
  name << "point_" << std::setw(2) << std::setfill('0') << index + 1;
  return name.str();
}

json trace_to_json(const CuttingPlaneTrace& t) {
  return json{{"objectives", numbers_to_json(t.objectives)},
              {"violations", numbers_to_json(t.violations)},
              {"kkt_residuals", numbers_to_json(t.kkt_residuals)},
              {"iterations", t.iterations},
              {"converged", t.converged},
              {"objective_monotone", t.objective_monotone}};
}

CuttingPlaneTrace trace_from_json(const json& j) {
  CuttingPlaneTrace t;
  t.objectives = numbers_from_json(j.at("objectives"));
  t.violations = numbers_from_json(j.at("violations"));
  t.kkt_residuals = numbers_from_json(j.at("kkt_residuals"));
  t.iterations = j.at("iterations").get<std::size_t>();
  t.converged = j.at("converged").get<bool>();
  t.objective_monotone = j.at("objective_monotone").get<bool>();
  return t;
}

json repeat_to_json(const RepeatModel& r) {
  json metrics = json::array();
  for (const auto& m : r.metrics) metrics.push_back(metric_to_json(*m));
  return json{{"repeat", r.repeat},
              {"split", {{"train", r.split.train}, {"test", r.split.test}}},
              {"k", r.k},
              {"nu", r.nu},
              {"nu_grid", numbers_to_json(r.nu_grid)},
              {"cv_scores", numbers_to_json(r.cv_scores)},
              {"nystrom_errors", numbers_to_json(r.nystrom_errors)},
              {"metrics", std::move(metrics)},
              {"weights", weights_to_json(r.weights)},
              {"trace", trace_to_json(r.trace)}};
}

RepeatModel repeat_from_json(const json& j) {
  RepeatModel r;
  r.repeat = j.at("repeat").get<std::size_t>();
  r.split.train = j.at("split").at("train").get<IdList>();
  r.split.test = j.at("split").at("test").get<IdList>();
  r.k = j.at("k").get<std::size_t>();
  r.nu = j.at("nu").get<double>();
  r.nu_grid = numbers_from_json(j.at("nu_grid"));
  r.cv_scores = numbers_from_json(j.at("cv_scores"));
  r.nystrom_errors = numbers_from_json(j.at("nystrom_errors"));
  for (const auto& m : j.at("metrics")) r.metrics.push_back(metric_from_json(m));
  r.weights = weights_from_json(j.at("weights"));
  r.trace = trace_from_json(j.at("trace"));
  return r;
}

void log_repeat(std::ostream& out, const RepeatModel& r) {
  out << std::setprecision(17);
  out << "repeat " << r.repeat << ": train=" << r.split.train.size()
      << " test=" << r.split.test.size() << " k=" << r.k << " nu=" << r.nu;
  if (!r.cv_scores.empty()) {
    out << " cv=[";
    for (std::size_t i = 0; i < r.cv_scores.size(); ++i) {
      out << (i ? " " : "") << r.nu_grid[i] << ":" << r.cv_scores[i];
    }
    out << "]";
  }
  out << "\n  weights:";
  for (Eigen::Index t = 0; t < r.weights.w.size(); ++t) {
    out << ' ' << r.metrics[static_cast<std::size_t>(t)]->feature_name() << '=' << r.weights.w[t];
  }
  out << "\n  xi=" << r.weights.xi << " objective=" << r.weights.objective
      << " rounds=" << r.trace.iterations << " converged=" << (r.trace.converged ? "yes" : "no")
      << " objective_monotone=" << (r.trace.objective_monotone ? "yes" : "no") << '\n';
  for (std::size_t i = 0; i < r.trace.objectives.size(); ++i) {
    out << "  round " << i + 1 << ": objective=" << r.trace.objectives[i]
        << " violation=" << r.trace.violations[i] << " kkt=" << r.trace.kkt_residuals[i] << '\n';
  }
  if (!r.nystrom_errors.empty()) {
    out << "  nystrom kernel error:";
    for (double e : r.nystrom_errors) out << ' ' << e;
    out << '\n';
  }
}

template <class T>
void write_list(std::ostream& out, const std::vector<T>& v) {
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << ']';
}

void write_strings(std::ostream& out, const std::vector<std::string>& v) {
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << '"' << v[i] << '"';
  out << ']';
}

}  // namespace

// ---------------------------------------------------------------- RunConfig

void RunConfig::validate() const {
  const auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (manifest.empty()) {
    try {
      synthetic.validate();
    } catch (const InvalidInput& e) {
      fail(std::string("synthetic spec: ") + e.what());
    }
  }
  if (metrics.empty()) fail("metrics: at least one choice is required");
  for (const auto& m : metrics) {
    if (m != "kissme" && m != "klfda" && m != "klfda+nystrom") {
      fail("metrics: unknown choice '" + m + "' (expected kissme, klfda or klfda+nystrom)");
    }
  }
  if (pca_dim < 1) fail("pca-dim must be >= 1");
  parse_kernel_kind(kernel);
  if (!std::isfinite(sigma2)) fail("sigma2 must be finite");
  if (!(klfda_beta >= 0.0) || !std::isfinite(klfda_beta)) fail("klfda-beta must be >= 0");
  if (klfda_neighbours < 1) fail("klfda-neighbours must be >= 1");
  if (nystrom_samples < 1) fail("nystrom-samples must be >= 1");
  if (nystrom_rank > nystrom_samples) fail("nystrom-rank must not exceed nystrom-samples");
  if (solver != "cmc-top" && solver != "cmc-triplet") {
    fail("solver: unknown choice '" + solver + "' (expected cmc-top or cmc-triplet)");
  }
  if (solver == "cmc-triplet" && k > 1) fail("k applies to cmc-top only; leave it at 0 for cmc-triplet");
  if (!std::isfinite(nu) || nu < 0.0) fail("nu must be a finite value >= 0");
  for (double v : nu_grid) {
    if (!(v > 0.0) || !std::isfinite(v)) fail("nu-grid values must be positive");
  }
  if (nu > 0.0 && !nu_grid.empty()) fail("set either nu or nu-grid, not both");
  if (cv_folds < 2) fail("cv-folds must be >= 2");
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (max_iterations < 1) fail("max-iterations must be >= 1");
  if (!(qp_tolerance > 0.0)) fail("qp-tolerance must be > 0");
  if (repeats < 1) fail("repeats must be >= 1");
  if (jobs < 1) fail("jobs must be >= 1");
  if (output.empty()) fail("output directory must be set");
}

std::vector<std::string> RunConfig::channel_metrics(std::size_t channels) const {
  if (metrics.size() == 1) return std::vector<std::string>(channels, metrics.front());
  if (metrics.size() != channels) {
    std::ostringstream msg;
    msg << "metrics lists " << metrics.size() << " choices but the dataset has " << channels
        << " channels";
    throw ConfigError(msg.str());
  }
  return metrics;
}

std::vector<double> RunConfig::effective_nu_grid() const {
  if (nu > 0.0) return {};
  if (!nu_grid.empty()) return nu_grid;
  return solver == "cmc-top" ? log_grid(2.0, 3.0, 11) : log_grid(3.0, 4.0, 11);
}

json RunConfig::to_json() const {
  return json{{"manifest", manifest},
              {"synthetic",
               {{"identities", synthetic.identities},
                {"dims", synthetic.dims},
                {"informativeness", numbers_to_json(synthetic.informativeness)},
                {"names", synthetic.names},
                {"noise", synthetic.noise},
                {"latent_dim", synthetic.latent_dim},
                {"seed", synthetic.seed}}},
              {"metrics", metrics},
              {"pca_dim", pca_dim},
              {"kissme_ridge", kissme_ridge},
              {"kernel", kernel},
              {"sigma2", sigma2},
              {"klfda_beta", klfda_beta},
              {"klfda_dim", klfda_dim},
              {"klfda_neighbours", klfda_neighbours},
              {"nystrom_samples", nystrom_samples},
              {"nystrom_rank", nystrom_rank},
              {"solver", solver},
              {"nu", nu},
              {"nu_grid", nu_grid},
              {"cv_folds", cv_folds},
              {"k", k},
              {"epsilon", epsilon},
              {"max_iterations", max_iterations},
              {"qp_tolerance", qp_tolerance},
              {"train_count", train_count},
              {"test_count", test_count},
              {"repeats", repeats},
              {"seed", seed},
              {"output", output},
              {"jobs", jobs}};
}

RunConfig RunConfig::from_json(const json& j) {
  try {
    RunConfig c;
    c.manifest = j.at("manifest").get<std::string>();
    const auto& s = j.at("synthetic");
    c.synthetic.identities = s.at("identities").get<std::size_t>();
    c.synthetic.dims = s.at("dims").get<std::vector<std::size_t>>();
    c.synthetic.informativeness = numbers_from_json(s.at("informativeness"));
    c.synthetic.names = s.at("names").get<std::vector<std::string>>();
    c.synthetic.noise = s.at("noise").get<double>();
    c.synthetic.latent_dim = s.at("latent_dim").get<std::size_t>();
    c.synthetic.seed = s.at("seed").get<std::uint64_t>();
    c.metrics = j.at("metrics").get<std::vector<std::string>>();
    c.pca_dim = j.at("pca_dim").get<std::size_t>();
    c.kissme_ridge = j.at("kissme_ridge").get<double>();
    c.kernel = j.at("kernel").get<std::string>();
    c.sigma2 = j.at("sigma2").get<double>();
    c.klfda_beta = j.at("klfda_beta").get<double>();
    c.klfda_dim = j.at("klfda_dim").get<std::size_t>();
    c.klfda_neighbours = j.at("klfda_neighbours").get<std::size_t>();
    c.nystrom_samples = j.at("nystrom_samples").get<std::size_t>();
    c.nystrom_rank = j.at("nystrom_rank").get<std::size_t>();
    c.solver = j.at("solver").get<std::string>();
    c.nu = j.at("nu").get<double>();
    c.nu_grid = j.at("nu_grid").get<std::vector<double>>();
    c.cv_folds = j.at("cv_folds").get<std::size_t>();
    c.k = j.at("k").get<std::size_t>();
    c.epsilon = j.at("epsilon").get<double>();
    c.max_iterations = j.at("max_iterations").get<std::size_t>();
    c.qp_tolerance = j.at("qp_tolerance").get<double>();
    c.train_count = j.at("train_count").get<std::size_t>();
    c.test_count = j.at("test_count").get<std::size_t>();
    c.repeats = j.at("repeats").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.output = j.at("output").get<std::string>();
    c.jobs = j.at("jobs").get<std::size_t>();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed run config: ") + e.what());
  }
}

void RunConfig::write_text(std::ostream& out) const {
  out << std::setprecision(17);
  out << "# data (an empty manifest selects the synthetic generator)\n";
  out << "manifest = \"" << manifest << "\"\n";
  out << "synth-identities = " << synthetic.identities << '\n';
  out << "synth-dims = ";
  write_list(out, synthetic.dims);
  out << "\nsynth-informativeness = ";
  write_list(out, synthetic.informativeness);
  out << "\nsynth-names = ";
  write_strings(out, synthetic.names);
  out << "\nsynth-noise = " << synthetic.noise << '\n';
  out << "synth-latent-dim = " << synthetic.latent_dim << '\n';
  out << "synth-seed = " << synthetic.seed << '\n';
  out << "# base metrics\n";
  out << "metrics = ";
  write_strings(out, metrics);
  out << "\npca-dim = " << pca_dim << '\n';
  out << "kissme-ridge = " << kissme_ridge << '\n';
  out << "kernel = \"" << kernel << "\"\n";
  out << "sigma2 = " << sigma2 << '\n';
  out << "klfda-beta = " << klfda_beta << '\n';
  out << "klfda-dim = " << klfda_dim << '\n';
  out << "klfda-neighbours = " << klfda_neighbours << '\n';
  out << "nystrom-samples = " << nystrom_samples << '\n';
  out << "nystrom-rank = " << nystrom_rank << '\n';
  out << "# ensemble\n";
  out << "solver = \"" << solver << "\"\n";
  out << "nu = " << nu << '\n';
  out << "nu-grid = ";
  write_list(out, nu_grid);
  out << "\ncv-folds = " << cv_folds << '\n';
  out << "k = " << k << '\n';
  out << "epsilon = " << epsilon << '\n';
  out << "max-iterations = " << max_iterations << '\n';
  out << "qp-tolerance = " << qp_tolerance << '\n';
  out << "# protocol\n";
  out << "train-count = " << train_count << '\n';
  out << "test-count = " << test_count << '\n';
  out << "repeats = " << repeats << '\n';
  out << "seed = " << seed << '\n';
  out << "output = \"" << output << "\"\n";
  out << "jobs = " << jobs << '\n';
}

// ---------------------------------------------------------------- stages

Dataset load_dataset(const RunConfig& config) {
  if (!config.manifest.empty()) return load_descriptors(config.manifest);
  try {
    return generate_synthetic(config.synthetic);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
}

std::size_t resolve_k(const RunConfig& config, std::size_t train_identities) {
  if (config.solver == "cmc-triplet") return 1;
  if (config.k > 0) return config.k;
  return train_identities >= 400 ? 30 : 10;
}

std::vector<Split> resolve_splits(const RunConfig& config, const IdList& ids) {
  SplitSpec spec;
  spec.train_count = config.train_count > 0 ? config.train_count : (ids.size() + 1) / 2;
  if (spec.train_count >= ids.size()) {
    throw ConfigError("train-count leaves no identities for testing");
  }
  spec.test_count = config.test_count > 0 ? config.test_count : ids.size() - spec.train_count;
  spec.repeats = config.repeats;
  spec.seed = config.seed;
  try {
    spec.validate(ids.size());
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (spec.train_count < 2 || spec.test_count < 2) {
    throw ConfigError("train and test sets need at least two identities each");
  }
  return make_splits(ids, spec);
}

std::vector<MetricPtr> fit_base_metrics(const RunConfig& config, const Dataset& train,
                                        std::uint64_t seed) {
  const auto choices = config.channel_metrics(train.channels.size());
  std::vector<MetricPtr> out;
  for (std::size_t t = 0; t < train.channels.size(); ++t) {
    const auto channel_seed = derive_seed(seed, t, 0x6d);
    if (choices[t] == "kissme") {
      KissmeFitOptions opts;
      opts.pca_dim = config.pca_dim;
      if (config.kissme_ridge > 0.0) opts.kissme.ridge = config.kissme_ridge;
      opts.kissme.seed = channel_seed;
      out.push_back(fit_kissme_metric(train.channels[t], opts));
    } else {
      KlfdaFitOptions opts;
      opts.kernel = parse_kernel_kind(config.kernel);
      opts.sigma2 = config.sigma2;
      opts.beta = config.klfda_beta;
      opts.dimension = config.klfda_dim;
      opts.neighbours = config.klfda_neighbours;
      opts.nystrom = choices[t] == "klfda+nystrom";
      opts.nystrom_samples = config.nystrom_samples;
      opts.nystrom_rank = config.nystrom_rank;
      opts.seed = channel_seed;
      out.push_back(fit_klfda_metric(train.channels[t], opts));
    }
  }
  return out;
}

EnsembleFit fit_ensemble(const RunConfig& config, const TripletDistanceTable& table, double nu,
                         std::size_t k) {
  CuttingPlaneConfig cp;
  cp.nu = nu;
  cp.epsilon = config.epsilon;
  cp.k = k;
  cp.max_iterations = config.max_iterations;
  cp.qp_tolerance = config.qp_tolerance;
  return config.solver == "cmc-top" ? fit_cmc_top(table, cp) : fit_cmc_triplet(table, cp);
}

RepeatModel train_repeat(const RunConfig& config, const Dataset& data, const Split& split,
                         std::size_t repeat) {
  RepeatModel out;
  out.repeat = repeat;
  out.split = split;
  const std::uint64_t seed = derive_seed(config.seed, repeat);

  const Dataset train = in_stage_of("select-train", repeat, [&] { return data.subset(split.train); });
  out.metrics = in_stage_of("fit-base-metrics", repeat,
                            [&] { return fit_base_metrics(config, train, seed); });

  in_stage_of("nystrom-error", repeat, [&] {
    for (std::size_t t = 0; t < out.metrics.size(); ++t) {
      const auto* kp = dynamic_cast<const KernelProjectionMetric*>(out.metrics[t].get());
      if (!kp || !kp->nystrom()) continue;
      const Matrix x = stack_views(train.channels[t]);
      const Matrix k = kernel_matrix(kp->nystrom()->kernel(), x);
      const Matrix z = kp->nystrom()->embed_rows(x);
      out.nystrom_errors.push_back((k - z * z.transpose()).norm() / k.norm());
    }
  });

  const auto table = in_stage_of("build-triplet-table", repeat, [&] {
    return build_triplet_table(out.metrics, train.view_a(), train.view_b());
  });

  out.k = resolve_k(config, split.train.size());
  if (out.k > table.m_prime()) {
    if (config.k > 0) {
      std::ostringstream msg;
      msg << "k = " << config.k << " exceeds the " << table.m_prime()
          << " wrong candidates per training probe";
      throw ConfigError(in_stage("resolve-k", repeat, msg.str().c_str()));
    }
    out.k = table.m_prime();
  }

  out.nu_grid = config.effective_nu_grid();
  if (out.nu_grid.empty()) {
    out.nu = config.nu;
  } else {
    const auto cv = in_stage_of("cross-validate", repeat, [&] {
      const FoldScorer scorer = [&](const IdList& fit_ids, const IdList& held_ids,
                                    const std::vector<double>& grid) {
        const Dataset fit = data.subset(fit_ids);
        const Dataset held = data.subset(held_ids);
        const auto metrics = fit_base_metrics(config, fit, seed);
        const auto fold_table = build_triplet_table(metrics, fit.view_a(), fit.view_b());
        const std::size_t k = std::min(out.k, fold_table.m_prime());
        std::vector<double> scores;
        for (double nu : grid) {
          const auto fitted = fit_ensemble(config, fold_table, nu, k);
          scores.push_back(cmc_curve(rank_all(fitted.weights, metrics, held.view_a(),
                                              held.view_b()))
                               .at(1));
        }
        return scores;
      };
      return cross_validate_nu(split.train, out.nu_grid, config.cv_folds,
                               derive_seed(seed, 0xc5), scorer);
    });
    out.nu = cv.best_nu;
    out.cv_scores = cv.mean_scores;
  }

  auto fit = in_stage_of("fit-ensemble", repeat, [&] { return fit_ensemble(config, table, out.nu, out.k); });
  out.weights = std::move(fit.weights);
  out.trace = std::move(fit.trace);
  return out;
}

// ---------------------------------------------------------------- train

ModelBundle cmd_train(const RunConfig& config) {
  config.validate();
  const Dataset data = load_dataset(config);
  data.validate();
  config.channel_metrics(data.channels.size());
  const auto splits = resolve_splits(config, data.identities());

  ModelBundle bundle;
  bundle.config = config;
  bundle.channels = data.channel_names();
  bundle.repeats.resize(splits.size());

  const fs::path dir = config.output;
  fs::create_directories(dir);
  {
    std::ostringstream text;
    config.write_text(text);
    write_atomically(dir / "config.txt", text.str());
  }

  parallel_for(splits.size(), config.jobs, [&](std::size_t r) {
    bundle.repeats[r] = train_repeat(config, data, splits[r], r + 1);
    write_atomically(dir / repeat_file(r + 1), repeat_to_json(bundle.repeats[r]).dump(1));
  });

  save_bundle(dir, bundle);
  return bundle;
}

void save_bundle(const fs::path& dir, const ModelBundle& bundle) {
  fs::create_directories(dir);
  std::ostringstream log;
  for (const auto& r : bundle.repeats) {
    write_atomically(dir / repeat_file(r.repeat), repeat_to_json(r).dump(1));
    log_repeat(log, r);
  }
  write_atomically(dir / "train_log.txt", log.str());
  std::ostringstream text;
  bundle.config.write_text(text);
  write_atomically(dir / "config.txt", text.str());
  const json manifest{{"format", kBundleFormat},
                      {"version", kBundleVersion},
                      {"config", bundle.config.to_json()},
                      {"channels", bundle.channels},
                      {"repeats", bundle.repeats.size()}};
  // Written last: its presence marks the bundle complete.
  write_atomically(dir / "bundle.json", manifest.dump(1));
}

ModelBundle load_bundle(const fs::path& dir) {
  const json manifest = read_json(dir / "bundle.json");
  try {
    if (manifest.at("format").get<std::string>() != kBundleFormat ||
        manifest.at("version").get<int>() != kBundleVersion) {
      throw DataError(dir.string() + ": not an ensmetric model bundle (version 1)");
    }
    ModelBundle bundle;
    bundle.config = RunConfig::from_json(manifest.at("config"));
    bundle.channels = manifest.at("channels").get<std::vector<std::string>>();
    const auto count = manifest.at("repeats").get<std::size_t>();
    for (std::size_t r = 1; r <= count; ++r) {
      auto model = repeat_from_json(read_json(dir / repeat_file(r)));
      if (model.metrics.size() != bundle.channels.size() ||
          static_cast<std::size_t>(model.weights.w.size()) != bundle.channels.size()) {
        throw DataError(repeat_file(r) + ": channel count does not match bundle.json");
      }
      bundle.repeats.push_back(std::move(model));
    }
    return bundle;
  } catch (const json::exception& e) {
    throw DataError(dir.string() + ": malformed bundle: " + e.what());
  }
}

// ---------------------------------------------------------------- evaluate

CmcSummary evaluate_bundle(const ModelBundle& bundle, const Dataset& data) {
  const auto names = data.channel_names();
  if (names != bundle.channels) {
    std::ostringstream msg;
    msg << "dataset channels [";
    for (std::size_t i = 0; i < names.size(); ++i) msg << (i ? " " : "") << names[i];
    msg << "] do not match bundle channels [";
    for (std::size_t i = 0; i < bundle.channels.size(); ++i) msg << (i ? " " : "") << bundle.channels[i];
    msg << "]";
    throw DataError(msg.str());
  }
  if (bundle.repeats.empty()) throw DataError("bundle has no repeats");
  std::vector<CmcCurve> curves(bundle.repeats.size());
  std::vector<double> mrr(bundle.repeats.size());
  parallel_for(bundle.repeats.size(), bundle.config.jobs, [&](std::size_t r) {
    const auto& model = bundle.repeats[r];
    in_stage_of("evaluate", model.repeat, [&] {
      const Dataset test = data.subset(model.split.test);
      const auto results = rank_all(model.weights, model.metrics, test.view_a(), test.view_b());
      curves[r] = cmc_curve(results);
      mrr[r] = mean_reciprocal_rank(results);
    });
  });
  return summarize(std::move(curves), std::move(mrr));
}

CmcSummary cmd_evaluate(const fs::path& bundle_dir, const fs::path& out_dir,
                        const std::optional<Dataset>& data, std::size_t jobs) {
  ModelBundle bundle = load_bundle(bundle_dir);
  if (jobs > 0) bundle.config.jobs = jobs;
  const CmcSummary summary =
      data ? evaluate_bundle(bundle, *data) : evaluate_bundle(bundle, load_dataset(bundle.config));
  fs::create_directories(out_dir);
  std::ostringstream cmc;
  write_cmc_table(cmc, summary);
  write_atomically(out_dir / "cmc.tsv", cmc.str());
  std::ostringstream ranks;
  write_rank_summary(ranks, summary);
  write_atomically(out_dir / "summary.tsv", ranks.str());
  return summary;
}

// ---------------------------------------------------------------- sweep

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "nu") return SweepAxis::Nu;
  if (name == "k") return SweepAxis::K;
  if (name == "nystrom-samples") return SweepAxis::NystromSamples;
  throw ConfigError("unknown sweep axis '" + name + "' (expected nu, k or nystrom-samples)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Nu: return "nu";
    case SweepAxis::K: return "k";
    case SweepAxis::NystromSamples: return "nystrom-samples";
  }
  return "?";
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const SweepPoint& p) { return !p.ok; }));
}

SweepResult cmd_sweep(const RunConfig& config, SweepAxis axis, const std::vector<double>& values) {
  config.validate();
  if (values.empty()) throw ConfigError("sweep: no axis values given");
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("sweep: axis values must be positive");
    if (axis != SweepAxis::Nu && v != std::floor(v)) {
      throw ConfigError("sweep: " + to_string(axis) + " values must be integers");
    }
  }
  if (axis == SweepAxis::K && config.solver != "cmc-top") {
    throw ConfigError("sweep: the k axis requires solver cmc-top");
  }
  if (axis == SweepAxis::NystromSamples &&
      std::find(config.metrics.begin(), config.metrics.end(), "klfda+nystrom") ==
          config.metrics.end()) {
    throw ConfigError("sweep: the nystrom-samples axis needs a klfda+nystrom channel");
  }
  const Dataset data = load_dataset(config);
  data.validate();

  SweepResult result{axis, std::vector<SweepPoint>(values.size())};
  const fs::path root = config.output;
  fs::create_directories(root);

  parallel_for(values.size(), config.jobs, [&](std::size_t i) {
    SweepPoint& point = result.points[i];
    point.value = values[i];
    RunConfig cfg = config;
    cfg.output = (root / point_dir(i)).string();
    cfg.jobs = 1;
    switch (axis) {
      case SweepAxis::Nu:
        cfg.nu = values[i];
        cfg.nu_grid.clear();
        break;
      case SweepAxis::K:
        cfg.k = static_cast<std::size_t>(values[i]);
        break;
      case SweepAxis::NystromSamples:
        cfg.nystrom_samples = static_cast<std::size_t>(values[i]);
        cfg.nystrom_rank = 0;
        break;
    }
    try {
      cfg.validate();
      fs::create_directories(cfg.output);
      const auto splits = resolve_splits(cfg, data.identities());
      ModelBundle bundle;
      bundle.config = cfg;
      bundle.channels = data.channel_names();
      for (std::size_t r = 0; r < splits.size(); ++r) {
        bundle.repeats.push_back(train_repeat(cfg, data, splits[r], r + 1));
      }
      save_bundle(cfg.output, bundle);
      point.summary = evaluate_bundle(bundle, data);
      std::ostringstream cmc, ranks;
      write_cmc_table(cmc, *point.summary);
      write_rank_summary(ranks, *point.summary);
      write_atomically(fs::path(cfg.output) / "cmc.tsv", cmc.str());
      write_atomically(fs::path(cfg.output) / "summary.tsv", ranks.str());
      double err = 0.0;
      std::size_t count = 0;
      for (const auto& r : bundle.repeats) {
        for (double e : r.nystrom_errors) {
          err += e;
          ++count;
        }
      }
      point.kernel_error = count ? err / static_cast<double>(count) : 0.0;
      point.ok = true;
    } catch (const std::exception& e) {
      point.ok = false;
      point.error = e.what();
      point.error_code = exit_code_for(e);
    }
  });

  std::ostringstream table;
  table << std::setprecision(17);
  table << to_string(axis) << "\tstatus";
  for (std::size_t rank : kReportRanks) table << "\trank-" << rank << "_mean\trank-" << rank << "_std";
  table << "\tmrr_mean\tmrr_std";
  if (axis == SweepAxis::NystromSamples) table << "\tkernel_error";
  table << "\terror\n";
  for (const auto& p : result.points) {
    table << p.value << '\t' << (p.ok ? "ok" : "failed");
    for (std::size_t rank : kReportRanks) {
      if (p.summary && rank <= p.summary->mean.size()) {
        table << '\t' << p.summary->mean[rank - 1] << '\t' << p.summary->stddev[rank - 1];
      } else {
        table << "\tNA\tNA";
      }
    }
    if (p.summary) table << '\t' << p.summary->mrr_mean << '\t' << p.summary->mrr_stddev;
    else table << "\tNA\tNA";
    if (axis == SweepAxis::NystromSamples) {
      if (p.ok) table << '\t' << p.kernel_error;
      else table << "\tNA";
    }
    std::string err = p.error;
    std::replace(err.begin(), err.end(), '\t', ' ');
    std::replace(err.begin(), err.end(), '\n', ' ');
    table << '\t' << err << '\n';
  }
  write_atomically(root / "sweep.tsv", table.str());
  return result;
}

// ---------------------------------------------------------------- misc commands

std::vector<Vector> cmd_spectrum(const RunConfig& config, std::size_t max_rows) {
  config.validate();
  if (max_rows < 2) throw ConfigError("spectrum: max-rows must be >= 2");
  if (max_rows > kDenseEigenLimit) {
    std::ostringstream msg;
    msg << "spectrum: max-rows exceeds the dense eigen limit of " << kDenseEigenLimit;
    throw ConfigError(msg.str());
  }
  const Dataset data = load_dataset(config);
  data.validate();
  const KernelKind kind = parse_kernel_kind(config.kernel);

  std::vector<Vector> spectra;
  for (const auto& channel : data.channels) {
    Matrix x = stack_views(channel);
    if (static_cast<std::size_t>(x.rows()) > max_rows) {
      const auto idx = sample_without_replacement(static_cast<std::size_t>(x.rows()), max_rows,
                                                  derive_seed(config.seed, 0x5e));
      Matrix sub(static_cast<Eigen::Index>(max_rows), x.cols());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        sub.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
      }
      x = std::move(sub);
    }
    KernelSpec spec{kind, config.sigma2 > 0.0 ? config.sigma2 : 1.0};
    if (kind != KernelKind::Linear && config.sigma2 <= 0.0) spec.sigma2 = select_sigma2(x, kind);
    spectra.push_back(eigen_spectrum(x, spec));
  }

  const fs::path dir = config.output;
  fs::create_directories(dir);
  std::ostringstream out;
  out << std::setprecision(17) << "index";
  for (const auto& name : data.channel_names()) out << '\t' << name;
  out << '\n';
  Eigen::Index longest = 0;
  for (const auto& s : spectra) longest = std::max(longest, s.size());
  for (Eigen::Index i = 0; i < longest; ++i) {
    out << i + 1;
    for (const auto& s : spectra) {
      out << '\t';
      if (i < s.size()) out << s[i];
    }
    out << '\n';
  }
  write_atomically(dir / "spectrum.tsv", out.str());
  return spectra;
}

void cmd_synth(const SyntheticSpec& spec, const fs::path& dir) {
  Dataset data;
  try {
    data = generate_synthetic(spec);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  save_descriptors(dir, data);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const InvalidInput*>(&e)) return 3;
  if (dynamic_cast<const ConvergenceError*>(&e)) return 4;
  if (dynamic_cast<const NumericalError*>(&e)) return 5;
  return 1;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ensmetric

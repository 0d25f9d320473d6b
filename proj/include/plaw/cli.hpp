#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "plaw/csn.hpp"
#include "plaw/dataset.hpp"
#include "plaw/inference.hpp"
#include "plaw/predictive.hpp"

namespace plaw {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write output file: " + path.string());
  return out;
}

inline void write_manifest(const std::filesystem::path& path,
                           const std::map<std::string, std::string>& kv) {
  auto out = open_output(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

inline void ensure_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory: " + dir.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate: synthetic data through the generative + corruption pipeline.
// Writes dataset.csv, ground_truth.csv (sealed; inference must not read it)
// and manifest.txt.
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::filesystem::path out_dir = "sim-out";
  double alpha = 2.2;
  double lambda = 0.007;
  double mu = 0.05;
  double eta = 0.0;
  std::string variant = "exponential-linear";
  double heap_p = 0.19;
  long long n_true = 20000;
  std::string side = "Native";
  std::uint64_t seed = 1;
};

inline ObsVariant variant_from_string(const std::string& s) {
  if (s == "exponential-linear") return ObsVariant::exponential_linear;
  if (s == "exponential-quadratic") return ObsVariant::exponential_quadratic;
  if (s == "logistic") return ObsVariant::logistic;
  throw UsageError("unknown observation variant '" + s + "'");
}

inline std::string variant_to_string(ObsVariant v) {
  switch (v) {
    case ObsVariant::exponential_linear: return "exponential-linear";
    case ObsVariant::exponential_quadratic: return "exponential-quadratic";
    case ObsVariant::logistic: return "logistic";
  }
  return "?";
}

inline void cmd_simulate(const SimulateArgs& args) {
  if (args.n_true < 1) throw UsageError("simulate: --n-true must be >= 1");
  if (!(args.alpha > 1.0 + kMinAlphaGap)) throw UsageError("simulate: --alpha must exceed 1");
  if (!(args.heap_p >= 0.0 && args.heap_p <= 1.0))
    throw UsageError("simulate: --heap-p must lie in [0,1]");
  SimulationConfig config;
  config.alpha = args.alpha;
  config.model = {variant_from_string(args.variant), args.lambda, args.mu, args.eta};
  try {
    config.model.validate();
  } catch (const std::domain_error& e) {
    throw UsageError(std::string("simulate: ") + e.what());
  }
  config.heap_p = args.heap_p;
  config.n_true = args.n_true;
  config.side = side_from_string(args.side);

  detail::ensure_out_dir(args.out_dir);
  const SimulationOutput sim = generate_simulation_study(config, args.seed);
  save_csv(sim.observed, args.out_dir / "dataset.csv");
  save_ground_truth(sim.truth, args.out_dir / "ground_truth.csv");

  std::map<std::string, std::string> manifest{
      {"command", "simulate"},
      {"alpha", detail::fmt_double(args.alpha)},
      {"lambda", detail::fmt_double(args.lambda)},
      {"mu", detail::fmt_double(args.mu)},
      {"eta", detail::fmt_double(args.eta)},
      {"variant", args.variant},
      {"heap_p", detail::fmt_double(args.heap_p)},
      {"n_true", std::to_string(args.n_true)},
      {"side", args.side},
      {"seed", std::to_string(args.seed)},
      {"n_obs", std::to_string(sim.observed.records.size())},
      {"sum_recorded", std::to_string(sim.truth.sum_recorded)},
  };
  detail::write_manifest(args.out_dir / "manifest.txt", manifest);
}

// ---------------------------------------------------------------------------
// fit-csn: the frequentist tail fit per side, with bootstrap uncertainty and
// the goodness-of-fit bootstrap. Also exports the plot-ready CCDF and
// frequency-table files.
// ---------------------------------------------------------------------------

struct FitCsnArgs {
  std::filesystem::path data_path;
  std::filesystem::path out_dir = "fit-out";
  std::size_t bootstrap = 1000;
  std::size_t gof = 100;
  std::uint64_t seed = 1;
};

inline void cmd_fit_csn(const FitCsnArgs& args) {
  if (args.data_path.empty()) throw UsageError("fit-csn: --data is required");
  const ObservedDataset data = load_csv(args.data_path);
  detail::ensure_out_dir(args.out_dir);

  auto summary = detail::open_output(args.out_dir / "csn_fit.txt");
  auto boot_csv = detail::open_output(args.out_dir / "bootstrap.csv");
  boot_csv << "side,replicate,status,xmin_hat,alpha_hat,ks_distance,n_tail\n";

  for (const Side side : data.sides_present()) {
    const std::string tag = to_string(side);
    const auto values = data.casualties_for(side);
    const KSFit fit = estimate_xmin(values);
    summary << tag << ".n_obs = " << values.size() << '\n';
    summary << tag << ".xmin_hat = " << fit.xmin_hat << '\n';
    summary << tag << ".alpha_hat = " << detail::fmt_double(fit.alpha_hat) << '\n';
    summary << tag << ".ks_distance = " << detail::fmt_double(fit.ks_distance) << '\n';
    summary << tag << ".n_tail = " << fit.n_tail << '\n';
    if (args.gof > 0) {
      const double p = gof_pvalue(values, fit, args.gof, derive_seed(args.seed, 1));
      summary << tag << ".gof_pvalue = " << detail::fmt_double(p) << '\n';
      summary << tag << ".gof_rounds = " << args.gof << '\n';
    }
    if (args.bootstrap > 0) {
      const BootstrapResult boot =
          bootstrap_uncertainty(values, args.bootstrap, derive_seed(args.seed, 2));
      double mean_alpha = 0.0, mean_xmin = 0.0;
      std::size_t ok = 0;
      for (std::size_t i = 0; i < boot.replicates.size(); ++i) {
        const auto& r = boot.replicates[i];
        boot_csv << tag << ',' << i << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok) {
          boot_csv << r.fit.xmin_hat << ',' << detail::fmt_double(r.fit.alpha_hat) << ','
                   << detail::fmt_double(r.fit.ks_distance) << ',' << r.fit.n_tail << '\n';
          mean_alpha += r.fit.alpha_hat;
          mean_xmin += static_cast<double>(r.fit.xmin_hat);
          ++ok;
        } else {
          boot_csv << ",,,\n";
        }
      }
      if (ok > 1) {
        mean_alpha /= static_cast<double>(ok);
        mean_xmin /= static_cast<double>(ok);
        double var_alpha = 0.0, var_xmin = 0.0;
        for (const auto& r : boot.replicates) {
          if (!r.ok) continue;
          var_alpha += (r.fit.alpha_hat - mean_alpha) * (r.fit.alpha_hat - mean_alpha);
          var_xmin += (static_cast<double>(r.fit.xmin_hat) - mean_xmin) *
                      (static_cast<double>(r.fit.xmin_hat) - mean_xmin);
        }
        var_alpha /= static_cast<double>(ok - 1);
        var_xmin /= static_cast<double>(ok - 1);
        summary << tag << ".bootstrap_rounds = " << args.bootstrap << '\n';
        summary << tag << ".bootstrap_failures = " << boot.failures() << '\n';
        summary << tag << ".alpha_hat_sd = " << detail::fmt_double(std::sqrt(var_alpha))
                << '\n';
        summary << tag << ".xmin_hat_sd = " << detail::fmt_double(std::sqrt(var_xmin))
                << '\n';
      }
    }
    // plot-ready exports
    auto ccdf = detail::open_output(args.out_dir / ("ccdf_" + tag + ".csv"));
    ccdf << "x,ccdf\n";
    for (const auto& [x, frac] : ccdf_points(data, side))
      ccdf << x << ',' << detail::fmt_double(frac) << '\n';
  }

  auto freq = detail::open_output(args.out_dir / "frequency_table.csv");
  freq << "count,us,native\n";
  const auto table = frequency_table(data);
  for (std::size_t i = 0; i < 10; ++i)
    freq << (i + 1) << ',' << table.at(Side::US)[i] << ',' << table.at(Side::Native)[i]
         << '\n';

  std::map<std::string, std::string> manifest{
      {"command", "fit-csn"},
      {"data", args.data_path.string()},
      {"bootstrap", std::to_string(args.bootstrap)},
      {"gof", std::to_string(args.gof)},
      {"seed", std::to_string(args.seed)},
  };
  if (args.bootstrap == 0) manifest["bootstrap_omitted"] = "true";
  detail::write_manifest(args.out_dir / "manifest.txt", manifest);
}

// ---------------------------------------------------------------------------
// infer: pilot tuning followed by the main MCMC run. One draws file and one
// latent-snapshot file per force per chain.
// ---------------------------------------------------------------------------

struct InferArgs {
  std::filesystem::path data_path;
  std::filesystem::path out_dir = "infer-out";
  long long iterations = 1'100'000;
  long long burn_in = 100'000;
  long long thin = 100;
  int latent_block = 10;
  long long latent_stride = 10;
  long long pilot_iterations = 50'000;  // 0 disables the pilot
  int chains = 1;
  std::uint64_t seed = 1;
  std::string body = "power-law";
  std::string variant = "exponential-linear";
  std::optional<double> fix_alpha;
  std::optional<double> fix_lambda;
  std::optional<double> fix_mu;
  std::optional<double> fix_p;
  long long progress_stride = 0;
};

inline BodyKind body_from_string(const std::string& s) {
  if (s == "power-law") return BodyKind::power_law;
  if (s == "lognormal") return BodyKind::discrete_lognormal;
  throw UsageError("unknown body distribution '" + s + "' (power-law or lognormal)");
}

namespace detail {

inline std::vector<std::string> draw_columns(const ParamMap& map) {
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < map.dim(); ++i) cols.push_back(map.coord_name(i));
  return cols;
}

inline void write_draws(const std::filesystem::path& path, const PosteriorSample& sample,
                        const ParamMap& map) {
  auto out = open_output(path);
  out << "iteration";
  for (const auto& c : draw_columns(map)) out << ',' << c;
  out << ",log_posterior\n";
  for (const auto& d : sample.draws) {
    out << d.iteration;
    for (std::size_t i = 0; i < map.dim(); ++i)
      out << ',' << fmt_double(ParamMap::get(d.params, map.coords()[i]));
    out << ',' << fmt_double(d.log_posterior) << '\n';
  }
}

inline void write_latents(const std::filesystem::path& path, const PosteriorSample& sample,
                          std::size_t force) {
  auto out = open_output(path);
  out << "iteration";
  if (!sample.snapshots.empty())
    for (std::size_t i = 0; i < sample.snapshots.front().latents[force].size(); ++i)
      out << ",x_" << i;
  out << '\n';
  for (const auto& snap : sample.snapshots) {
    out << snap.iteration;
    for (const long long x : snap.latents[force]) out << ',' << x;
    out << '\n';
  }
}

}  // namespace detail

inline void cmd_infer(const InferArgs& args) {
  if (args.data_path.empty()) throw UsageError("infer: --data is required");
  if (args.iterations < 1) throw UsageError("infer: --iterations must be >= 1");
  if (args.burn_in < 0 || args.burn_in >= args.iterations)
    throw UsageError("infer: --burn-in must lie in [0, iterations)");
  if (args.thin < 1) throw UsageError("infer: --thin must be >= 1");
  if (args.chains < 1) throw UsageError("infer: --chains must be >= 1");
  if (args.pilot_iterations != 0 && args.pilot_iterations < 10'000)
    throw UsageError("infer: --pilot-iterations must be 0 or >= 10000");
  const BodyKind body = body_from_string(args.body);
  const ObsVariant variant = variant_from_string(args.variant);

  const ObservedDataset dataset = load_csv(args.data_path);
  const InferenceData data = InferenceData::from_dataset(dataset);
  std::vector<ForceSetup> setups;
  for (const auto& fd : data.forces) {
    ForceSetup s;
    s.body = body;
    s.variant = variant;
    s.side = fd.side;
    s.fix_alpha = args.fix_alpha;
    s.fix_lambda = args.fix_lambda;
    s.fix_mu = args.fix_mu;
    s.fix_p = args.fix_p;
    setups.push_back(s);
  }
  const PriorSpec priors;
  const ParamMap map(setups);
  detail::ensure_out_dir(args.out_dir);

  std::map<std::string, std::string> manifest{
      {"command", "infer"},
      {"data", args.data_path.string()},
      {"iterations", std::to_string(args.iterations)},
      {"burn_in", std::to_string(args.burn_in)},
      {"thin", std::to_string(args.thin)},
      {"latent_block", std::to_string(args.latent_block)},
      {"latent_stride", std::to_string(args.latent_stride)},
      {"pilot_iterations", std::to_string(args.pilot_iterations)},
      {"chains", std::to_string(args.chains)},
      {"seed", std::to_string(args.seed)},
      {"body", args.body},
      {"variant", args.variant},
  };

  auto stats = detail::open_output(args.out_dir / "chain_stats.txt");
  for (int chain = 0; chain < args.chains; ++chain) {
    const std::uint64_t chain_seed = derive_seed(args.seed, static_cast<std::uint64_t>(chain));
    McmcConfig config;
    config.iterations = args.iterations;
    config.burn_in = args.burn_in;
    config.thin = args.thin;
    config.latent_block_size = args.latent_block;
    config.latent_snapshot_stride = args.latent_stride;
    config.seed = derive_seed(chain_seed, 1);
    config.progress_stride = args.progress_stride;
    if (args.progress_stride > 0)
      config.progress = [chain](long long t, long long total) {
        std::fprintf(stderr, "chain %d: %lld / %lld iterations\n", chain,
                     static_cast<long long>(t), static_cast<long long>(total));
      };
    bool pilot_fallback = false;
    if (args.pilot_iterations > 0) {
      const PilotResult pilot =
          pilot_tune(data, setups, priors, args.pilot_iterations, derive_seed(chain_seed, 0));
      config.proposal_cov = pilot.proposal_cov;
      if (pilot.has_init) config.init = pilot.init_params;
      pilot_fallback = pilot.fallback;
    }
    const PosteriorSample sample = run_chain(data, setups, priors, config);

    const std::string suffix = args.chains > 1 ? "_chain" + std::to_string(chain) : "";
    detail::write_draws(args.out_dir / ("draws" + suffix + ".csv"), sample, map);
    for (std::size_t f = 0; f < data.forces.size(); ++f)
      detail::write_latents(
          args.out_dir /
              ("latents" + suffix + "_" + to_string(data.forces[f].side) + ".csv"),
          sample, f);

    const std::string prefix = args.chains > 1 ? "chain" + std::to_string(chain) + "." : "";
    stats << prefix << "acceptance_rate = " << detail::fmt_double(sample.acceptance_rate)
          << '\n';
    stats << prefix << "draw_count = " << sample.draws.size() << '\n';
    stats << prefix << "pilot_fallback = " << (pilot_fallback ? "true" : "false") << '\n';
    for (const auto& [name, ess] : sample.ess)
      stats << prefix << "ess." << name << " = " << detail::fmt_double(ess) << '\n';
  }
  detail::write_manifest(args.out_dir / "manifest.txt", manifest);
}

// ---------------------------------------------------------------------------
// predict: consume draws + latent snapshots, emit per-draw totals, summaries
// and the observation-probability threshold.
// ---------------------------------------------------------------------------

struct PredictArgs {
  std::filesystem::path run_dir;    // directory produced by `infer`
  std::filesystem::path data_path;  // the dataset the chain was fitted to
  std::filesystem::path out_dir = "predict-out";
  double level = 0.95;
  std::uint64_t seed = 1;
};

namespace detail {

// Reconstruct a PosteriorSample (params + latent sums) from the files
// written by cmd_infer. Only draws with latent snapshots are usable for
// predictive totals.
inline PosteriorSample load_run(const std::filesystem::path& run_dir,
                                const InferenceData& data,
                                const std::vector<ForceSetup>& setups) {
  const ParamMap map(setups);
  std::ifstream draws_in(run_dir / "draws.csv");
  if (!draws_in)
    throw std::runtime_error("cannot open draws file in " + run_dir.string() +
                             " (multi-chain runs: point --run at one chain's files)");
  std::string line;
  if (!std::getline(draws_in, line)) throw std::runtime_error("draws file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string expected = "iteration";
  for (const auto& c : draw_columns(map)) expected += "," + c;
  expected += ",log_posterior";
  if (line != expected)
    throw std::runtime_error("draws header mismatch; expected '" + expected + "', got '" +
                             line + "'");

  std::map<long long, ParamDraw> by_iteration;
  while (std::getline(draws_in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != map.dim() + 2)
      throw std::runtime_error("bad draws row: " + line);
    ParamDraw d;
    d.iteration = std::stoll(fields[0]);
    d.params.forces.resize(setups.size());
    for (std::size_t f = 0; f < setups.size(); ++f) {
      d.params.forces[f].body = setups[f].body;
      d.params.forces[f].variant = setups[f].variant;
    }
    for (std::size_t i = 0; i < map.dim(); ++i)
      ParamMap::set(d.params, map.coords()[i], std::stod(fields[i + 1]));
    d.log_posterior = std::stod(fields[map.dim() + 1]);
    by_iteration[d.iteration] = std::move(d);
  }
  if (by_iteration.empty()) throw std::runtime_error("draws file has no rows");

  PosteriorSample sample;
  sample.setups = setups;
  for (const auto& fd : data.forces) sample.n_obs.push_back(fd.z.size());

  // latent snapshots per force, joined on iteration
  std::map<long long, std::vector<long long>> sums;  // iteration -> per-force sums
  for (std::size_t f = 0; f < data.forces.size(); ++f) {
    const auto path =
        run_dir / ("latents_" + to_string(data.forces[f].side) + ".csv");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open latent snapshots: " + path.string());
    if (!std::getline(in, line)) throw std::runtime_error("latent file is empty");
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != data.forces[f].z.size() + 1)
        throw std::runtime_error("latent snapshot row has wrong width in " + path.string());
      const long long iter = std::stoll(fields[0]);
      long long s = 0;
      for (std::size_t i = 1; i < fields.size(); ++i) s += std::stoll(fields[i]);
      auto& vec = sums[iter];
      vec.resize(data.forces.size(), 0);
      vec[f] = s;
    }
  }
  for (const auto& [iter, latent_sums] : sums) {
    const auto it = by_iteration.find(iter);
    if (it == by_iteration.end())
      throw std::runtime_error("latent snapshot at iteration " + std::to_string(iter) +
                               " has no matching draw");
    ParamDraw d = it->second;
    d.latent_sums = latent_sums;
    sample.draws.push_back(std::move(d));
  }
  if (sample.draws.empty())
    throw std::runtime_error("no draws with latent snapshots found in " + run_dir.string());
  return sample;
}

}  // namespace detail

inline void cmd_predict(const PredictArgs& args) {
  if (args.run_dir.empty()) throw UsageError("predict: --run is required");
  if (args.data_path.empty()) throw UsageError("predict: --data is required");
  if (!(args.level >= 0.0 && args.level < 1.0))
    throw UsageError("predict: --level must lie in [0, 1)");

  const ObservedDataset dataset = load_csv(args.data_path);
  const InferenceData data = InferenceData::from_dataset(dataset);

  // Reconstruct the run configuration from its manifest.
  const auto manifest_path = args.run_dir / "manifest.txt";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in)
    throw std::runtime_error("cannot open run manifest: " + manifest_path.string());
  std::map<std::string, std::string> run_kv;
  std::string line;
  while (std::getline(manifest_in, line)) {
    const auto pos = line.find(" = ");
    if (pos != std::string::npos) run_kv[line.substr(0, pos)] = line.substr(pos + 3);
  }
  const BodyKind body = body_from_string(run_kv.count("body") ? run_kv["body"] : "power-law");
  const ObsVariant variant = variant_from_string(
      run_kv.count("variant") ? run_kv["variant"] : "exponential-linear");

  std::vector<ForceSetup> setups;
  for (const auto& fd : data.forces) {
    ForceSetup s;
    s.body = body;
    s.variant = variant;
    s.side = fd.side;
    setups.push_back(s);
  }
  const PosteriorSample sample = detail::load_run(args.run_dir, data, setups);

  detail::ensure_out_dir(args.out_dir);
  bool tail_warning = false;
  const auto draws = predictive_totals(sample, data, args.seed, &tail_warning);
  if (tail_warning)
    std::fprintf(stderr, "predict: missing-severity tail mass exceeded 1e-6 at the cap\n");

  auto per_draw = detail::open_output(args.out_dir / "predictive.csv");
  per_draw << "iteration,side,n_true,total_true,total_observed\n";
  for (const auto& d : draws)
    for (const auto& f : d.forces)
      per_draw << d.iteration << ',' << to_string(f.side) << ',' << f.n_true << ','
               << f.total_true << ',' << f.total_observed << '\n';

  auto summary = detail::open_output(args.out_dir / "predictive_summary.txt");
  for (const auto& s : summarize_predictive(draws)) {
    const std::string tag = to_string(s.side);
    summary << tag << ".n_true.mean = " << detail::fmt_double(s.n_true_mean) << '\n';
    summary << tag << ".n_true.median = " << detail::fmt_double(s.n_true_median) << '\n';
    summary << tag << ".n_true.lo95 = " << detail::fmt_double(s.n_true_lo) << '\n';
    summary << tag << ".n_true.hi95 = " << detail::fmt_double(s.n_true_hi) << '\n';
    summary << tag << ".total_true.mean = " << detail::fmt_double(s.total_mean) << '\n';
    summary << tag << ".total_true.median = " << detail::fmt_double(s.total_median) << '\n';
    summary << tag << ".total_true.lo95 = " << detail::fmt_double(s.total_lo) << '\n';
    summary << tag << ".total_true.hi95 = " << detail::fmt_double(s.total_hi) << '\n';
    summary << tag << ".total_observed = " << s.total_observed << '\n';
  }

  auto thresholds = detail::open_output(args.out_dir / "thresholds.txt");
  thresholds << "level = " << detail::fmt_double(args.level) << '\n';
  for (std::size_t f = 0; f < data.forces.size(); ++f) {
    const std::string tag = to_string(data.forces[f].side);
    if (variant == ObsVariant::exponential_linear) {
      thresholds << tag << ".x_threshold = " << x_threshold(sample, f, args.level) << '\n';
    } else {
      thresholds << tag << ".x_threshold = n/a\n";
    }
  }

  std::map<std::string, std::string> manifest{
      {"command", "predict"},
      {"run", args.run_dir.string()},
      {"data", args.data_path.string()},
      {"level", detail::fmt_double(args.level)},
      {"seed", std::to_string(args.seed)},
      {"predictive_draws", std::to_string(draws.size())},
  };
  detail::write_manifest(args.out_dir / "manifest.txt", manifest);
}

// ---------------------------------------------------------------------------
// diagnose: effective sample sizes and summary statistics for a draws file.
// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::filesystem::path draws_path;
  std::filesystem::path stats_path;  // optional chain_stats.txt to echo
  std::filesystem::path out_dir = "diagnose-out";
};

inline void cmd_diagnose(const DiagnoseArgs& args) {
  if (args.draws_path.empty()) throw UsageError("diagnose: --draws is required");
  std::ifstream in(args.draws_path);
  if (!in) throw std::runtime_error("cannot open draws file: " + args.draws_path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("draws file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header.front() != "iteration")
    throw std::runtime_error("unrecognized draws header");
  std::vector<std::vector<double>> columns(header.size());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) throw std::runtime_error("bad draws row: " + line);
    for (std::size_t i = 0; i < fields.size(); ++i)
      columns[i].push_back(std::stod(fields[i]));
  }
  if (columns[0].empty()) throw std::runtime_error("draws file has no rows");

  detail::ensure_out_dir(args.out_dir);
  auto out = detail::open_output(args.out_dir / "diagnostics.txt");
  out << "draw_count = " << columns[0].size() << '\n';
  if (!args.stats_path.empty()) {
    std::ifstream stats(args.stats_path);
    if (!stats)
      throw std::runtime_error("cannot open stats file: " + args.stats_path.string());
    while (std::getline(stats, line))
      if (line.find("acceptance_rate") != std::string::npos) out << line << '\n';
  }
  // plot-ready per-parameter traces
  for (std::size_t i = 1; i < header.size(); ++i) {
    auto trace = detail::open_output(args.out_dir / ("trace_" + header[i] + ".csv"));
    trace << "iteration," << header[i] << '\n';
    for (std::size_t r = 0; r < columns[i].size(); ++r)
      trace << static_cast<long long>(columns[0][r]) << ','
            << detail::fmt_double(columns[i][r]) << '\n';
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    const auto& series = columns[i];
    double mean = 0.0;
    for (const double x : series) mean += x;
    mean /= static_cast<double>(series.size());
    std::vector<double> sorted(series);
    std::sort(sorted.begin(), sorted.end());
    out << header[i] << ".mean = " << detail::fmt_double(mean) << '\n';
    out << header[i] << ".median = "
        << detail::fmt_double(detail::quantile_sorted(sorted, 0.5)) << '\n';
    out << header[i] << ".lo95 = "
        << detail::fmt_double(detail::quantile_sorted(sorted, 0.025)) << '\n';
    out << header[i] << ".hi95 = "
        << detail::fmt_double(detail::quantile_sorted(sorted, 0.975)) << '\n';
    if (series.size() >= 10) {
      try {
        out << header[i] << ".ess = " << detail::fmt_double(effective_sample_size(series))
            << '\n';
      } catch (const std::invalid_argument&) {
        out << header[i] << ".ess = n/a\n";
      }
    }
  }
}

}  // namespace plaw

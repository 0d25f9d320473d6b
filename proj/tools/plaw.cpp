// plaw: power-law severity modeling with observation error.
//
// Subcommands: simulate, fit-csn, infer, predict, diagnose.
// Exit codes: 0 success, 2 usage/config error, 1 runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include "plaw/cli.hpp"

namespace {

// Merge `key=value` lines from --config into the argument list, skipping any
// key whose flag already appears on the command line: flags win.
std::vector<std::string> merge_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) return args;  // the registered option reports the missing file
  std::string line;
  while (std::getline(in, line)) {
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") continue;
    const std::string flag = "--" + key;
    bool given = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) given = true;
    if (given) continue;
    args.push_back(flag);
    args.push_back(value);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-law severity modeling with layered observation errors"};
  app.require_subcommand(1);

  plaw::SimulateArgs sim;
  std::filesystem::path config_file;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corrupted dataset");
  simulate->add_option("--config", config_file,
                       "Read options from a key=value config file (flags win)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out_dir, "Output directory");
  simulate->add_option("--alpha", sim.alpha, "Power-law scaling exponent");
  simulate->add_option("--lambda", sim.lambda, "Base observation rate");
  simulate->add_option("--mu", sim.mu, "Observation size effect");
  simulate->add_option("--eta", sim.eta, "Quadratic observation effect");
  simulate->add_option("--variant", sim.variant,
                       "Observation variant: exponential-linear, exponential-quadratic, logistic");
  simulate->add_option("--heap-p", sim.heap_p, "Probability a recorded count is rounded");
  simulate->add_option("--n-true", sim.n_true, "Number of true events to generate");
  simulate->add_option("--side", sim.side, "Side label for the generated records (US or Native)");
  simulate->add_option("--seed", sim.seed, "RNG seed");

  plaw::FitCsnArgs fit;
  auto* fit_csn = app.add_subcommand("fit-csn", "Frequentist power-law tail fit");
  fit_csn->add_option("--config", config_file,
                      "Read options from a key=value config file (flags win)")
      ->check(CLI::ExistingFile);
  fit_csn->add_option("--data", fit.data_path, "Input dataset CSV")->required();
  fit_csn->add_option("--out", fit.out_dir, "Output directory");
  fit_csn->add_option("--bootstrap", fit.bootstrap, "Bootstrap rounds (0 to skip)");
  fit_csn->add_option("--gof", fit.gof, "Goodness-of-fit bootstrap rounds (0 to skip)");
  fit_csn->add_option("--seed", fit.seed, "RNG seed");

  plaw::InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Bayesian MCMC over the observation-error model");
  infer_cmd->add_option("--config", config_file,
                        "Read options from a key=value config file (flags win)")
      ->check(CLI::ExistingFile);
  infer_cmd->add_option("--data", infer.data_path, "Input dataset CSV")->required();
  infer_cmd->add_option("--out", infer.out_dir, "Output directory");
  infer_cmd->add_option("--iterations", infer.iterations, "MCMC iterations");
  infer_cmd->add_option("--burn-in", infer.burn_in, "Iterations discarded as burn-in");
  infer_cmd->add_option("--thin", infer.thin, "Keep every thin-th iteration");
  infer_cmd->add_option("--latent-block", infer.latent_block,
                        "Latent counts perturbed per iteration");
  infer_cmd->add_option("--latent-stride", infer.latent_stride,
                        "Latent snapshot stride, in kept draws");
  infer_cmd->add_option("--pilot-iterations", infer.pilot_iterations,
                        "Pilot run length for proposal tuning (0 disables)");
  infer_cmd->add_option("--chains", infer.chains, "Independent chains");
  infer_cmd->add_option("--seed", infer.seed, "RNG seed");
  infer_cmd->add_option("--body", infer.body, "Severity body: power-law or lognormal");
  infer_cmd->add_option("--variant", infer.variant, "Observation variant");
  double fix_alpha = 0, fix_lambda = 0, fix_mu = 0, fix_p = 0;
  auto* oa = infer_cmd->add_option("--fix-alpha", fix_alpha, "Hold alpha fixed");
  auto* ol = infer_cmd->add_option("--fix-lambda", fix_lambda, "Hold lambda fixed");
  auto* om = infer_cmd->add_option("--fix-mu", fix_mu, "Hold mu fixed");
  auto* op = infer_cmd->add_option("--fix-p", fix_p, "Hold the heaping probability fixed");
  infer_cmd->add_option("--progress-stride", infer.progress_stride,
                        "Progress line every N iterations (stderr; 0 = silent)");

  plaw::PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Posterior-predictive totals and thresholds");
  predict_cmd->add_option("--config", config_file,
                          "Read options from a key=value config file (flags win)")
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("--run", predict.run_dir, "Directory written by infer")->required();
  predict_cmd->add_option("--data", predict.data_path, "Dataset the chain was fitted to")
      ->required();
  predict_cmd->add_option("--out", predict.out_dir, "Output directory");
  predict_cmd->add_option("--level", predict.level, "Observation-probability threshold level");
  predict_cmd->add_option("--seed", predict.seed, "RNG seed");

  plaw::DiagnoseArgs diagnose;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "ESS and summaries for a draws file");
  diagnose_cmd->add_option("--config", config_file,
                           "Read options from a key=value config file (flags win)")
      ->check(CLI::ExistingFile);
  diagnose_cmd->add_option("--draws", diagnose.draws_path, "Draws CSV from infer")->required();
  diagnose_cmd->add_option("--stats", diagnose.stats_path,
                           "chain_stats.txt to echo the acceptance rate from");
  diagnose_cmd->add_option("--out", diagnose.out_dir, "Output directory");

  try {
    std::vector<std::string> args = merge_config_args(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      plaw::cmd_simulate(sim);
    } else if (*fit_csn) {
      plaw::cmd_fit_csn(fit);
    } else if (*infer_cmd) {
      if (*oa) infer.fix_alpha = fix_alpha;
      if (*ol) infer.fix_lambda = fix_lambda;
      if (*om) infer.fix_mu = fix_mu;
      if (*op) infer.fix_p = fix_p;
      plaw::cmd_infer(infer);
    } else if (*predict_cmd) {
      plaw::cmd_predict(predict);
    } else if (*diagnose_cmd) {
      plaw::cmd_diagnose(diagnose);
    }
  } catch (const plaw::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

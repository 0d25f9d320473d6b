#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plaw/dataset.hpp"
#include "plaw/distributions.hpp"
#include "plaw/error_model.hpp"
#include "plaw/rng.hpp"

namespace plaw {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Observation rates below this are rejected by the prior. The prior mass cut
// away is ~1e-9; below it the observation-normalizer series would need
// millions of terms per proposal.
inline constexpr double kMinRate = 1e-5;

inline constexpr double kAlphaLo = 1.5;
inline constexpr double kAlphaHi = 3.0;

// ---------------------------------------------------------------------------
// Model parameters. One ForceParams block per force; the two forces are
// linked only through the joint prior on their observation rates.
// ---------------------------------------------------------------------------

struct ForceParams {
  BodyKind body = BodyKind::power_law;
  ObsVariant variant = ObsVariant::exponential_linear;
  double alpha = 2.0;      // power-law body
  double mu_log = 1.0;     // discrete log-normal body
  double sigma_log = 1.0;  //
  double lambda = 0.05;
  double mu = 0.05;
  double eta = 0.001;      // exponential_quadratic only
  double p = 0.5;

  ObservationModel obs_model() const { return {variant, lambda, mu, eta}; }

  BodyDist body_dist() const {
    BodyDist b;
    b.kind = body;
    b.alpha = alpha;
    b.lognormal = {mu_log, sigma_log};
    return b;
  }
};

struct ModelParams {
  std::vector<ForceParams> forces;
};

// Which parameters are held fixed (not sampled).
struct ForceSetup {
  BodyKind body = BodyKind::power_law;
  ObsVariant variant = ObsVariant::exponential_linear;
  Side side = Side::Native;
  std::optional<double> fix_alpha;
  std::optional<double> fix_lambda;
  std::optional<double> fix_mu;
  std::optional<double> fix_p;
  std::optional<double> fix_eta;
};

struct ForceData {
  Side side = Side::Native;
  std::vector<long long> z;
};

struct InferenceData {
  std::vector<ForceData> forces;

  static InferenceData from_dataset(const ObservedDataset& dataset) {
    InferenceData out;
    for (const Side s : dataset.sides_present())
      out.forces.push_back({s, dataset.casualties_for(s)});
    if (out.forces.empty())
      throw std::invalid_argument("InferenceData: dataset has no records");
    return out;
  }
};

// ---------------------------------------------------------------------------
// Priors. Observation rates carry a bivariate log-normal prior across forces
// (or its marginal when a single force is fitted); the scaling exponent is
// uniform on [1.5, 3]; the heaping probability is uniform on [0, 1]; the
// log-normal body parameters get flat priors on wide boxes.
// ---------------------------------------------------------------------------

struct PriorSpec {
  BivariateLogNormalPrior rate_prior{};  // used for the lambda pair and the mu pair
  double mu_log_lo = -10.0, mu_log_hi = 10.0;
  double sigma_log_lo = 0.05, sigma_log_hi = 5.0;

  // Marginal index for a single-force fit: component 0 of the bivariate
  // prior belongs to the US force, component 1 to the Native force.
  static int component_for(Side side) { return side == Side::US ? 0 : 1; }
};

namespace detail {

inline double rate_pair_log_prior(double a, double b, const BivariateLogNormalPrior& prior) {
  return bivariate_lognormal_log_density(a, b, prior);
}

inline double rate_marginal_log_prior(double a, int component,
                                      const BivariateLogNormalPrior& prior) {
  return lognormal_log_density(a, prior.mean_log[static_cast<std::size_t>(component)],
                               prior.cov_log[component == 0 ? 0 : 3]);
}

}  // namespace detail

inline double log_prior(const ModelParams& params, const std::vector<ForceSetup>& setups,
                        const PriorSpec& priors) {
  if (params.forces.size() != setups.size() || params.forces.empty() ||
      params.forces.size() > 2)
    throw std::invalid_argument("log_prior: params/setups mismatch");
  double lp = 0.0;
  for (std::size_t f = 0; f < params.forces.size(); ++f) {
    const ForceParams& fp = params.forces[f];
    if (fp.body == BodyKind::power_law) {
      if (!(fp.alpha >= kAlphaLo && fp.alpha <= kAlphaHi)) return kNegInf;
    } else {
      if (!(fp.mu_log >= priors.mu_log_lo && fp.mu_log <= priors.mu_log_hi)) return kNegInf;
      if (!(fp.sigma_log >= priors.sigma_log_lo && fp.sigma_log <= priors.sigma_log_hi))
        return kNegInf;
    }
    if (!(fp.p >= 0.0 && fp.p <= 1.0)) return kNegInf;
    if (!(fp.mu >= kMinRate)) return kNegInf;
    if (fp.variant != ObsVariant::logistic && !(fp.lambda > 0.0)) return kNegInf;
    if (fp.variant == ObsVariant::exponential_quadratic && !(fp.eta >= kMinRate))
      return kNegInf;
  }
  const bool dual = params.forces.size() == 2;
  if (dual) {
    // force 0 = US component, force 1 = Native component by construction
    if (params.forces[0].variant != ObsVariant::logistic)
      lp += detail::rate_pair_log_prior(params.forces[0].lambda, params.forces[1].lambda,
                                        priors.rate_prior);
    lp += detail::rate_pair_log_prior(params.forces[0].mu, params.forces[1].mu,
                                      priors.rate_prior);
    for (std::size_t f = 0; f < 2; ++f)
      if (params.forces[f].variant == ObsVariant::exponential_quadratic)
        lp += detail::rate_marginal_log_prior(params.forces[f].eta,
                                              PriorSpec::component_for(setups[f].side),
                                              priors.rate_prior);
  } else {
    const int c = PriorSpec::component_for(setups[0].side);
    const ForceParams& fp = params.forces[0];
    if (fp.variant != ObsVariant::logistic)
      lp += detail::rate_marginal_log_prior(fp.lambda, c, priors.rate_prior);
    lp += detail::rate_marginal_log_prior(fp.mu, c, priors.rate_prior);
    if (fp.variant == ObsVariant::exponential_quadratic)
      lp += detail::rate_marginal_log_prior(fp.eta, c, priors.rate_prior);
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Likelihood. Per observed battle i with latent true count x_i:
//   ln obs(x_i) + ln body_pmf(x_i) - ln q + ln Pr(z_i | x_i, p)
// where q is the marginal probability that a battle is observed, so the
// latent count has a proper conditional-on-observed pmf.
// ---------------------------------------------------------------------------

inline double force_log_likelihood(const ForceParams& fp, const std::vector<long long>& z,
                                   const std::vector<long long>& latents) {
  if (z.size() != latents.size())
    throw std::invalid_argument("force_log_likelihood: latents misaligned with data");
  const ObservationModel model = fp.obs_model();
  const BodyDist body = fp.body_dist();
  const NormalizerResult norm = observation_normalizer_detailed(body, model);
  if (!(norm.q > 0.0)) return kNegInf;
  const double log_q = std::log(norm.q);
  const double log_zeta =
      fp.body == BodyKind::power_law ? log_hurwitz_zeta(fp.alpha, 1.0) : 0.0;
  double ll = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const long long x = latents[i];
    if (x < 1) return kNegInf;
    const double log_body = fp.body == BodyKind::power_law
                                ? -fp.alpha * detail::log_int(x) - log_zeta
                                : discrete_lognormal_log_pmf(x, body.lognormal);
    ll += log_obs_probability(x, model) + log_body - log_q +
          marginal_z_given_x_log(z[i], x, fp.p);
    if (ll == kNegInf) return kNegInf;
  }
  return ll;
}

// Likelihood with the latent counts integrated out exactly (the truncated
// sums are cut where the truncated-Poisson factor is negligible). Used for
// the mode-finding chain start; the sampler itself keeps the latents.
inline double marginal_force_log_likelihood(const ForceParams& fp,
                                            const std::vector<long long>& z) {
  const ObservationModel model = fp.obs_model();
  const BodyDist body = fp.body_dist();
  const NormalizerResult norm = observation_normalizer_detailed(body, model);
  if (!(norm.q > 0.0)) return kNegInf;
  const double log_q = std::log(norm.q);
  double ll = 0.0;
  for (const long long zi : z) {
    const long long spread =
        8 * static_cast<long long>(std::sqrt(static_cast<double>(zi))) + 45;
    const long long x_lo = std::max<long long>(1, zi - spread);
    const long long x_hi = zi + spread;
    double li = 0.0;
    for (long long x = x_lo; x <= x_hi; ++x) {
      const double log_term = log_obs_probability(x, model) + body.log_pmf(x) - log_q +
                              marginal_z_given_x_log(zi, x, fp.p);
      li += std::exp(log_term);
    }
    if (!(li > 0.0)) return kNegInf;
    ll += std::log(li);
  }
  return ll;
}

// ---------------------------------------------------------------------------
// Chain state and configuration.
// ---------------------------------------------------------------------------

struct ChainState {
  ModelParams params;
  std::vector<std::vector<long long>> latents;  // one vector per force
  double log_posterior = kNegInf;               // cached; audited periodically
};

inline double log_posterior(const ChainState& state, const InferenceData& data,
                            const std::vector<ForceSetup>& setups, const PriorSpec& priors) {
  const double lp = log_prior(state.params, setups, priors);
  if (lp == kNegInf) return kNegInf;
  double ll = 0.0;
  for (std::size_t f = 0; f < data.forces.size(); ++f) {
    ll += force_log_likelihood(state.params.forces[f], data.forces[f].z, state.latents[f]);
    if (ll == kNegInf) return kNegInf;
  }
  return lp + ll;
}

struct McmcConfig {
  long long iterations = 1'100'000;
  long long burn_in = 100'000;
  long long thin = 100;
  int latent_block_size = 10;
  long long latent_snapshot_stride = 10;  // in kept draws
  std::uint64_t seed = 1;
  std::vector<double> proposal_cov;  // row-major over free transformed coords
  std::optional<ModelParams> init;   // starting point (pilot warm start)
  long long audit_stride = 10'000;
  long long progress_stride = 0;  // 0 = silent
  std::function<void(long long, long long)> progress;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("McmcConfig: iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations)
      throw std::invalid_argument("McmcConfig: burn_in must lie in [0, iterations)");
    if (thin < 1) throw std::invalid_argument("McmcConfig: thin must be >= 1");
    if (latent_block_size < 1)
      throw std::invalid_argument("McmcConfig: latent_block_size must be >= 1");
    if (latent_snapshot_stride < 1)
      throw std::invalid_argument("McmcConfig: latent_snapshot_stride must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Transformed parameter coordinates: log scale for positive rates, logit for
// the heaping probability, identity for the exponent and the log-normal
// location. A symmetric Gaussian walk in this space plus the Jacobian terms
// in the acceptance ratio realizes the random-walk proposal on the naturals.
// ---------------------------------------------------------------------------

enum class ParamField { alpha, mu_log, sigma_log, lambda, mu, eta, p };

enum class Transform { identity, log_scale, logit };

struct ParamCoord {
  std::size_t force = 0;
  ParamField field = ParamField::alpha;
  Transform transform = Transform::identity;
};

inline const char* field_name(ParamField f) {
  switch (f) {
    case ParamField::alpha: return "alpha";
    case ParamField::mu_log: return "mu_log";
    case ParamField::sigma_log: return "sigma_log";
    case ParamField::lambda: return "lambda";
    case ParamField::mu: return "mu";
    case ParamField::eta: return "eta";
    case ParamField::p: return "p";
  }
  return "?";
}

class ParamMap {
 public:
  explicit ParamMap(const std::vector<ForceSetup>& setups) : setups_(setups) {
    for (std::size_t f = 0; f < setups.size(); ++f) {
      const ForceSetup& s = setups[f];
      if (s.body == BodyKind::power_law) {
        if (!s.fix_alpha) coords_.push_back({f, ParamField::alpha, Transform::identity});
      } else {
        coords_.push_back({f, ParamField::mu_log, Transform::identity});
        coords_.push_back({f, ParamField::sigma_log, Transform::log_scale});
      }
      if (s.variant != ObsVariant::logistic && !s.fix_lambda)
        coords_.push_back({f, ParamField::lambda, Transform::log_scale});
      if (!s.fix_mu) coords_.push_back({f, ParamField::mu, Transform::log_scale});
      if (s.variant == ObsVariant::exponential_quadratic && !s.fix_eta)
        coords_.push_back({f, ParamField::eta, Transform::log_scale});
      if (!s.fix_p) coords_.push_back({f, ParamField::p, Transform::logit});
    }
  }

  std::size_t dim() const { return coords_.size(); }
  const std::vector<ParamCoord>& coords() const { return coords_; }

  std::string coord_name(std::size_t i) const {
    const ParamCoord& c = coords_[i];
    const std::string suffix = setups_[c.force].side == Side::US ? "_U" : "_N";
    return std::string(field_name(c.field)) + suffix;
  }

  static double get(const ModelParams& params, const ParamCoord& c) {
    const ForceParams& fp = params.forces[c.force];
    switch (c.field) {
      case ParamField::alpha: return fp.alpha;
      case ParamField::mu_log: return fp.mu_log;
      case ParamField::sigma_log: return fp.sigma_log;
      case ParamField::lambda: return fp.lambda;
      case ParamField::mu: return fp.mu;
      case ParamField::eta: return fp.eta;
      case ParamField::p: return fp.p;
    }
    return 0.0;
  }

  static void set(ModelParams& params, const ParamCoord& c, double value) {
    ForceParams& fp = params.forces[c.force];
    switch (c.field) {
      case ParamField::alpha: fp.alpha = value; break;
      case ParamField::mu_log: fp.mu_log = value; break;
      case ParamField::sigma_log: fp.sigma_log = value; break;
      case ParamField::lambda: fp.lambda = value; break;
      case ParamField::mu: fp.mu = value; break;
      case ParamField::eta: fp.eta = value; break;
      case ParamField::p: fp.p = value; break;
    }
  }

  std::vector<double> to_vector(const ModelParams& params) const {
    std::vector<double> v(coords_.size());
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      const double x = get(params, coords_[i]);
      switch (coords_[i].transform) {
        case Transform::identity: v[i] = x; break;
        case Transform::log_scale: v[i] = std::log(x); break;
        case Transform::logit: v[i] = std::log(x / (1.0 - x)); break;
      }
    }
    return v;
  }

  void from_vector(const std::vector<double>& v, ModelParams& params) const {
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      double x = v[i];
      switch (coords_[i].transform) {
        case Transform::identity: break;
        case Transform::log_scale: x = std::exp(x); break;
        case Transform::logit: x = 1.0 / (1.0 + std::exp(-x)); break;
      }
      set(params, coords_[i], x);
    }
  }

  // ln |d theta / d v|: e^v for log coordinates, p(1-p) for logit ones. Added
  // to the log target so the Gaussian walk on v is symmetric.
  double log_jacobian(const ModelParams& params) const {
    double lj = 0.0;
    for (const ParamCoord& c : coords_) {
      const double x = get(params, c);
      switch (c.transform) {
        case Transform::identity: break;
        case Transform::log_scale: lj += std::log(x); break;
        case Transform::logit: lj += std::log(x) + std::log1p(-x); break;
      }
    }
    return lj;
  }

 private:
  std::vector<ForceSetup> setups_;
  std::vector<ParamCoord> coords_;
};

// ---------------------------------------------------------------------------
// Dense Cholesky for the proposal covariance (dimension <= 10).
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<std::vector<double>> cholesky(const std::vector<double>& cov,
                                                   std::size_t d) {
  std::vector<double> chol(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = cov[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= chol[i * d + k] * chol[j * d + k];
      if (i == j) {
        if (!(s > 0.0)) return std::nullopt;
        chol[i * d + i] = std::sqrt(s);
      } else {
        chol[i * d + j] = s / chol[j * d + j];
      }
    }
  }
  return chol;
}

}  // namespace detail

// Symmetric Gaussian step in the transformed space.
inline ModelParams propose_params(const ModelParams& current, const ParamMap& map,
                                  const std::vector<double>& chol, RngStream& rng) {
  const std::size_t d = map.dim();
  std::vector<double> v = map.to_vector(current);
  std::vector<double> eps(d);
  for (auto& e : eps) e = rng.normal();
  for (std::size_t i = 0; i < d; ++i) {
    double step = 0.0;
    for (std::size_t j = 0; j <= i; ++j) step += chol[i * d + j] * eps[j];
    v[i] += step;
  }
  ModelParams proposal = current;
  map.from_vector(v, proposal);
  return proposal;
}

// Truncated-Poisson random walk on a block of latent counts chosen uniformly
// without replacement. The kernel is asymmetric, so both directed densities
// are returned for the acceptance ratio.
struct LatentProposal {
  std::vector<long long> latents;
  double log_q_forward = 0.0;
  double log_q_backward = 0.0;
};

inline LatentProposal propose_latents(const std::vector<long long>& latents,
                                      int block_size, RngStream& rng) {
  if (latents.empty()) throw std::invalid_argument("propose_latents: no latents");
  if (block_size < 1 || static_cast<std::size_t>(block_size) > latents.size())
    throw std::invalid_argument("propose_latents: block_size must lie in [1, n]");
  const std::size_t n = latents.size();
  const std::size_t k = static_cast<std::size_t>(block_size);
  // Floyd's algorithm for a uniform k-subset.
  std::set<std::size_t> chosen;
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = static_cast<std::size_t>(rng.uniform_below(j + 1));
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  LatentProposal out;
  out.latents = latents;
  for (const std::size_t i : chosen) {
    const long long x = latents[i];
    const long long x_star = truncated_poisson_sample(static_cast<double>(x), rng);
    out.latents[i] = x_star;
    out.log_q_forward += truncated_poisson_log_pmf(x_star, static_cast<double>(x));
    out.log_q_backward += truncated_poisson_log_pmf(x, static_cast<double>(x_star));
  }
  return out;
}

// ---------------------------------------------------------------------------
// One Metropolis-Hastings step: parameters and a latent block are proposed
// and accepted jointly,
//   min{ 1, [pi(theta*, x* | z) q(x | x*)] / [pi(theta, x | z) q(x* | x)] }
// with the Gaussian parameter kernel symmetric in the transformed space.
// ---------------------------------------------------------------------------

struct MhStepResult {
  bool accepted = false;
};

namespace detail {

struct MhWorkspace {
  const InferenceData* data = nullptr;
  const std::vector<ForceSetup>* setups = nullptr;
  const PriorSpec* priors = nullptr;
  const ParamMap* map = nullptr;
  std::vector<double> chol;
  int latent_block = 10;
  long long iteration = 0;
};

inline double log_target(const ChainState& state, const MhWorkspace& ws) {
  if (state.log_posterior == kNegInf) return kNegInf;
  return state.log_posterior + ws.map->log_jacobian(state.params);
}

inline MhStepResult mh_step_impl(ChainState& state, MhWorkspace& ws, RngStream& rng) {
  ChainState proposal;
  proposal.params = ws.map->dim() > 0
                        ? propose_params(state.params, *ws.map, ws.chol, rng)
                        : state.params;
  proposal.latents = state.latents;
  double log_q_fwd = 0.0, log_q_bwd = 0.0;
  const std::size_t n_forces = state.latents.size();
  const std::size_t force = static_cast<std::size_t>(ws.iteration) % n_forces;
  {
    const int block =
        std::min<int>(ws.latent_block, static_cast<int>(state.latents[force].size()));
    LatentProposal lp = propose_latents(state.latents[force], block, rng);
    proposal.latents[force] = std::move(lp.latents);
    log_q_fwd = lp.log_q_forward;
    log_q_bwd = lp.log_q_backward;
  }
  proposal.log_posterior = log_posterior(proposal, *ws.data, *ws.setups, *ws.priors);
  const double target_prop = log_target(proposal, ws);
  if (target_prop == kNegInf) return {false};
  const double target_cur = log_target(state, ws);
  const double log_accept = target_cur == kNegInf
                                ? 0.0  // escape an invalid start
                                : target_prop - target_cur + log_q_bwd - log_q_fwd;
  if (log_accept >= 0.0 || std::log(rng.uniform_pos()) < log_accept) {
    state = std::move(proposal);
    return {true};
  }
  return {false};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Effective sample size via the initial-positive-sequence estimator:
// N / (1 + 2 sum rho_k), autocorrelations accumulated until the first
// negative estimate.
// ---------------------------------------------------------------------------

inline double effective_sample_size(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 10) throw std::invalid_argument("effective_sample_size: need at least 10 points");
  double mean = 0.0;
  for (const double x : series) mean += x;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (const double x : series) c0 += (x - mean) * (x - mean);
  c0 /= static_cast<double>(n);
  if (!(c0 > 0.0))
    throw std::invalid_argument("effective_sample_size: series is constant");
  double rho_sum = 0.0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    double ck = 0.0;
    for (std::size_t t = 0; t + k < n; ++t)
      ck += (series[t] - mean) * (series[t + k] - mean);
    ck /= static_cast<double>(n);
    const double rho = ck / c0;
    if (rho < 0.0) break;
    rho_sum += rho;
  }
  return static_cast<double>(n) / (1.0 + 2.0 * rho_sum);
}

// ---------------------------------------------------------------------------
// Chain driver.
// ---------------------------------------------------------------------------

struct ParamDraw {
  long long iteration = 0;
  ModelParams params;
  double log_posterior = 0.0;
  std::vector<long long> latent_sums;  // per force
};

struct LatentSnapshot {
  long long iteration = 0;
  std::vector<std::vector<long long>> latents;
};

struct PosteriorSample {
  std::vector<ParamDraw> draws;
  std::vector<LatentSnapshot> snapshots;
  double acceptance_rate = 0.0;
  std::map<std::string, double> ess;
  std::vector<ForceSetup> setups;
  std::vector<std::size_t> n_obs;  // per force
};

inline ChainState initial_state(const InferenceData& data,
                                const std::vector<ForceSetup>& setups) {
  ChainState state;
  state.params.forces.resize(setups.size());
  state.latents.resize(setups.size());
  for (std::size_t f = 0; f < setups.size(); ++f) {
    ForceParams& fp = state.params.forces[f];
    fp.body = setups[f].body;
    fp.variant = setups[f].variant;
    fp.alpha = setups[f].fix_alpha.value_or(2.0);
    fp.lambda = setups[f].fix_lambda.value_or(setups[f].side == Side::US ? 0.5 : 0.05);
    fp.mu = setups[f].fix_mu.value_or(0.05);
    fp.eta = setups[f].fix_eta.value_or(0.001);
    fp.p = setups[f].fix_p.value_or(0.5);
    // data-informed start for the log-normal body
    double mean_log = 0.0;
    for (const long long z : data.forces[f].z) mean_log += detail::log_int(z);
    mean_log /= static_cast<double>(data.forces[f].z.size());
    double var_log = 0.0;
    for (const long long z : data.forces[f].z) {
      const double d = detail::log_int(z) - mean_log;
      var_log += d * d;
    }
    var_log /= static_cast<double>(data.forces[f].z.size());
    fp.mu_log = mean_log;
    fp.sigma_log = std::max(0.2, std::sqrt(var_log));
    state.latents[f] = data.forces[f].z;  // start latents at the recorded values
  }
  return state;
}

inline PosteriorSample run_chain(const InferenceData& data,
                                 const std::vector<ForceSetup>& setups,
                                 const PriorSpec& priors, const McmcConfig& config) {
  config.validate();
  if (data.forces.size() != setups.size() || data.forces.empty())
    throw std::invalid_argument("run_chain: data/setups mismatch");
  for (const auto& fd : data.forces)
    if (fd.z.empty()) throw std::invalid_argument("run_chain: a force has no records");

  const ParamMap map(setups);
  std::vector<double> cov = config.proposal_cov;
  if (cov.empty()) {
    // conservative default diagonal
    cov.assign(map.dim() * map.dim(), 0.0);
    for (std::size_t i = 0; i < map.dim(); ++i) {
      const double sd = map.coords()[i].transform == Transform::identity ? 0.05 : 0.15;
      cov[i * map.dim() + i] = sd * sd;
    }
  }
  if (cov.size() != map.dim() * map.dim())
    throw std::invalid_argument("run_chain: proposal covariance has wrong dimension");
  std::vector<double> chol;
  if (map.dim() > 0) {
    const auto maybe = detail::cholesky(cov, map.dim());
    if (!maybe)
      throw std::invalid_argument("run_chain: proposal covariance not positive definite");
    chol = *maybe;
  }

  RngStream rng(config.seed);
  ChainState state = initial_state(data, setups);
  if (config.init) {
    if (config.init->forces.size() != setups.size())
      throw std::invalid_argument("run_chain: init has the wrong number of forces");
    state.params = *config.init;
  }
  state.log_posterior = log_posterior(state, data, setups, priors);

  detail::MhWorkspace ws;
  ws.data = &data;
  ws.setups = &setups;
  ws.priors = &priors;
  ws.map = &map;
  ws.chol = std::move(chol);
  ws.latent_block = config.latent_block_size;

  PosteriorSample out;
  out.setups = setups;
  for (const auto& fd : data.forces) out.n_obs.push_back(fd.z.size());
  const long long kept_total = (config.iterations - config.burn_in) / config.thin;
  out.draws.reserve(static_cast<std::size_t>(kept_total));

  long long accepted = 0;
  long long kept = 0;
  for (long long t = 1; t <= config.iterations; ++t) {
    ws.iteration = t;
    if (detail::mh_step_impl(state, ws, rng).accepted) ++accepted;
    if (config.audit_stride > 0 && t % config.audit_stride == 0) {
      const double fresh = log_posterior(state, data, setups, priors);
      if (std::abs(fresh - state.log_posterior) > 1e-6)
        throw std::logic_error("run_chain: cached log-posterior drifted");
      state.log_posterior = fresh;
    }
    if (t > config.burn_in && (t - config.burn_in) % config.thin == 0) {
      ++kept;
      ParamDraw draw;
      draw.iteration = t;
      draw.params = state.params;
      draw.log_posterior = state.log_posterior;
      for (const auto& lat : state.latents) {
        long long s = 0;
        for (const long long x : lat) s += x;
        draw.latent_sums.push_back(s);
      }
      out.draws.push_back(std::move(draw));
      if ((kept - 1) % config.latent_snapshot_stride == 0)
        out.snapshots.push_back({t, state.latents});
    }
    if (config.progress_stride > 0 && t % config.progress_stride == 0 && config.progress)
      config.progress(t, config.iterations);
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(config.iterations);

  if (out.draws.size() >= 10) {
    for (std::size_t i = 0; i < map.dim(); ++i) {
      std::vector<double> series;
      series.reserve(out.draws.size());
      for (const auto& d : out.draws) series.push_back(ParamMap::get(d.params, map.coords()[i]));
      try {
        out.ess[map.coord_name(i)] = effective_sample_size(series);
      } catch (const std::invalid_argument&) {
        out.ess[map.coord_name(i)] = 0.0;
      }
    }
  }
  return out;
}

// Convenience wrapper matching the documented operation shape.
inline MhStepResult mh_step(ChainState& state, const InferenceData& data,
                            const std::vector<ForceSetup>& setups, const PriorSpec& priors,
                            const McmcConfig& config, RngStream& rng,
                            long long iteration = 1) {
  const ParamMap map(setups);
  std::vector<double> cov = config.proposal_cov;
  if (cov.empty()) {
    cov.assign(map.dim() * map.dim(), 0.0);
    for (std::size_t i = 0; i < map.dim(); ++i) cov[i * map.dim() + i] = 0.15 * 0.15;
  }
  detail::MhWorkspace ws;
  ws.data = &data;
  ws.setups = &setups;
  ws.priors = &priors;
  ws.map = &map;
  if (map.dim() > 0) {
    const auto maybe = detail::cholesky(cov, map.dim());
    if (!maybe) throw std::invalid_argument("mh_step: proposal covariance not positive definite");
    ws.chol = *maybe;
  }
  ws.latent_block = config.latent_block_size;
  ws.iteration = iteration;
  if (state.log_posterior == kNegInf)
    state.log_posterior = log_posterior(state, data, setups, priors);
  return detail::mh_step_impl(state, ws, rng);
}

// ---------------------------------------------------------------------------
// Pilot tuning: run a conservative-diagonal chain, estimate the posterior
// covariance of the transformed coordinates, and scale by 2.38^2 / d. Falls
// back to the conservative diagonal when the estimate is unusable.
// ---------------------------------------------------------------------------

struct PilotResult {
  std::vector<double> proposal_cov;
  ModelParams init_params;  // pilot posterior mean in the transformed space
  bool has_init = false;
  bool fallback = false;
  double pilot_acceptance = 0.0;
};

namespace detail {

// Scaled covariance from a matrix of transformed draws; flags degeneracy.
inline PilotResult proposal_cov_from_draws(const std::vector<std::vector<double>>& draws,
                                           std::size_t d) {
  PilotResult out;
  out.proposal_cov.assign(d * d, 0.0);
  const auto fallback_diag = [&] {
    out.proposal_cov.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) out.proposal_cov[i * d + i] = 0.02;
    out.fallback = true;
  };
  if (draws.size() < 10 || d == 0) {
    fallback_diag();
    return out;
  }
  const double n = static_cast<double>(draws.size());
  std::vector<double> mean(d, 0.0);
  for (const auto& v : draws)
    for (std::size_t i = 0; i < d; ++i) mean[i] += v[i];
  for (auto& m : mean) m /= n;
  for (const auto& v : draws)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out.proposal_cov[i * d + j] += (v[i] - mean[i]) * (v[j] - mean[j]);
  for (auto& c : out.proposal_cov) c /= n - 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (!(out.proposal_cov[i * d + i] > 1e-12)) {
      fallback_diag();
      return out;
    }
  }
  const double scale = 2.38 * 2.38 / static_cast<double>(d);
  for (auto& c : out.proposal_cov) c *= scale;
  if (!cholesky(out.proposal_cov, d)) fallback_diag();
  return out;
}

}  // namespace detail

// Deterministic coordinate search for a high-density starting point on the
// latent-marginalized posterior. The latent-coupled walk diffuses slowly, so
// the starting point decides how much of the budget is spent walking in.
inline ModelParams find_mode_start(const InferenceData& data,
                                   const std::vector<ForceSetup>& setups,
                                   const PriorSpec& priors) {
  const ParamMap map(setups);
  ChainState probe = initial_state(data, setups);
  ModelParams params = probe.params;
  if (map.dim() == 0) return params;
  const auto objective = [&](const std::vector<double>& v) {
    ModelParams candidate = params;
    map.from_vector(v, candidate);
    const double lp = log_prior(candidate, setups, priors);
    if (lp == kNegInf) return kNegInf;
    double ll = 0.0;
    for (std::size_t f = 0; f < data.forces.size(); ++f) {
      ll += marginal_force_log_likelihood(candidate.forces[f], data.forces[f].z);
      if (ll == kNegInf) return kNegInf;
    }
    return lp + ll;
  };
  std::vector<double> v = map.to_vector(params);
  double best = objective(v);
  for (int sweep = 0; sweep < 3; ++sweep) {
    for (std::size_t i = 0; i < map.dim(); ++i) {
      double width = sweep == 0 ? 2.5 : 0.8;
      for (int shrink = 0; shrink < 2; ++shrink) {
        const double center = v[i];
        double best_x = center;
        for (int g = 0; g < 15; ++g) {
          const double x = center - width + 2.0 * width * g / 14.0;
          std::vector<double> trial = v;
          trial[i] = x;
          const double val = objective(trial);
          if (val > best) {
            best = val;
            best_x = x;
          }
        }
        v[i] = best_x;
        width *= 0.25;
      }
    }
  }
  map.from_vector(v, params);
  return params;
}

inline PilotResult pilot_tune(const InferenceData& data,
                              const std::vector<ForceSetup>& setups, const PriorSpec& priors,
                              long long pilot_iterations, std::uint64_t seed) {
  if (pilot_iterations < 10'000)
    throw std::invalid_argument("pilot_tune: pilot_iterations must be >= 10000");
  const ParamMap map(setups);
  // Two half-length stages from a mode-search start: the first stage locates
  // the posterior scale with the conservative diagonal, the second refines
  // the covariance from there.
  PilotResult out;
  out.init_params = find_mode_start(data, setups, priors);
  out.has_init = map.dim() > 0;
  for (int stage = 0; stage < 2; ++stage) {
    McmcConfig pilot;
    pilot.iterations = pilot_iterations / 2;
    pilot.burn_in = pilot.iterations / 5;
    pilot.thin = std::max<long long>(1, (pilot.iterations - pilot.burn_in) / 4000);
    pilot.seed = derive_seed(seed, static_cast<std::uint64_t>(stage));
    pilot.latent_snapshot_stride = 1'000'000'000;  // snapshots unused here
    if (out.has_init) pilot.init = out.init_params;
    if (stage == 1 && !out.fallback) pilot.proposal_cov = out.proposal_cov;
    const PosteriorSample sample = run_chain(data, setups, priors, pilot);
    std::vector<std::vector<double>> vecs;
    vecs.reserve(sample.draws.size());
    for (const auto& d : sample.draws) vecs.push_back(map.to_vector(d.params));
    const PilotResult stage_out = detail::proposal_cov_from_draws(vecs, map.dim());
    out.proposal_cov = stage_out.proposal_cov;
    out.fallback = stage_out.fallback;
    out.pilot_acceptance = sample.acceptance_rate;
    if (!vecs.empty() && map.dim() > 0) {
      std::vector<double> mean(map.dim(), 0.0);
      for (const auto& v : vecs)
        for (std::size_t i = 0; i < map.dim(); ++i) mean[i] += v[i];
      for (auto& m : mean) m /= static_cast<double>(vecs.size());
      out.init_params = sample.draws.back().params;
      map.from_vector(mean, out.init_params);
      out.has_init = true;
    }
  }
  return out;
}

}  // namespace plaw

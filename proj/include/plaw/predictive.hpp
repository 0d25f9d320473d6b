#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "plaw/error_model.hpp"
#include "plaw/inference.hpp"
#include "plaw/rng.hpp"

namespace plaw {

// Marginal probability that a random true event is recorded,
// q = sum_w pmf(w) obs(w).
inline double observation_normalizer(double alpha, const ObservationModel& model) {
  BodyDist body;
  body.kind = BodyKind::power_law;
  body.alpha = alpha;
  return observation_normalizer_body(body, model);
}

// Posterior draw of the true number of battles given n_obs recorded ones:
// with n_obs ~ Binomial(n_true, q) and a flat prior on n_true, the number of
// missing battles is negative binomial with n_obs successes at rate q.
// Sampled as a gamma-Poisson mixture.
inline long long sample_n_true(std::size_t n_obs, double q, RngStream& rng) {
  if (n_obs < 1) throw std::invalid_argument("sample_n_true: n_obs must be >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw std::domain_error("sample_n_true: q must lie in (0,1]");
  if (q == 1.0) return static_cast<long long>(n_obs);
  const double rate = rng.gamma(static_cast<double>(n_obs), (1.0 - q) / q);
  return static_cast<long long>(n_obs) + rng.poisson(rate);
}

// ---------------------------------------------------------------------------
// Severities of unrecorded battles: i.i.d. draws from the body distribution
// conditioned on non-observation, pmf proportional to pmf(w) * miss(w).
// Inverse transform on a cumulative weight table; the table stops once the
// remaining mass is negligible and is capped at w = 1e8, with any residual
// assigned to the cap (flagged when it exceeds 1e-6 of the total).
// ---------------------------------------------------------------------------

class MissingSeveritySampler {
 public:
  MissingSeveritySampler(const BodyDist& body, const ObservationModel& model) {
    model.validate();
    constexpr double kCapW = 1e8;
    constexpr std::size_t kMaxEntries = std::size_t{1} << 23;
    const double log_zeta =
        body.kind == BodyKind::power_law ? log_hurwitz_zeta(body.alpha, 1.0) : 0.0;
    double total = 0.0;
    for (long long w = 1;; ++w) {
      double log_pmf;
      if (body.kind == BodyKind::power_law)
        log_pmf = -body.alpha * detail::log_int(w) - log_zeta;
      else
        log_pmf = discrete_lognormal_log_pmf(w, body.lognormal);
      total += std::exp(log_pmf + log_miss_probability(w, model));
      cumulative_.push_back(total);
      if ((w & 63) == 0) {
        const double bound = std::exp(log_miss_probability(w, model)) *
                             body.tail_mass_bound(static_cast<double>(w));
        if (bound < 1e-12 * total) break;
        if (static_cast<double>(w) >= kCapW || cumulative_.size() >= kMaxEntries) {
          residual_ = bound;
          truncated_at_cap_ = true;
          break;
        }
      }
    }
    total_ = total + residual_;
    tail_warning_ = residual_ > 1e-6 * total_;
  }

  bool tail_warning() const { return tail_warning_; }

  long long draw(RngStream& rng) {
    const double u = rng.uniform01() * total_;
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) return static_cast<long long>(cumulative_.size());
    return static_cast<long long>(it - cumulative_.begin()) + 1;
  }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
  double residual_ = 0.0;
  bool truncated_at_cap_ = false;
  bool tail_warning_ = false;
};

inline std::vector<long long> sample_missing_battles(std::size_t count, const BodyDist& body,
                                                     const ObservationModel& model,
                                                     RngStream& rng) {
  std::vector<long long> out(count);
  if (count == 0) return out;
  MissingSeveritySampler sampler(body, model);
  for (auto& w : out) w = sampler.draw(rng);
  return out;
}

// ---------------------------------------------------------------------------
// Posterior-predictive totals.
// ---------------------------------------------------------------------------

struct ForcePredictive {
  Side side = Side::Native;
  long long n_true = 0;
  long long total_true = 0;
  long long total_observed = 0;  // fixed across draws
};

struct PredictiveDraw {
  long long iteration = 0;
  std::vector<ForcePredictive> forces;
};

struct PredictiveSummary {
  Side side = Side::Native;
  double n_true_mean = 0.0, n_true_median = 0.0, n_true_lo = 0.0, n_true_hi = 0.0;
  double total_mean = 0.0, total_median = 0.0, total_lo = 0.0, total_hi = 0.0;
  long long total_observed = 0;
};

// One predictive draw per posterior draw: that draw's parameters give q, the
// number of missing battles, and the missing severities. Parameter
// uncertainty propagates because nothing is averaged before sampling.
// Per-draw seeds keep the result independent of execution order.
inline std::vector<PredictiveDraw> predictive_totals(const PosteriorSample& posterior,
                                                     const InferenceData& data,
                                                     std::uint64_t seed,
                                                     bool* tail_warning = nullptr) {
  if (posterior.draws.empty())
    throw std::invalid_argument("predictive_totals: empty posterior sample");
  if (data.forces.size() != posterior.setups.size())
    throw std::invalid_argument("predictive_totals: data/posterior mismatch");
  std::vector<long long> observed_totals;
  for (const auto& fd : data.forces) {
    long long s = 0;
    for (const long long z : fd.z) s += z;
    observed_totals.push_back(s);
  }
  std::vector<PredictiveDraw> out;
  out.reserve(posterior.draws.size());
  bool warned = false;
  for (std::size_t d = 0; d < posterior.draws.size(); ++d) {
    const ParamDraw& draw = posterior.draws[d];
    RngStream rng(derive_seed(seed, d));
    PredictiveDraw pd;
    pd.iteration = draw.iteration;
    for (std::size_t f = 0; f < data.forces.size(); ++f) {
      const ForceParams& fp = draw.params.forces[f];
      const double q = observation_normalizer_body(fp.body_dist(), fp.obs_model());
      const std::size_t n_obs = data.forces[f].z.size();
      const long long n_true = sample_n_true(n_obs, std::min(q, 1.0), rng);
      const std::size_t n_missing = static_cast<std::size_t>(n_true) - n_obs;
      long long total = draw.latent_sums[f];
      if (n_missing > 0) {
        MissingSeveritySampler sampler(fp.body_dist(), fp.obs_model());
        warned = warned || sampler.tail_warning();
        for (std::size_t i = 0; i < n_missing; ++i) total += sampler.draw(rng);
      }
      pd.forces.push_back(
          {posterior.setups[f].side, n_true, total, observed_totals[f]});
    }
    out.push_back(std::move(pd));
  }
  if (tail_warning) *tail_warning = warned;
  return out;
}

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) return 0.0;
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace detail

inline std::vector<PredictiveSummary> summarize_predictive(
    const std::vector<PredictiveDraw>& draws) {
  if (draws.empty()) throw std::invalid_argument("summarize_predictive: no draws");
  std::vector<PredictiveSummary> out;
  const std::size_t n_forces = draws.front().forces.size();
  for (std::size_t f = 0; f < n_forces; ++f) {
    std::vector<double> n_true, total;
    for (const auto& d : draws) {
      n_true.push_back(static_cast<double>(d.forces[f].n_true));
      total.push_back(static_cast<double>(d.forces[f].total_true));
    }
    std::sort(n_true.begin(), n_true.end());
    std::sort(total.begin(), total.end());
    PredictiveSummary s;
    s.side = draws.front().forces[f].side;
    s.total_observed = draws.front().forces[f].total_observed;
    const double n = static_cast<double>(n_true.size());
    for (const double x : n_true) s.n_true_mean += x / n;
    for (const double x : total) s.total_mean += x / n;
    s.n_true_median = detail::quantile_sorted(n_true, 0.5);
    s.n_true_lo = detail::quantile_sorted(n_true, 0.025);
    s.n_true_hi = detail::quantile_sorted(n_true, 0.975);
    s.total_median = detail::quantile_sorted(total, 0.5);
    s.total_lo = detail::quantile_sorted(total, 0.025);
    s.total_hi = detail::quantile_sorted(total, 0.975);
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quasi-threshold: the smallest severity at which the posterior-mean
// observation probability exceeds `level`. Exponential-linear variant only.
// ---------------------------------------------------------------------------

inline long long x_threshold(const PosteriorSample& posterior, std::size_t force,
                             double level = 0.95) {
  if (posterior.draws.empty()) throw std::invalid_argument("x_threshold: empty posterior");
  if (force >= posterior.setups.size())
    throw std::invalid_argument("x_threshold: force index out of range");
  if (posterior.setups[force].variant != ObsVariant::exponential_linear)
    throw std::invalid_argument("x_threshold: requires the exponential-linear variant");
  if (!(level < 1.0)) throw std::domain_error("x_threshold: level must be below 1");
  if (level <= 0.0) return 1;
  constexpr long long kCap = 1'000'000;
  const auto mean_obs = [&](long long x) {
    double acc = 0.0;
    for (const auto& d : posterior.draws) {
      const ForceParams& fp = d.params.forces[force];
      acc += -std::expm1(-fp.lambda - fp.mu * static_cast<double>(x - 1));
    }
    return acc / static_cast<double>(posterior.draws.size());
  };
  if (!(mean_obs(kCap) > level))
    throw std::runtime_error("x_threshold: level not reached below the search cap");
  // mean_obs is nondecreasing in x; bisect for the smallest qualifying x.
  long long lo = 1, hi = kCap;
  while (lo < hi) {
    const long long mid = lo + (hi - lo) / 2;
    if (mean_obs(mid) > level)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace plaw

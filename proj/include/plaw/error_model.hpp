#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "plaw/distributions.hpp"
#include "plaw/rng.hpp"
#include "plaw/special_functions.hpp"

namespace plaw {

// ---------------------------------------------------------------------------
// Observation (missingness) model: probability that a battle with true
// severity w enters the historical record.
// ---------------------------------------------------------------------------

enum class ObsVariant { exponential_linear, exponential_quadratic, logistic };

struct ObservationModel {
  ObsVariant variant = ObsVariant::exponential_linear;
  double lambda = 0.1;  // base observation rate (unused by the logistic form)
  double mu = 0.05;     // size effect
  double eta = 0.0;     // quadratic size effect (exponential_quadratic only)

  void validate() const {
    if (variant != ObsVariant::logistic && !(lambda > 0.0))
      throw std::domain_error("ObservationModel: lambda must be positive");
    if (!(mu > 0.0)) throw std::domain_error("ObservationModel: mu must be positive");
    if (variant == ObsVariant::exponential_quadratic && eta < 0.0)
      throw std::domain_error("ObservationModel: eta must be nonnegative");
  }
};

// ln Pr(missed | w): the complement of the observation probability. Exact in
// the exponential forms; the likelihood and the missing-battle sampler both
// need it without cancellation.
inline double log_miss_probability(long long w, const ObservationModel& model) {
  if (w < 1) throw std::domain_error("log_miss_probability: w must be >= 1");
  model.validate();
  const double w1 = static_cast<double>(w - 1);
  switch (model.variant) {
    case ObsVariant::exponential_linear:
      return -model.lambda - model.mu * w1;
    case ObsVariant::exponential_quadratic:
      return -model.lambda - model.mu * w1 - model.eta * w1 * w1;
    case ObsVariant::logistic: {
      const double t = model.mu * static_cast<double>(w);
      return -t - std::log1p(std::exp(-t));  // ln(1 / (1 + e^{mu w}))
    }
  }
  return -std::numeric_limits<double>::infinity();
}

inline double obs_probability(long long w, const ObservationModel& model) {
  return -std::expm1(log_miss_probability(w, model));
}

inline double log_obs_probability(long long w, const ObservationModel& model) {
  return std::log(-std::expm1(log_miss_probability(w, model)));
}

// ---------------------------------------------------------------------------
// Heaping: recorded counts above 2 are rounded to the nearest multiple of 5
// with probability p. Counts of 1 and 2 are never rounded.
// ---------------------------------------------------------------------------

inline constexpr long long kHeapGrid = 5;

// The deterministic rounding target 5 * ([ (y - 2.5) / 5 ] + 1), with [.]
// truncation toward zero.
inline long long heap_target(long long y) {
  return kHeapGrid *
         (static_cast<long long>((static_cast<double>(y) - 2.5) / 5.0) + 1);
}

inline long long heap(long long y, double p, RngStream& rng) {
  if (y < 1) throw std::domain_error("heap: y must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("heap: p must lie in [0,1]");
  if (y <= 2) return y;
  return rng.uniform01() < p ? heap_target(y) : y;
}

inline long long heap(long long y, double p, std::uint64_t seed) {
  RngStream rng(seed);
  return heap(y, p, rng);
}

// ---------------------------------------------------------------------------
// Marginalization identities used by the sampler.
// ---------------------------------------------------------------------------

// ln Pr(Z = z | X = x), the counting-noise stage with the heaping stage
// integrated out:
//   f(z|x)                                    z in {1, 2}
//   f(z|x)(1-p) + p sum_{k=-2..2} f(z-k|x)    z in {5, 10, 15, ...}
//   f(z|x)(1-p)                               otherwise
// where f is the zero-truncated Poisson pmf. Terms with z-k < 1 contribute
// nothing (the grid keeps z-k >= 3, so this only guards hypothetical grids).
inline double marginal_z_given_x_log(long long z, long long x, double p) {
  if (z < 1) throw std::domain_error("marginal_z_given_x_log: z must be >= 1");
  if (x < 1) throw std::domain_error("marginal_z_given_x_log: x must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("marginal_z_given_x_log: p must lie in [0,1]");
  const double rate = static_cast<double>(x);
  if (z <= 2) return truncated_poisson_log_pmf(z, rate);
  const bool heaped_value = (z % kHeapGrid == 0);
  if (!heaped_value) {
    if (p >= 1.0) return -std::numeric_limits<double>::infinity();
    return truncated_poisson_log_pmf(z, rate) + std::log1p(-p);
  }
  // log-sum-exp over the direct term and the five rounded-in sources
  double terms[6];
  int n = 0;
  if (p < 1.0) terms[n++] = std::log1p(-p) + truncated_poisson_log_pmf(z, rate);
  if (p > 0.0) {
    const double log_p = std::log(p);
    for (long long k = -2; k <= 2; ++k) {
      const long long y = z - k;
      if (y < 1) continue;
      terms[n++] = log_p + truncated_poisson_log_pmf(y, rate);
    }
  }
  double max_term = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) max_term = std::max(max_term, terms[i]);
  if (!(max_term > -std::numeric_limits<double>::infinity())) return max_term;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += std::exp(terms[i] - max_term);
  return max_term + std::log(acc);
}

// ln of the unnormalized marginal pmf of an observed battle's true count:
//   Pr(X = x) proportional to obs(x) * x^-alpha / zeta(alpha)
inline double marginal_x_unnormalized_log(long long x, double alpha,
                                          const ObservationModel& model) {
  if (x < 1) throw std::domain_error("marginal_x_unnormalized_log: x must be >= 1");
  return log_obs_probability(x, model) - alpha * detail::log_int(x) -
         log_hurwitz_zeta(alpha, 1.0);
}

// ---------------------------------------------------------------------------
// Severity ("body") distribution abstraction: the generative model is a
// power law on {1,2,...} by default, with a discrete log-normal alternative.
// ---------------------------------------------------------------------------

enum class BodyKind { power_law, discrete_lognormal };

struct BodyDist {
  BodyKind kind = BodyKind::power_law;
  double alpha = 2.0;                // power_law
  DiscreteLogNormalParams lognormal; // discrete_lognormal

  double log_pmf(long long w) const {
    if (kind == BodyKind::power_law)
      return -alpha * detail::log_int(w) - log_hurwitz_zeta(alpha, 1.0);
    return discrete_lognormal_log_pmf(w, lognormal);
  }

  // Upper bound on Pr(X > w).
  double tail_mass_bound(double w) const {
    if (kind == BodyKind::power_law)
      return std::pow(w, 1.0 - alpha) / ((alpha - 1.0) * hurwitz_zeta(alpha, 1.0));
    const double t = (std::log(w + 0.5) - lognormal.mu_log) / lognormal.sigma_log;
    return std::exp(detail::log_normal_sf(t));
  }
};

// Marginal probability that a random true event is recorded:
//   q = sum_w pmf(w) obs(w) = 1 - sum_w pmf(w) miss(w).
// The complement sum is geometrically damped by the miss probability, so it
// terminates quickly for any usable mu. Truncation error is below 1e-13.
struct NormalizerResult {
  double q = 0.0;
  bool truncated = false;  // cap reached before the tail bound was met
};

inline NormalizerResult observation_normalizer_detailed(const BodyDist& body,
                                                        const ObservationModel& model) {
  model.validate();
  constexpr long long kCap = 6'000'000;
  const double log_zeta =
      body.kind == BodyKind::power_law ? log_hurwitz_zeta(body.alpha, 1.0) : 0.0;
  double miss_sum = 0.0;
  double log_miss = log_miss_probability(1, model);
  bool truncated = true;
  for (long long w = 1; w <= kCap; ++w) {
    double log_pmf;
    if (body.kind == BodyKind::power_law)
      log_pmf = -body.alpha * detail::log_int(w) - log_zeta;
    else
      log_pmf = discrete_lognormal_log_pmf(w, body.lognormal);
    miss_sum += std::exp(log_pmf + log_miss);
    if ((w & 63) == 0 &&
        std::exp(log_miss) * body.tail_mass_bound(static_cast<double>(w)) < 1e-14) {
      truncated = false;
      break;
    }
    log_miss = log_miss_probability(w + 1, model);
  }
  return {1.0 - miss_sum, truncated};
}

inline double observation_normalizer_body(const BodyDist& body,
                                          const ObservationModel& model) {
  return observation_normalizer_detailed(body, model).q;
}

// ---------------------------------------------------------------------------
// Forward simulation of the full corruption pipeline.
// ---------------------------------------------------------------------------

struct CorruptedDataset {
  // Aligned with the input true counts.
  std::vector<unsigned char> observed;
  std::vector<long long> pre_heap;  // y for observed events, 0 otherwise
  std::vector<long long> recorded;  // z for observed events, 0 otherwise
  long long sum_true = 0;
  long long sum_recorded = 0;

  std::vector<long long> recorded_values() const {
    std::vector<long long> z;
    for (std::size_t i = 0; i < observed.size(); ++i)
      if (observed[i]) z.push_back(recorded[i]);
    return z;
  }
};

// Retain each true count with probability obs(w); add truncated-Poisson
// counting noise to retained events, then heap. `counting_noise` is a test
// hook that forces y = w when false.
inline CorruptedDataset corrupt_dataset(const std::vector<long long>& true_counts,
                                        const ObservationModel& model, double p,
                                        RngStream& rng, bool counting_noise = true) {
  if (true_counts.empty())
    throw std::invalid_argument("corrupt_dataset: true_counts must be nonempty");
  model.validate();
  CorruptedDataset out;
  out.observed.resize(true_counts.size(), 0);
  out.pre_heap.resize(true_counts.size(), 0);
  out.recorded.resize(true_counts.size(), 0);
  for (std::size_t i = 0; i < true_counts.size(); ++i) {
    const long long w = true_counts[i];
    if (w < 1) throw std::domain_error("corrupt_dataset: true counts must be >= 1");
    out.sum_true += w;
    if (rng.uniform01() >= obs_probability(w, model)) continue;
    const long long y =
        counting_noise ? truncated_poisson_sample(static_cast<double>(w), rng) : w;
    const long long z = heap(y, p, rng);
    out.observed[i] = 1;
    out.pre_heap[i] = y;
    out.recorded[i] = z;
    out.sum_recorded += z;
  }
  return out;
}

inline CorruptedDataset corrupt_dataset(const std::vector<long long>& true_counts,
                                        const ObservationModel& model, double p,
                                        std::uint64_t seed, bool counting_noise = true) {
  RngStream rng(seed);
  return corrupt_dataset(true_counts, model, p, rng, counting_noise);
}

}  // namespace plaw

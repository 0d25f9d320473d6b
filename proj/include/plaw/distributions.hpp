#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "plaw/rng.hpp"
#include "plaw/special_functions.hpp"

namespace plaw {

// ---------------------------------------------------------------------------
// Discrete power law on {xmin, xmin+1, ...}: Pr(X = w) = w^-alpha / zeta(alpha, xmin)
// ---------------------------------------------------------------------------

struct PowerLawParams {
  double alpha = 2.0;
  long long xmin = 1;

  void validate() const {
    if (!(alpha > 1.0 + kMinAlphaGap))
      throw std::domain_error("PowerLawParams: alpha must exceed 1 + 1e-6");
    if (xmin < 1) throw std::domain_error("PowerLawParams: xmin must be >= 1");
  }
};

inline double powerlaw_log_pmf(long long w, const PowerLawParams& params) {
  params.validate();
  if (w < params.xmin) throw std::domain_error("powerlaw_log_pmf: w below xmin");
  return -params.alpha * detail::log_int(w) -
         log_hurwitz_zeta(params.alpha, static_cast<double>(params.xmin));
}

// Pr(X <= w) = 1 - zeta(alpha, w+1) / zeta(alpha, xmin)
inline double powerlaw_cdf(long long w, const PowerLawParams& params) {
  params.validate();
  if (w < params.xmin) throw std::domain_error("powerlaw_cdf: w below xmin");
  return 1.0 - hurwitz_zeta(params.alpha, static_cast<double>(w) + 1.0) /
                   hurwitz_zeta(params.alpha, static_cast<double>(params.xmin));
}

// Exact inverse-transform sampler. A cumulative table over consecutive
// support values is grown on demand; every 4096th entry is re-anchored with
// a fresh zeta evaluation so the downward recurrence cannot drift. Draws
// falling beyond the table cap (probability ~ tail mass at 2^21) fall back
// to an exponential search on the closed-form CDF.
class PowerLawSampler {
 public:
  explicit PowerLawSampler(PowerLawParams params)
      : params_(params),
        zeta_base_(hurwitz_zeta(params.alpha, static_cast<double>(params.xmin))) {
    params_.validate();
    zeta_next_ = zeta_base_;
    table_.reserve(1024);
  }

  const PowerLawParams& params() const { return params_; }

  long long invert(double u) {
    while ((table_.empty() || u > table_.back()) && table_.size() < kMaxTable) extend();
    if (!table_.empty() && u <= table_.back()) {
      const auto it = std::lower_bound(table_.begin(), table_.end(), u);
      return params_.xmin + static_cast<long long>(it - table_.begin());
    }
    // Deep tail: bracket then bisect on the exact CDF.
    long long lo = params_.xmin + static_cast<long long>(table_.size());
    long long hi = lo;
    while (cdf_exact(hi) < u) {
      lo = hi + 1;
      hi = hi * 2;
    }
    while (lo < hi) {
      const long long mid = lo + (hi - lo) / 2;
      if (cdf_exact(mid) < u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

  long long operator()(RngStream& rng) { return invert(rng.uniform01()); }

 private:
  static constexpr std::size_t kMaxTable = std::size_t{1} << 21;

  double cdf_exact(long long w) const {
    return 1.0 - hurwitz_zeta(params_.alpha, static_cast<double>(w) + 1.0) / zeta_base_;
  }

  void extend() {
    std::size_t target = table_.empty() ? 64 : table_.size() * 2;
    target = std::min(target, kMaxTable);
    while (table_.size() < target) {
      const long long w = params_.xmin + static_cast<long long>(table_.size());
      zeta_next_ -= std::pow(static_cast<double>(w), -params_.alpha);  // zeta(alpha, w+1)
      if (table_.size() % 4096 == 4095)
        zeta_next_ = hurwitz_zeta(params_.alpha, static_cast<double>(w) + 1.0);
      table_.push_back(1.0 - zeta_next_ / zeta_base_);
    }
  }

  PowerLawParams params_;
  double zeta_base_;
  double zeta_next_;
  std::vector<double> table_;
};

inline std::vector<long long> powerlaw_sample(const PowerLawParams& params,
                                              std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("powerlaw_sample: n must be >= 1");
  PowerLawSampler sampler(params);
  RngStream rng(seed);
  std::vector<long long> draws(n);
  for (auto& d : draws) d = sampler(rng);
  return draws;
}

// ---------------------------------------------------------------------------
// Zero-truncated Poisson: Pr(Y = y | x) = x^y e^-x / (y! (1 - e^-x)), y >= 1
// ---------------------------------------------------------------------------

inline double truncated_poisson_log_pmf(long long y, double x) {
  if (y < 1) throw std::domain_error("truncated_poisson_log_pmf: support starts at 1");
  if (!(x > 0.0)) throw std::domain_error("truncated_poisson_log_pmf: rate must be positive");
  return static_cast<double>(y) * std::log(x) - x - detail::lgamma_int(y + 1) -
         std::log(-std::expm1(-x));
}

// Rejection from the untruncated Poisson, retrying on zero. Acceptance is
// 1 - e^-x, which is high for every rate the model produces (x >= 1).
inline long long truncated_poisson_sample(double x, RngStream& rng) {
  if (!(x > 0.0)) throw std::domain_error("truncated_poisson_sample: rate must be positive");
  for (;;) {
    const long long y = rng.poisson(x);
    if (y >= 1) return y;
  }
}

inline long long truncated_poisson_sample(double x, std::uint64_t seed) {
  RngStream rng(seed);
  return truncated_poisson_sample(x, rng);
}

// ---------------------------------------------------------------------------
// Discrete log-normal on {1, 2, ...}: half-integer binning of the continuous
// log-normal, with all mass below 1.5 assigned to w = 1.
// ---------------------------------------------------------------------------

struct DiscreteLogNormalParams {
  double mu_log = 0.0;
  double sigma_log = 1.0;

  void validate() const {
    if (!(sigma_log > 0.0))
      throw std::domain_error("DiscreteLogNormalParams: sigma_log must be positive");
  }
};

namespace detail {

// ln Pr(Z > x) for standard normal Z; erfc directly, asymptotic expansion
// once erfc would underflow.
inline double log_normal_sf(double x) {
  if (x < 30.0) return std::log(0.5 * std::erfc(x / std::sqrt(2.0)));
  const double x2 = x * x;
  return -0.5 * x2 - 0.5 * std::log(2.0 * M_PI) - std::log(x) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// ln(Phi(b) - Phi(a)) for a < b, stable in both tails.
inline double log_normal_cdf_diff(double a, double b) {
  if (!(b > a)) return -std::numeric_limits<double>::infinity();
  if (b - a < 1e-9 * std::max(1.0, std::abs(a))) {
    const double mid = 0.5 * (a + b);
    return -0.5 * mid * mid - 0.5 * std::log(2.0 * M_PI) + std::log(b - a);
  }
  if (a >= 0.0) {  // both in the upper tail: Phi(b)-Phi(a) = SF(a)-SF(b)
    const double la = log_normal_sf(a), lb = log_normal_sf(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b <= 0.0) {  // lower tail, mirror
    const double la = log_normal_sf(-b), lb = log_normal_sf(-a);
    return la + std::log1p(-std::exp(lb - la));
  }
  // straddles zero; no cancellation danger
  const double phi_a = 0.5 * std::erfc(-a / std::sqrt(2.0));
  const double phi_b = 0.5 * std::erfc(-b / std::sqrt(2.0));
  return std::log(phi_b - phi_a);
}

}  // namespace detail

inline double discrete_lognormal_log_pmf(long long w, const DiscreteLogNormalParams& params) {
  params.validate();
  if (w < 1) throw std::domain_error("discrete_lognormal_log_pmf: support starts at 1");
  const double hi = (std::log(static_cast<double>(w) + 0.5) - params.mu_log) / params.sigma_log;
  if (w == 1) {
    // ln Phi(hi)
    return detail::log_normal_sf(-hi);
  }
  const double lo = (std::log(static_cast<double>(w) - 0.5) - params.mu_log) / params.sigma_log;
  return detail::log_normal_cdf_diff(lo, hi);
}

// Draw from the binned distribution: bin a continuous log-normal draw.
inline long long discrete_lognormal_sample(const DiscreteLogNormalParams& params,
                                           RngStream& rng) {
  params.validate();
  const double v = std::exp(params.mu_log + params.sigma_log * rng.normal());
  const long long w = static_cast<long long>(std::floor(v + 0.5));
  return w < 1 ? 1 : w;
}

// ---------------------------------------------------------------------------
// Bivariate log-normal density (the joint prior family for the observation
// rates of the two forces).
// ---------------------------------------------------------------------------

struct BivariateLogNormalPrior {
  std::array<double, 2> mean_log{0.0, -3.0};
  // row-major symmetric 2x2
  std::array<double, 4> cov_log{1.0, 0.6, 0.6, 2.0};

  double det() const { return cov_log[0] * cov_log[3] - cov_log[1] * cov_log[2]; }

  void validate() const {
    if (cov_log[1] != cov_log[2])
      throw std::domain_error("BivariateLogNormalPrior: covariance must be symmetric");
    if (!(cov_log[0] > 0.0) || !(det() > 0.0))
      throw std::domain_error("BivariateLogNormalPrior: covariance must be positive definite");
  }
};

inline double bivariate_lognormal_log_density(double a, double b,
                                              const BivariateLogNormalPrior& prior) {
  prior.validate();
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("bivariate_lognormal_log_density: components must be positive");
  const double la = std::log(a), lb = std::log(b);
  const double d0 = la - prior.mean_log[0];
  const double d1 = lb - prior.mean_log[1];
  const double det = prior.det();
  const double quad = (prior.cov_log[3] * d0 * d0 - 2.0 * prior.cov_log[1] * d0 * d1 +
                       prior.cov_log[0] * d1 * d1) /
                      det;
  return -std::log(2.0 * M_PI) - 0.5 * std::log(det) - 0.5 * quad - la - lb;
}

// Marginal of one component of the bivariate prior (used when only a single
// force is being fitted).
inline double lognormal_log_density(double a, double mean_log, double var_log) {
  if (!(a > 0.0)) throw std::domain_error("lognormal_log_density: argument must be positive");
  const double d = std::log(a) - mean_log;
  return -0.5 * std::log(2.0 * M_PI * var_log) - 0.5 * d * d / var_log - std::log(a);
}

}  // namespace plaw

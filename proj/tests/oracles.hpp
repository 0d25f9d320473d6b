// Independent reference implementations used to compute expected values.
// Everything here is deliberately brute force (partial sums with analytic
// tails, direct compositions of the model stages) and shares no code with
// the implementation paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

// Direct term-by-term sum with an Euler-Maclaurin tail (integral term, half
// correction, first Bernoulli correction) taken far out, where it is exact
// to well below 1e-14.
inline double zeta(double a, double q, long long nterms = 2'000'000) {
  double s = 0.0;
  for (long long k = nterms - 1; k >= 0; --k)
    s += std::pow(q + static_cast<double>(k), -a);
  const double m = q + static_cast<double>(nterms);
  s += std::pow(m, 1.0 - a) / (a - 1.0) + 0.5 * std::pow(m, -a) +
       a * std::pow(m, -a - 1.0) / 12.0;
  return s;
}

// E[ln X] under the discrete power law with xmin = 1 (zeta distribution),
// partial sum plus the integral tail of ln(x) x^-a.
inline double mean_log_zeta_dist(double a, long long nterms = 10'000'000) {
  double s = 0.0;
  for (long long n = 2; n <= nterms; ++n)
    s += std::log(static_cast<double>(n)) * std::pow(static_cast<double>(n), -a);
  const double m = static_cast<double>(nterms) + 0.5;
  const double mp = std::pow(m, 1.0 - a);
  s += mp * (std::log(m) / (a - 1.0) + 1.0 / ((a - 1.0) * (a - 1.0)));
  return s / zeta(a, 1.0);
}

inline double var_log_zeta_dist(double a, long long nterms = 10'000'000) {
  const double mean = mean_log_zeta_dist(a, nterms);
  double s = 0.0;
  for (long long n = 2; n <= nterms; ++n) {
    const double l = std::log(static_cast<double>(n));
    s += l * l * std::pow(static_cast<double>(n), -a);
  }
  return s / zeta(a, 1.0) - mean * mean;
}

// Zero-truncated Poisson pmf, direct composition.
inline double tp_pmf(long long y, double x) {
  return std::exp(static_cast<double>(y) * std::log(x) - x -
                  std::lgamma(static_cast<double>(y) + 1.0)) /
         (1.0 - std::exp(-x));
}

// Pr(Z = z | X = x) with the heaping stage integrated out, composed directly
// from the stage definitions.
inline double z_given_x_pmf(long long z, long long x, double p) {
  const double rate = static_cast<double>(x);
  if (z <= 2) return tp_pmf(z, rate);
  if (z % 5 == 0) {
    double s = tp_pmf(z, rate) * (1.0 - p);
    for (long long k = -2; k <= 2; ++k)
      if (z - k >= 1) s += p * tp_pmf(z - k, rate);
    return s;
  }
  return tp_pmf(z, rate) * (1.0 - p);
}

inline double obs_prob_exp_linear(long long w, double lambda, double mu) {
  return 1.0 - std::exp(-lambda - mu * static_cast<double>(w - 1));
}

// Marginal probability of observation, q = sum pmf(w) obs(w), brute force.
inline double normalizer_q(double a, double lambda, double mu, long long cap = 3'000'000) {
  const double za = zeta(a, 1.0);
  double q = 0.0;
  for (long long w = 1; w <= cap; ++w) {
    const double miss = std::exp(-lambda - mu * static_cast<double>(w - 1));
    q += std::pow(static_cast<double>(w), -a) / za * (1.0 - miss);
    if (miss < 1e-18 && w > 1000) {
      // everything beyond here is observed with probability ~1
      q += zeta(a, static_cast<double>(w) + 1.0, 200'000) / za;
      break;
    }
  }
  return q;
}

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// chi-square critical values at the 0.999 level, by degrees of freedom.
inline double chi2_crit_999(int df) {
  switch (df) {
    case 5: return 20.515;
    case 6: return 22.458;
    case 7: return 24.322;
    case 8: return 26.124;
    case 9: return 27.877;
    case 10: return 29.588;
    case 11: return 31.264;
    case 12: return 32.909;
    case 14: return 36.123;
    case 15: return 37.697;
    case 20: return 45.315;
    default: return 10.828 + 2.6 * df;  // crude fallback, unused in practice
  }
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Central credible interval bounds from a sorted copy.
inline std::pair<double, double> central_interval(std::vector<double> v, double mass = 0.95) {
  std::sort(v.begin(), v.end());
  const double lo_p = (1.0 - mass) / 2.0, hi_p = 1.0 - lo_p;
  const auto at = [&](double prob) {
    const double pos = prob * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
  };
  return {at(lo_p), at(hi_p)};
}

}  // namespace oracle

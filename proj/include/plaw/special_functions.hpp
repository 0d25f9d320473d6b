#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace plaw {

namespace detail {

// B_{2j} for j = 1..8; enough Euler-Maclaurin corrections to reach machine
// precision once the summation point exceeds ~25.
inline constexpr double kBernoulli2j[8] = {
    1.0 / 6.0,   -1.0 / 30.0,     1.0 / 42.0, -1.0 / 30.0,
    5.0 / 66.0,  -691.0 / 2730.0, 7.0 / 6.0,  -3617.0 / 510.0};

// Direct summation of at least `min_direct_terms` terms, then the
// Euler-Maclaurin tail at M = q + n:
//   zeta(a,q) = sum_{k<n} (q+k)^-a + M^{1-a}/(a-1) + M^{-a}/2
//             + sum_j B_{2j}/(2j)! * a(a+1)...(a+2j-2) * M^{1-a-2j}
inline double hurwitz_zeta_terms(double alpha, double q,
                                 std::size_t min_direct_terms) {
  std::size_t n = 0;
  if (q < 25.0) n = static_cast<std::size_t>(25.0 - q) + 1;
  if (n < min_direct_terms) n = min_direct_terms;
  double s = 0.0;
  for (std::size_t k = n; k-- > 0;) s += std::pow(q + static_cast<double>(k), -alpha);
  const double m = q + static_cast<double>(n);
  const double m_pow = std::pow(m, -alpha);
  s += m * m_pow / (alpha - 1.0);
  s += 0.5 * m_pow;
  double coef = m_pow / m;        // M^{-alpha-2j+1} for the current j
  double rising = alpha;          // alpha(alpha+1)...(alpha+2j-2)
  double factorial = 2.0;         // (2j)!
  for (int j = 0; j < 8; ++j) {
    const double term = kBernoulli2j[j] / factorial * rising * coef;
    s += term;
    if (std::abs(term) < std::abs(s) * 1e-17) break;
    const double two_j = 2.0 * (j + 1);
    factorial *= (two_j + 1.0) * (two_j + 2.0);
    rising *= (alpha + two_j - 1.0) * (alpha + two_j);
    coef /= m * m;
  }
  return s;
}

// Default number of directly summed terms used by hurwitz_zeta for a given
// offset; exposed so truncation control can be tested.
inline std::size_t default_direct_terms(double q) {
  return q < 25.0 ? static_cast<std::size_t>(25.0 - q) + 1 : 1;
}

// ln(w) with a cached table for small integers; the MCMC loops hit the same
// small counts continually.
inline double log_int(long long w) {
  static const std::vector<double> table = [] {
    std::vector<double> t(1 << 16);
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = std::log(static_cast<double>(i));
    return t;
  }();
  if (w > 0 && w < static_cast<long long>(table.size())) return table[static_cast<std::size_t>(w)];
  return std::log(static_cast<double>(w));
}

// lgamma(n) for integer n, cached for the same reason.
inline double lgamma_int(long long n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(1 << 16);
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = std::lgamma(static_cast<double>(i));
    return t;
  }();
  if (n > 0 && n < static_cast<long long>(table.size())) return table[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n));
}

}  // namespace detail

inline constexpr double kMinAlphaGap = 1e-6;

// Generalized zeta sum_{n>=0} (n + xmin)^-alpha. Convergence requires
// alpha > 1; the model never needs alpha near 1, so anything below
// 1 + kMinAlphaGap is rejected rather than extrapolated.
inline double hurwitz_zeta(double alpha, double xmin) {
  if (!(alpha > 1.0 + kMinAlphaGap))
    throw std::domain_error("hurwitz_zeta: alpha must exceed 1 + 1e-6");
  if (!(xmin >= 1.0)) throw std::domain_error("hurwitz_zeta: xmin must be >= 1");
  return detail::hurwitz_zeta_terms(alpha, xmin, 0);
}

inline double log_hurwitz_zeta(double alpha, double xmin) {
  return std::log(hurwitz_zeta(alpha, xmin));
}

inline double riemann_zeta(double alpha) { return hurwitz_zeta(alpha, 1.0); }

}  // namespace plaw

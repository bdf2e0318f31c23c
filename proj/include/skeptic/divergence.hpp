#ifndef SKEPTIC_DIVERGENCE_HPP
#define SKEPTIC_DIVERGENCE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

namespace skeptic {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// x log(x / y) with 0 log 0 = 0.
inline double xlog_ratio(double x, double y) {
  if (x == 0.0) return 0.0;
  return x * std::log(x / y);
}

/// Kullback divergence D(p || q) between Bernoulli(p) and Bernoulli(q), in nats.
/// p may sit on the boundary; q must not.
inline double kl(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("kl: p must lie in [0,1]");
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("kl: q must lie in (0,1)");
  const double d = xlog_ratio(p, q) + xlog_ratio(1.0 - p, 1.0 - q);
  return d < 0.0 ? 0.0 : d;
}

/// D(p || q) for probability vectors.
inline double kl_vec(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_vec: length mismatch");
  if (p.empty()) throw std::invalid_argument("kl_vec: empty vectors");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - 1.0) > 1e-12 || std::abs(sq - 1.0) > 1e-12)
    throw std::invalid_argument("kl_vec: vectors must sum to 1");
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!(q[j] > 0.0)) throw std::domain_error("kl_vec: q has a non-positive entry at index " + std::to_string(j));
    if (p[j] < 0.0) throw std::domain_error("kl_vec: p has a negative entry at index " + std::to_string(j));
    d += xlog_ratio(p[j], q[j]);
  }
  return d < 0.0 ? 0.0 : d;
}

/// Binary entropy in bits.
inline double binary_entropy_bits(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binary_entropy_bits: p must lie in [0,1]");
  auto term = [](double x) { return x == 0.0 ? 0.0 : -x * std::log2(x); };
  return term(p) + term(1.0 - p);
}

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// glibc's std::lgamma writes the global signgam; lgamma_r keeps worker threads race-free.
inline double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

/// log B(a, b)
inline double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

}  // namespace skeptic

#endif  // SKEPTIC_DIVERGENCE_HPP

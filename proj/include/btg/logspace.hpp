#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace btg {

// Log-space zero. All charts store log-weights; impossible items carry
// exactly this value, never a large-but-finite negative float.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();
inline constexpr double kLogOne = 0.0;

inline bool is_log_zero(double a) { return std::isinf(a) && a < 0.0; }

// log(e^a + e^b) with the max-shift trick; log_add(kLogZero, a) == a.
inline double log_add(double a, double b) {
  if (is_log_zero(a)) return b;
  if (is_log_zero(b)) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = kLogZero;
  for (double x : xs)
    if (x > m) m = x;
  if (is_log_zero(m)) return kLogZero;
  double s = 0.0;
  for (double x : xs)
    if (!is_log_zero(x)) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace btg

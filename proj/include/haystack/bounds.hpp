#pragma once

#include <cmath>
#include <string>

#include "haystack/core_math.hpp"

// Closed-form generalization bounds for path-norm-controlled networks. Every
// "up to a universal constant" inequality is evaluated with the constant set
// to 1, so values are meaningful for scaling comparisons only.

namespace haystack::bounds {

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}
inline void check_delta(double delta) {
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
}
}  // namespace detail

/// sqrt(ln d / n) (P + 1) + sqrt(ln((P + 1)^2 / delta) / n).
inline double aposteriori_gap(double path_norm, double d, double n, double delta) {
  detail::require(path_norm >= 0.0, "path norm must be >= 0");
  detail::require(d >= 2.0, "d must be >= 2");
  detail::require(n >= 1.0, "n must be >= 1");
  detail::check_delta(delta);
  const double p1 = path_norm + 1.0;
  return std::sqrt(std::log(d) / n) * p1 + std::sqrt(std::log(p1 * p1 / delta) / n);
}

/// Leading term of the gap: P sqrt(ln d / n).
inline double leading_gap(double path_norm, double d, double n) {
  detail::require(path_norm >= 0.0, "path norm must be >= 0");
  detail::require(d >= 2.0, "d must be >= 2");
  detail::require(n >= 1.0, "n must be >= 1");
  return path_norm * std::sqrt(std::log(d) / n);
}

/// Smallest penalty for which the a priori estimate applies: 4 sqrt(2 ln(2d) / n).
inline double lambda_threshold(double d, double n) {
  detail::require(d >= 1.0, "d must be >= 1");
  detail::require(n >= 1.0, "n must be >= 1");
  return 4.0 * std::sqrt(2.0 * std::log(2.0 * d) / n);
}

/// B^2/m + lambda (B + 1) + (B + sqrt(ln(n / delta))) / sqrt(n).
inline double apriori_loss(double barron, double m, double n, double lambda, double delta) {
  detail::require(barron >= 0.0, "Barron norm estimate must be >= 0");
  detail::require(m >= 1.0, "width m must be >= 1");
  detail::require(n >= 1.0, "n must be >= 1");
  detail::require(lambda > 0.0, "lambda must be > 0");
  detail::check_delta(delta);
  return barron * barron / m + lambda * (barron + 1.0) +
         (barron + std::sqrt(std::log(n / delta))) / std::sqrt(n);
}

/// B^2/(lambda m) + B + sqrt(ln(1 / delta)).
inline double apriori_pathnorm(double barron, double m, double lambda, double delta) {
  detail::require(barron >= 0.0, "Barron norm estimate must be >= 0");
  detail::require(m >= 1.0, "width m must be >= 1");
  detail::require(lambda > 0.0, "lambda must be > 0");
  detail::check_delta(delta);
  return barron * barron / (lambda * m) + barron + std::sqrt(std::log(1.0 / delta));
}

/// Sample-complexity exponent: n ~ d^gamma with gamma = beta1 / beta2.
inline double gamma_rate(double beta1, double beta2) {
  detail::require(beta2 > 0.0, "beta2 must be > 0");
  return beta1 / beta2;
}

struct Inputs {
  double path_norm = 0.0;
  double barron = 1.0;
  double d = 2.0;
  double n = 1.0;
  double m = 1.0;
  double lambda = 0.0;
  double delta = 0.1;
};

struct Report {
  double aposteriori_gap;
  double leading_gap;
  double lambda_threshold;
  bool lambda_below_threshold;
  /// Only evaluated when lambda > 0.
  double apriori_loss = std::nan("");
  double apriori_pathnorm = std::nan("");
};

inline Report evaluate_all(const Inputs& in) {
  Report r{aposteriori_gap(in.path_norm, in.d, in.n, in.delta), leading_gap(in.path_norm, in.d, in.n),
           lambda_threshold(in.d, in.n), false};
  r.lambda_below_threshold = in.lambda < r.lambda_threshold;
  if (in.lambda > 0.0) {
    r.apriori_loss = apriori_loss(in.barron, in.m, in.n, in.lambda, in.delta);
    r.apriori_pathnorm = apriori_pathnorm(in.barron, in.m, in.lambda, in.delta);
  }
  return r;
}

}  // namespace haystack::bounds

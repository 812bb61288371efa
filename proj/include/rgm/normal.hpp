#pragma once

#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

namespace rgm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Standard normal quantile; 0 and 1 map to -inf and +inf.
inline double norm_quantile(double p) {
    if (p <= 0.0) return -kInf;
    if (p >= 1.0) return kInf;
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

// log Phi(x). erfc underflows below about -37; use the asymptotic tail there.
inline double log_norm_cdf(double x) {
    if (x > -37.0) return std::log(norm_cdf(x));
    return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * M_PI);
}

}  // namespace rgm

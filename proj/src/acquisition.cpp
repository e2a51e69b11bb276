#include "hmsched/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hmsched {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;     // log(2 pi) / 2
constexpr double kHalfLogPiOver2 = 0.22579135264472743236;  // log(pi / 2) / 2

/// log(1 - exp(a)) for a < 0.
double log1mexp(double a)
{
    return a > -std::numbers::ln2 ? std::log(-std::expm1(a)) : std::log1p(-std::exp(a));
}

}  // namespace

double normal_pdf(double z)
{
    return std::exp(-0.5 * z * z - kLogSqrt2Pi);
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

double erfcx(double x)
{
    if (x < 25.0) {
        return std::exp(x * x) * std::erfc(x);
    }
    // Asymptotic series; at x >= 25 the truncation error is below 1e-16 relative.
    const double inv2 = 1.0 / (2.0 * x * x);
    const double series = 1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2 * (1.0 - 7.0 * inv2)));
    return series / (x * std::sqrt(std::numbers::pi));
}

double log_h(double z)
{
    if (z > -1.0) {
        return std::log(normal_pdf(z) + z * normal_cdf(z));
    }
    // h(z) = phi(z) * (1 - |z| * Phi(z) / phi(z)) and Phi(z) / phi(z) = sqrt(pi/2) * erfcx(-z / sqrt2).
    if (z > -1e4) {
        const double a = std::log(erfcx(-z * kInvSqrt2) * std::abs(z)) + kHalfLogPiOver2;
        return -0.5 * z * z - kLogSqrt2Pi + log1mexp(a);
    }
    // h(z) ~ phi(z) / z^2 * (1 - 3 / z^2)
    return -0.5 * z * z - kLogSqrt2Pi - 2.0 * std::log(std::abs(z)) + std::log1p(-3.0 / (z * z));
}

double log_expected_improvement(double mean, double variance, double best)
{
    const double sigma = std::sqrt(std::max(variance, 0.0));
    const double gap = best - mean;
    double value;
    if (!(sigma > 0.0)) {
        value = gap > 0.0 ? std::log(gap) : kLogFloor;
    } else {
        value = log_h(gap / sigma) + std::log(sigma);
    }
    if (!std::isfinite(value) || value < kLogFloor) return kLogFloor;
    return value;
}

double lower_partial_moment(double c, double mean, double sigma)
{
    if (c == -std::numeric_limits<double>::infinity()) return 0.0;
    if (!(sigma > 0.0)) return std::max(c - mean, 0.0);
    const double z = (c - mean) / sigma;
    if (z > -1.0) {
        return std::max(0.0, (c - mean) * normal_cdf(z) + sigma * normal_pdf(z));
    }
    return sigma * std::exp(log_h(z));
}

}  // namespace hmsched

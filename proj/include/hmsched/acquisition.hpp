#pragma once

namespace hmsched {

/// Floor returned in place of log(0).
inline constexpr double kLogFloor = -1e6;

double normal_pdf(double z);
double normal_cdf(double z);
/// exp(x^2) * erfc(x), accurate for large x where erfc underflows.
double erfcx(double x);

/// log(phi(z) + z * Phi(z)), stable deep into the lower tail.
double log_h(double z);

/// Expected improvement below `best` (minimization) in log space:
/// log((best - mu) Phi(z) + sigma phi(z)) with z = (best - mu) / sigma.
/// Zero variance gives log(max(best - mu, 0)); log(0) saturates at kLogFloor.
double log_expected_improvement(double mean, double variance, double best);

/// E[max(c - Y, 0)] for Y ~ N(mean, sigma^2); sigma may be 0.
double lower_partial_moment(double c, double mean, double sigma);

}  // namespace hmsched

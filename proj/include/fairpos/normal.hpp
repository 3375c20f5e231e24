#pragma once

namespace fairpos {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF for p in (0, 1). Acklam's rational
/// approximation (relative error below 1.15e-9) refined by one Halley step
/// against erfc, which brings it to within a few ulps.
double normal_quantile(double p);

/// Two-sided critical value z_{1 - (1 - level) / 2}.
double two_sided_critical(double level);

}  // namespace fairpos

// Power-law fits in log-log coordinates.
#pragma once

#include <vector>

namespace plab {

struct FitWindow {
    double lo, hi;
};

struct DecayFit {
    double exponent = 0.0;  // slope of log(value) against log(x)
    double prefactor = 0.0;
    double x_lo = 0.0, x_hi = 0.0;
    double r_squared = 0.0;
    int samples = 0;
};

// Least squares over the samples with lo <= x <= hi. Needs at least 8 of them, all positive.
DecayFit fit_power_law(const std::vector<double>& x, const std::vector<double>& values, FitWindow window);

// Same regression without the sample floor (at least 2 points); used for short sweeps in eps.
DecayFit fit_loglog(const std::vector<double>& x, const std::vector<double>& values);

}  // namespace plab

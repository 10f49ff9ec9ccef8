#include "prandtl_lab/fit.hpp"

#include <algorithm>
#include <cmath>

#include "prandtl_lab/errors.hpp"

namespace plab {

namespace {

DecayFit regress(const std::vector<double>& lx, const std::vector<double>& ly) {
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        mx += lx[k];
        my += ly[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
        syy += (ly[k] - my) * (ly[k] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("fit: abscissae coincide");
    DecayFit f;
    f.exponent = sxy / sxx;
    f.prefactor = std::exp(my - f.exponent * mx);
    // A constant curve is fitted exactly by a zero slope.
    f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    f.samples = static_cast<int>(lx.size());
    return f;
}

void check_positive(const std::vector<double>& x, const std::vector<double>& v) {
    if (x.size() != v.size()) throw ShapeError("fit: sample arrays differ in length");
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0)) throw DomainError("fit: abscissae must be positive");
        if (!(v[k] > 0.0)) throw DomainError("fit: values must be positive");
    }
}

}  // namespace

DecayFit fit_power_law(const std::vector<double>& x, const std::vector<double>& values, FitWindow w) {
    if (x.size() != values.size()) throw ShapeError("fit_power_law: sample arrays differ in length");
    if (!(w.lo < w.hi)) throw ConfigError("fit_power_law: window must have lo < hi");
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] < w.lo || x[k] > w.hi) continue;
        if (!(x[k] > 0.0)) throw DomainError("fit_power_law: abscissae must be positive");
        if (!(values[k] > 0.0)) throw DomainError("fit_power_law: values must be positive");
        lx.push_back(std::log(x[k]));
        ly.push_back(std::log(values[k]));
    }
    if (lx.size() < 8) throw PreconditionError("fit_power_law: need at least 8 samples in the window");
    DecayFit f = regress(lx, ly);
    f.x_lo = w.lo;
    f.x_hi = w.hi;
    return f;
}

DecayFit fit_loglog(const std::vector<double>& x, const std::vector<double>& values) {
    check_positive(x, values);
    if (x.size() < 2) throw PreconditionError("fit_loglog: need at least 2 samples");
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size(); ++k) {
        lx.push_back(std::log(x[k]));
        ly.push_back(std::log(values[k]));
    }
    DecayFit f = regress(lx, ly);
    f.x_lo = *std::min_element(x.begin(), x.end());
    f.x_hi = *std::max_element(x.begin(), x.end());
    return f;
}

}  // namespace plab

#include "prandtl_lab/core_grid.hpp"

#include <cmath>
#include <string>

#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/numerics.hpp"

namespace plab {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void check_increasing(std::span<const double> v, const char* what) {
    if (v.size() < 2) throw ConfigError(std::string(what) + ": need at least two nodes");
    if (v[0] != 0.0) throw ConfigError(std::string(what) + ": first node must be 0");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1]) || !std::isfinite(v[i]))
            throw ConfigError(std::string(what) + ": nodes must be finite and strictly increasing");
}

}  // namespace

std::vector<double> stretched_nodes(int n, double length, double first_step) {
    if (n < 2 || !positive_finite(length) || !positive_finite(first_step))
        throw ConfigError("stretched_nodes: bad arguments");
    const int m = n - 1;
    std::vector<double> out(n);
    const double uniform = length / m;
    if (first_step >= uniform * (1.0 - 1e-14)) {
        for (int i = 0; i < n; ++i) out[i] = length * i / m;
        out[m] = length;
        return out;
    }
    // h1(b) = L (e^{b/m} - 1)/(e^b - 1) decreases from L/m as b grows.
    auto h1 = [&](double b) { return length * std::expm1(b / m) / std::expm1(b); };
    double lo = 1e-12, hi = 1.0;
    while (h1(hi) > first_step) {
        hi *= 2.0;
        if (hi > 1e4) throw ConfigError("stretched_nodes: clustering too strong");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (h1(mid) > first_step) lo = mid; else hi = mid;
    }
    const double b = hi;  // h1(hi) <= first_step
    const double den = std::expm1(b);
    for (int i = 0; i < n; ++i) out[i] = length * std::expm1(b * i / m) / den;
    out[0] = 0.0;
    out[m] = length;
    return out;
}

std::vector<double> trapezoid_weights(std::span<const double> nodes) {
    const std::size_t n = nodes.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = nodes[i + 1] - nodes[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

Grid2D grid_from_nodes(std::vector<double> x, std::vector<double> y) {
    check_increasing(x, "x nodes");
    check_increasing(y, "y nodes");
    Grid2D g;
    g.x = std::move(x);
    g.y = std::move(y);
    g.wy = trapezoid_weights(g.y);
    return g;
}

Grid2D make_grid(int nx, int ny, double x_max, double y_max, double wall_ratio, double x_ramp) {
    if (nx < 8 || ny < 8) throw ConfigError("make_grid: nx and ny must be at least 8");
    if (!positive_finite(x_max) || !positive_finite(y_max))
        throw ConfigError("make_grid: extents must be positive and finite");
    if (!std::isfinite(wall_ratio) || wall_ratio < 1.0)
        throw ConfigError("make_grid: wall_ratio must be >= 1");
    if (!std::isfinite(x_ramp) || x_ramp < 1.0) throw ConfigError("make_grid: x_ramp must be >= 1");

    const double hy = wall_ratio == 1.0 ? y_max / (ny - 1) : y_max / (ny * wall_ratio);
    const double hx = x_ramp == 1.0 ? x_max / (nx - 1) : x_max / ((nx - 1) * x_ramp);
    Grid2D g = grid_from_nodes(stretched_nodes(nx, x_max, hx), stretched_nodes(ny, y_max, hy));
    g.wall_ratio = wall_ratio;
    g.x_ramp = x_ramp;
    return g;
}

double default_y_max(double x_max, double multiple) { return multiple * std::sqrt(1.0 + x_max); }

double integrate(std::span<const double> values, std::span<const double> nodes) {
    if (values.size() != nodes.size())
        throw ShapeError("integrate: values and nodes differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        s += 0.5 * (nodes[i + 1] - nodes[i]) * (values[i] + values[i + 1]);
    return s;
}

double integrate_y(std::span<const double> values, const Grid2D& grid) {
    if (values.size() != grid.ny()) throw ShapeError("integrate_y: length differs from ny");
    return integrate(values, grid.y);
}

std::vector<double> cumulative_integral(std::span<const double> values, std::span<const double> nodes) {
    if (values.size() != nodes.size())
        throw ShapeError("cumulative_integral: values and nodes differ in length");
    std::vector<double> out(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (nodes[i] - nodes[i - 1]) * (values[i] + values[i - 1]);
    return out;
}

double similarity_z(double x, double y) {
    if (!(x >= 0.0) || !(y >= 0.0)) throw DomainError("similarity_z: x and y must be nonnegative");
    return y / std::sqrt(x + 1.0);
}

namespace {

void check_shape(const Field2D& f, const Grid2D& g) {
    if (f.nx != g.nx() || f.ny != g.ny()) throw ShapeError("field shape differs from grid");
}

}  // namespace

Field2D diff_x(const Field2D& f, const Grid2D& g) {
    check_shape(f, g);
    Field2D out(g);
    std::vector<double> col(g.nx());
    for (std::size_t j = 0; j < g.ny(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) col[i] = f(i, j);
        const auto d = derivative(col, g.x);
        for (std::size_t i = 0; i < g.nx(); ++i) out(i, j) = d[i];
    }
    return out;
}

Field2D diff_y(const Field2D& f, const Grid2D& g) {
    check_shape(f, g);
    Field2D out(g);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const auto d = derivative(f.row(i), g.y);
        std::copy(d.begin(), d.end(), out.row(i).begin());
    }
    return out;
}

Field2D diff_yy(const Field2D& f, const Grid2D& g) {
    check_shape(f, g);
    Field2D out(g);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const auto d = second_derivative(f.row(i), g.y);
        std::copy(d.begin(), d.end(), out.row(i).begin());
    }
    return out;
}

double integrate_xy(const Field2D& f, const Grid2D& g) {
    check_shape(f, g);
    const auto wx = trapezoid_weights(g.x);
    double s = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < g.ny(); ++j) r += g.wy[j] * f(i, j);
        s += wx[i] * r;
    }
    return s;
}

}  // namespace plab

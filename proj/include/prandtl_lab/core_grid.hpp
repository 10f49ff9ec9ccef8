// Tensor-product grids on the truncated quadrant, y quadrature, similarity coordinate.
#pragma once

#include <span>
#include <vector>

namespace plab {

struct Grid2D {
    std::vector<double> x;   // x[0] = 0, strictly increasing
    std::vector<double> y;   // y[0] = 0, strictly increasing
    std::vector<double> wy;  // trapezoid weights on y
    double wall_ratio = 1.0;
    double x_ramp = 1.0;

    std::size_t nx() const { return x.size(); }
    std::size_t ny() const { return y.size(); }
    double x_max() const { return x.back(); }
    double y_max() const { return y.back(); }
};

// Row-major field on a Grid2D: value(i, j) at (x[i], y[j]).
struct Field2D {
    std::size_t nx = 0, ny = 0;
    std::vector<double> data;

    Field2D() = default;
    Field2D(std::size_t nx_, std::size_t ny_, double fill = 0.0)
        : nx(nx_), ny(ny_), data(nx_ * ny_, fill) {}
    explicit Field2D(const Grid2D& g, double fill = 0.0) : Field2D(g.nx(), g.ny(), fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * ny + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * ny + j]; }
    std::span<double> row(std::size_t i) { return {data.data() + i * ny, ny}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * ny, ny}; }
};

// Geometric clustering toward y = 0 with wall_ratio > 1; wall_ratio = 1 is uniform.
// x_ramp > 1 shrinks the first x step by that factor with the same map.
Grid2D make_grid(int nx, int ny, double x_max, double y_max, double wall_ratio, double x_ramp);

// Grid from explicit node lists (validated, weights filled in).
Grid2D grid_from_nodes(std::vector<double> x, std::vector<double> y);

// Default truncation height for a given x extent.
double default_y_max(double x_max, double multiple = 10.0);

// Nodes of the exponential map s -> L (e^{b s} - 1)/(e^b - 1) whose first step is h1.
std::vector<double> stretched_nodes(int n, double length, double first_step);

std::vector<double> trapezoid_weights(std::span<const double> nodes);

double integrate_y(std::span<const double> values, const Grid2D& grid);
double integrate(std::span<const double> values, std::span<const double> nodes);

// Running trapezoid integral from nodes[0]; out[0] = 0.
std::vector<double> cumulative_integral(std::span<const double> values, std::span<const double> nodes);

double similarity_z(double x, double y);

// Nonuniform second-order differences of a field along x, along y, and twice along y.
Field2D diff_x(const Field2D& f, const Grid2D& g);
Field2D diff_y(const Field2D& f, const Grid2D& g);
Field2D diff_yy(const Field2D& f, const Grid2D& g);

// Trapezoid double integral over the grid.
double integrate_xy(const Field2D& f, const Grid2D& g);

}  // namespace plab

// Small dense-banded linear algebra, nonuniform finite differences, 1-D interpolation.
#pragma once

#include <span>
#include <vector>

namespace plab {

// General band matrix with kl sub- and ku super-diagonals, LU with partial pivoting.
class BandMatrix {
public:
    BandMatrix(int n, int kl, int ku);

    int size() const { return n_; }
    void clear();
    // Adds v to A(i, j); |i - j| must lie inside the band.
    void add(int i, int j, double v);
    void set(int i, int j, double v);
    double get(int i, int j) const;
    // Solves in place; destroys the matrix. Throws SolverError on a zero pivot.
    void solve(std::vector<double>& rhs);

private:
    double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * ld_ + (j - i + kl_)]; }
    double at(int i, int j) const { return a_[static_cast<std::size_t>(i) * ld_ + (j - i + kl_)]; }
    int n_, kl_, ku_, ld_;
    std::vector<double> a_;  // row-major, row i holds columns [i - kl, i + ku + kl]
};

// Thomas algorithm; a = sub, b = diag, c = super. Solves in place into d.
void solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                       std::vector<double>& d);

// Three-point weights for f' and f'' at x1 from (x0, x1, x2), any spacing.
struct Stencil3 {
    double m, c, p;
};
Stencil3 d1_weights(double x0, double x1, double x2);
Stencil3 d2_weights(double x0, double x1, double x2);
// One-sided second-order first derivative at x0 using (x0, x1, x2).
Stencil3 d1_forward_weights(double x0, double x1, double x2);
// One-sided second-order first derivative at x2 using (x0, x1, x2).
Stencil3 d1_backward_weights(double x0, double x1, double x2);

// Second-order derivatives of nodal samples on a nonuniform grid (one-sided at ends).
std::vector<double> derivative(std::span<const double> f, std::span<const double> x);
std::vector<double> second_derivative(std::span<const double> f, std::span<const double> x);

// Index k with x[k] <= t <= x[k+1]; requires x increasing and t inside.
std::size_t bracket(std::span<const double> x, double t);

double interp_linear(std::span<const double> x, std::span<const double> f, double t);

// Cubic Hermite interpolation with given nodal slopes.
double interp_hermite(std::span<const double> x, std::span<const double> f,
                      std::span<const double> df, double t);

// Natural-derivative-free cubic: Hermite with second-order finite-difference slopes.
class CubicInterp {
public:
    CubicInterp() = default;
    CubicInterp(std::vector<double> x, std::vector<double> f);
    CubicInterp(std::vector<double> x, std::vector<double> f, std::vector<double> df);
    double operator()(double t) const;
    double derivative(double t) const;
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

private:
    std::vector<double> x_, f_, df_;
};

}  // namespace plab

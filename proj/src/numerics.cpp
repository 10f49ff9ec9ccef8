#include "prandtl_lab/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "prandtl_lab/errors.hpp"

namespace plab {

BandMatrix::BandMatrix(int n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), ld_(2 * kl + ku + 1), a_(static_cast<std::size_t>(n) * ld_, 0.0) {
    if (n <= 0 || kl < 0 || ku < 0) throw ConfigError("BandMatrix: bad dimensions");
}

void BandMatrix::clear() { std::fill(a_.begin(), a_.end(), 0.0); }

void BandMatrix::add(int i, int j, double v) {
    if (j - i > ku_ || i - j > kl_ || i < 0 || j < 0 || i >= n_ || j >= n_)
        throw ShapeError("BandMatrix::add outside band");
    at(i, j) += v;
}

void BandMatrix::set(int i, int j, double v) {
    if (j - i > ku_ || i - j > kl_ || i < 0 || j < 0 || i >= n_ || j >= n_)
        throw ShapeError("BandMatrix::set outside band");
    at(i, j) = v;
}

double BandMatrix::get(int i, int j) const {
    if (j - i > ku_ + kl_ || i - j > kl_ || i < 0 || j < 0 || i >= n_ || j >= n_) return 0.0;
    return at(i, j);
}

void BandMatrix::solve(std::vector<double>& b) {
    if (static_cast<int>(b.size()) != n_) throw ShapeError("BandMatrix::solve: rhs length");
    const int uw = ku_ + kl_;  // upper width after pivoting fill
    for (int k = 0; k < n_; ++k) {
        const int last = std::min(n_ - 1, k + kl_);
        int piv = k;
        double best = std::abs(at(k, k));
        for (int i = k + 1; i <= last; ++i)
            if (std::abs(at(i, k)) > best) {
                best = std::abs(at(i, k));
                piv = i;
            }
        if (!(best > 0.0) || !std::isfinite(best)) throw SolverError("BandMatrix: singular pivot");
        const int jend = std::min(n_ - 1, k + uw);
        if (piv != k) {
            for (int j = k; j <= jend; ++j) std::swap(at(k, j), at(piv, j));
            std::swap(b[k], b[piv]);
        }
        const double d = at(k, k);
        for (int i = k + 1; i <= last; ++i) {
            const double l = at(i, k) / d;
            if (l == 0.0) continue;
            at(i, k) = 0.0;
            for (int j = k + 1; j <= jend; ++j) at(i, j) -= l * at(k, j);
            b[i] -= l * b[k];
        }
    }
    for (int k = n_ - 1; k >= 0; --k) {
        double s = b[k];
        const int jend = std::min(n_ - 1, k + uw);
        for (int j = k + 1; j <= jend; ++j) s -= at(k, j) * b[j];
        b[k] = s / at(k, k);
    }
}

void solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                       std::vector<double>& d) {
    const std::size_t n = b.size();
    if (a.size() != n || c.size() != n || d.size() != n) throw ShapeError("solve_tridiagonal: sizes");
    for (std::size_t i = 1; i < n; ++i) {
        if (b[i - 1] == 0.0) throw SolverError("solve_tridiagonal: zero pivot");
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    if (b[n - 1] == 0.0) throw SolverError("solve_tridiagonal: zero pivot");
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

Stencil3 d1_weights(double x0, double x1, double x2) {
    const double hm = x1 - x0, hp = x2 - x1;
    return {-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))};
}

Stencil3 d2_weights(double x0, double x1, double x2) {
    const double hm = x1 - x0, hp = x2 - x1;
    return {2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))};
}

Stencil3 d1_forward_weights(double x0, double x1, double x2) {
    const double h1 = x1 - x0, h2 = x2 - x0;
    // Derivative at x0 of the quadratic through the three points.
    return {-(h1 + h2) / (h1 * h2), h2 / (h1 * (h2 - h1)), -h1 / (h2 * (h2 - h1))};
}

Stencil3 d1_backward_weights(double x0, double x1, double x2) {
    const double h1 = x2 - x1, h2 = x2 - x0;
    return {h1 / (h2 * (h2 - h1)), -h2 / (h1 * (h2 - h1)), (h1 + h2) / (h1 * h2)};
}

std::vector<double> derivative(std::span<const double> f, std::span<const double> x) {
    const std::size_t n = x.size();
    if (f.size() != n || n < 3) throw ShapeError("derivative: need matching lengths >= 3");
    std::vector<double> d(n);
    auto s0 = d1_forward_weights(x[0], x[1], x[2]);
    d[0] = s0.m * f[0] + s0.c * f[1] + s0.p * f[2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        auto s = d1_weights(x[i - 1], x[i], x[i + 1]);
        d[i] = s.m * f[i - 1] + s.c * f[i] + s.p * f[i + 1];
    }
    auto s1 = d1_backward_weights(x[n - 3], x[n - 2], x[n - 1]);
    d[n - 1] = s1.m * f[n - 3] + s1.c * f[n - 2] + s1.p * f[n - 1];
    return d;
}

std::vector<double> second_derivative(std::span<const double> f, std::span<const double> x) {
    const std::size_t n = x.size();
    if (f.size() != n || n < 3) throw ShapeError("second_derivative: need matching lengths >= 3");
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        auto s = d2_weights(x[i - 1], x[i], x[i + 1]);
        d[i] = s.m * f[i - 1] + s.c * f[i] + s.p * f[i + 1];
    }
    // Linear extrapolation of the second derivative to the ends.
    if (n >= 4) {
        d[0] = d[1] + (d[2] - d[1]) * (x[0] - x[1]) / (x[2] - x[1]);
        d[n - 1] = d[n - 2] + (d[n - 2] - d[n - 3]) * (x[n - 1] - x[n - 2]) / (x[n - 2] - x[n - 3]);
    } else {
        d[0] = d[1];
        d[n - 1] = d[n - 2];
    }
    return d;
}

std::size_t bracket(std::span<const double> x, double t) {
    const std::size_t n = x.size();
    if (n < 2) throw ShapeError("bracket: need two nodes");
    if (t <= x[0]) return 0;
    if (t >= x[n - 1]) return n - 2;
    auto it = std::upper_bound(x.begin(), x.end(), t);
    return static_cast<std::size_t>(it - x.begin()) - 1;
}

double interp_linear(std::span<const double> x, std::span<const double> f, double t) {
    const std::size_t k = bracket(x, t);
    const double s = (t - x[k]) / (x[k + 1] - x[k]);
    return (1.0 - s) * f[k] + s * f[k + 1];
}

double interp_hermite(std::span<const double> x, std::span<const double> f, std::span<const double> df,
                      double t) {
    const std::size_t k = bracket(x, t);
    const double h = x[k + 1] - x[k];
    const double s = (t - x[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * f[k] + h10 * h * df[k] + h01 * f[k + 1] + h11 * h * df[k + 1];
}

CubicInterp::CubicInterp(std::vector<double> x, std::vector<double> f)
    : x_(std::move(x)), f_(std::move(f)) {
    df_ = plab::derivative(f_, x_);
}

CubicInterp::CubicInterp(std::vector<double> x, std::vector<double> f, std::vector<double> df)
    : x_(std::move(x)), f_(std::move(f)), df_(std::move(df)) {
    if (x_.size() != f_.size() || x_.size() != df_.size()) throw ShapeError("CubicInterp: sizes");
}

double CubicInterp::operator()(double t) const { return interp_hermite(x_, f_, df_, t); }

double CubicInterp::derivative(double t) const {
    const std::size_t k = bracket(x_, t);
    const double h = x_[k + 1] - x_[k];
    const double s = (t - x_[k]) / h;
    const double s2 = s * s;
    const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
    return (d00 * f_[k] + d01 * f_[k + 1]) / h + d10 * df_[k] + d11 * df_[k + 1];
}

}  // namespace plab

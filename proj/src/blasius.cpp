#include "prandtl_lab/blasius.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/numerics.hpp"

namespace plab {

namespace {

using State = std::array<double, 3>;  // f, f', f''

State rhs(const State& y) { return {y[1], y[2], -y[0] * y[2]}; }

State rk4_step(const State& y, double h) {
    auto axpy = [](const State& a, double c, const State& b) {
        return State{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]};
    };
    const State k1 = rhs(y);
    const State k2 = rhs(axpy(y, 0.5 * h, k1));
    const State k3 = rhs(axpy(y, 0.5 * h, k2));
    const State k4 = rhs(axpy(y, h, k3));
    State out;
    for (int i = 0; i < 3; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return out;
}

// Integrates to z_max and returns f'(z_max); fills the profile arrays when out != nullptr.
double shoot(double s, double z_max, int nz, int substeps, BlasiusProfile* out) {
    const double dz = z_max / (nz - 1);
    const double h = dz / substeps;
    State y{0.0, 0.0, s};
    if (out) {
        out->z.assign(nz, 0.0);
        out->f.assign(nz, 0.0);
        out->fp.assign(nz, 0.0);
        out->fpp.assign(nz, 0.0);
        out->fpp[0] = s;
    }
    for (int i = 1; i < nz; ++i) {
        for (int k = 0; k < substeps; ++k) y = rk4_step(y, h);
        if (!std::isfinite(y[1])) return y[1];
        if (out) {
            out->z[i] = (i == nz - 1) ? z_max : i * dz;
            out->f[i] = y[0];
            out->fp[i] = y[1];
            out->fpp[i] = y[2];
        }
    }
    return y[1];
}

double shoot_parameter(double z_max, int nz, int substeps, const BlasiusOptions& opt) {
    auto g = [&](double s) { return shoot(s, z_max, nz, substeps, nullptr) - 1.0; };
    double lo = opt.bracket_lo, hi = opt.bracket_hi;
    double glo = g(lo), ghi = g(hi);
    if (!(glo < 0.0 && ghi > 0.0)) throw SolverError("solve_blasius: shooting bracket does not straddle f'(z_max) = 1");
    for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) return mid;
        if (gm < 0.0) { lo = mid; glo = gm; } else { hi = mid; ghi = gm; }
    }
    // One secant refinement inside the final bracket.
    double s = (ghi != glo) ? lo - glo * (hi - lo) / (ghi - glo) : 0.5 * (lo + hi);
    if (!(s >= lo && s <= hi)) s = 0.5 * (lo + hi);
    return s;
}

struct Fvals {
    double f, fp, fpp;
};

Fvals eval_f(const BlasiusProfile& p, double eta) {
    const double zm = p.z_max();
    if (eta >= zm) {
        return {p.f.back() + (eta - zm), 1.0, 0.0};
    }
    // f''' = -f f'' is the slope for the f'' interpolant.
    const std::size_t k = bracket(p.z, eta);
    const double h = p.z[k + 1] - p.z[k];
    const double t = (eta - p.z[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    auto herm = [&](double a0, double d0, double a1, double d1) {
        return h00 * a0 + h10 * h * d0 + h01 * a1 + h11 * h * d1;
    };
    const double f = herm(p.f[k], p.fp[k], p.f[k + 1], p.fp[k + 1]);
    const double fp = herm(p.fp[k], p.fpp[k], p.fp[k + 1], p.fpp[k + 1]);
    const double fpp = herm(p.fpp[k], -p.f[k] * p.fpp[k], p.fpp[k + 1], -p.f[k + 1] * p.fpp[k + 1]);
    return {f, fp, fpp};
}

}  // namespace

BlasiusProfile BlasiusProfile::with_origin(double new_x0) const {
    if (!(new_x0 > 0.0)) throw DomainError("BlasiusProfile: x0 must be positive");
    BlasiusProfile out = *this;
    out.x0 = new_x0;
    return out;
}

BlasiusProfile solve_blasius(double z_max, int nz, double tol, const BlasiusOptions& opt) {
    if (!(z_max >= 15.0) || !std::isfinite(z_max)) throw ConfigError("solve_blasius: z_max must be >= 15");
    if (nz < 16) throw ConfigError("solve_blasius: nz must be >= 16");
    if (!(tol > 0.0)) throw ConfigError("solve_blasius: tol must be positive");
    const double dz = z_max / (nz - 1);
    const int substeps = opt.substeps > 0 ? opt.substeps : std::max(1, static_cast<int>(std::ceil(dz / 0.0025 - 1e-12)));

    // RK4 is stable for h |lambda| below about 2.78; lambda ~ -f ~ -z_max in the far field.
    if (dz / substeps * z_max > 2.5)
        throw ResolutionError("solve_blasius: nz too small for a stable fixed-step integration");
    const double s = shoot_parameter(z_max, nz, substeps, opt);
    BlasiusProfile p;
    const double end = shoot(s, z_max, nz, substeps, &p);
    p.s = s;
    p.x0 = 1.0;
    if (!(std::abs(end - 1.0) <= tol))
        throw ResolutionError("solve_blasius: |f'(z_max) - 1| above tolerance at this resolution");
    const double s_half = shoot_parameter(z_max, nz, 2 * substeps, opt);
    p.integration_error = std::abs(s - s_half) * 16.0 / 15.0;
    return p;
}

double blasius_ode_residual(const BlasiusProfile& p) {
    const std::size_t n = p.z.size();
    if (p.f.size() != n || p.fp.size() != n || p.fpp.size() != n || n < 6)
        throw ShapeError("blasius_ode_residual: inconsistent profile arrays");
    const double h = p.z[1] - p.z[0];
    const auto& q = p.fpp;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double f3;
        if (i == 1) {
            f3 = (-3 * q[0] - 10 * q[1] + 18 * q[2] - 6 * q[3] + q[4]) / (12 * h);
        } else if (i == n - 2) {
            f3 = -(-3 * q[n - 1] - 10 * q[n - 2] + 18 * q[n - 3] - 6 * q[n - 4] + q[n - 5]) / (12 * h);
        } else {
            f3 = (q[i - 2] - 8 * q[i - 1] + 8 * q[i + 1] - q[i + 2]) / (12 * h);
        }
        worst = std::max(worst, std::abs(p.f[i] * q[i] + f3));
    }
    return worst;
}

double blasius_eta(const BlasiusProfile& p, double x, double y) {
    if (!(x >= 0.0) || !(y >= 0.0)) throw DomainError("blasius: x and y must be nonnegative");
    return y / std::sqrt(2.0 * (x + p.x0));
}

BlasiusVelocity blasius_field(const BlasiusProfile& p, double x, double y) {
    const double eta = blasius_eta(p, x, y);
    if (eta > p.z_max() * (1.0 + 1e-14)) throw ExtrapolationError("blasius_field: y beyond the profile range");
    const Fvals fv = eval_f(p, std::min(eta, p.z_max()));
    const double r = std::sqrt(2.0 * (x + p.x0));
    return {fv.fp, (eta * fv.fp - fv.f) / r};
}

BlasiusSample blasius_sample(const BlasiusProfile& p, double x, double y) {
    const double eta = blasius_eta(p, x, y);
    const Fvals fv = eval_f(p, eta);
    const double X = x + p.x0;
    const double r = std::sqrt(2.0 * X);
    const double f3 = -fv.f * fv.fpp;
    BlasiusSample s{};
    s.u = fv.fp;
    s.u_y = fv.fpp / r;
    s.u_yy = f3 / (r * r);
    s.u_x = -fv.fpp * eta / (2.0 * X);
    s.v = (eta * fv.fp - fv.f) / r;
    s.v_y = -s.u_x;
    s.v_x = -(eta * eta * fv.fpp + eta * fv.fp - fv.f) / (2.0 * X * r);
    return s;
}

BlasiusPropertiesReport blasius_properties_check(const BlasiusProfile& p, const std::vector<double>& xs,
                                                 double tol, double shear_tol) {
    BlasiusPropertiesReport rep;
    rep.x_samples = xs;
    rep.max_uyy = -INFINITY;
    for (double x : xs) {
        const double X = x + p.x0;
        for (std::size_t k = 0; k < p.z.size(); ++k) {
            const double uyy = -p.f[k] * p.fpp[k] / (2.0 * X);
            rep.max_uyy = std::max(rep.max_uyy, uyy);
        }
        // Wall shear from second-order one-sided differences of the stored f'.
        const auto w = d1_forward_weights(p.z[0], p.z[1], p.z[2]);
        const double dfp = w.m * p.fp[0] + w.c * p.fp[1] + w.p * p.fp[2];
        const double shear = dfp / std::sqrt(2.0 * X);
        const double err = std::max(std::abs(shear * std::sqrt(2.0 * X) - p.s), std::abs(p.fpp[0] - p.s));
        rep.max_wall_shear_error = std::max(rep.max_wall_shear_error, err);
        if (!(shear > 0.0) || !(p.fpp[0] > 0.0)) rep.wall_shear_ok = false;
    }
    if (xs.empty()) rep.max_uyy = 0.0;
    rep.concavity_ok = rep.max_uyy <= tol;
    if (rep.max_wall_shear_error > shear_tol) rep.wall_shear_ok = false;
    if (!(p.s > 0.0)) rep.wall_shear_ok = false;
    return rep;
}

Field2D blasius_u_field(const BlasiusProfile& p, const Grid2D& g) {
    Field2D out(g);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) out(i, j) = blasius_sample(p, g.x[i], g.y[j]).u;
    return out;
}

Field2D blasius_v_field(const BlasiusProfile& p, const Grid2D& g) {
    Field2D out(g);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) out(i, j) = blasius_sample(p, g.x[i], g.y[j]).v;
    return out;
}

std::string blasius_csv(const BlasiusProfile& p) {
    std::ostringstream os;
    os << "z,f,fp,fpp\n";
    char buf[128];
    for (std::size_t k = 0; k < p.z.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.16g,%.16g,%.16g,%.16g\n", p.z[k], p.f[k], p.fp[k], p.fpp[k]);
        os << buf;
    }
    return os.str();
}

void write_blasius_csv(const BlasiusProfile& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path);
    out << blasius_csv(p);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace plab

#include "prandtl_lab/prandtl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/numerics.hpp"

namespace plab {

std::vector<double> PrandtlRun::x() const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.x);
    return out;
}

Field2D PrandtlRun::u_field() const {
    Field2D f(states.size(), y.size());
    for (std::size_t i = 0; i < states.size(); ++i) std::copy(states[i].u.begin(), states[i].u.end(), f.row(i).begin());
    return f;
}

Field2D PrandtlRun::v_field() const {
    Field2D f(states.size(), y.size());
    for (std::size_t i = 0; i < states.size(); ++i) std::copy(states[i].v.begin(), states[i].v.end(), f.row(i).begin());
    return f;
}

Grid2D PrandtlRun::grid() const { return grid_from_nodes(x(), y); }

double wall_shear(const std::vector<double>& u, const std::vector<double>& y) {
    if (u.size() != y.size() || u.size() < 3) throw ShapeError("wall_shear: sizes");
    const auto w = d1_forward_weights(y[0], y[1], y[2]);
    return w.m * u[0] + w.c * u[1] + w.p * u[2];
}

std::vector<double> v_from_u(const std::vector<double>& u_prev, const std::vector<double>& u_next, double dx,
                             const std::vector<double>& y) {
    if (!(dx != 0.0) || !std::isfinite(dx)) throw DomainError("v_from_u: dx must be nonzero");
    if (u_prev.size() != y.size() || u_next.size() != y.size()) throw ShapeError("v_from_u: sizes");
    std::vector<double> ux(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) ux[j] = (u_next[j] - u_prev[j]) / dx;
    auto v = cumulative_integral(ux, y);
    for (auto& e : v) e = -e;
    return v;
}

std::vector<double> bump_perturbation(const std::vector<double>& y, double amplitude, double center,
                                      double width, double cutoff_scale) {
    std::vector<double> out(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double r = y[j] / cutoff_scale;
        const double c = r * r * r / (1.0 + r * r * r);
        const double g = (y[j] - center) / width;
        out[j] = amplitude * std::exp(-g * g) * c;
    }
    return out;
}

XDiff backward_x_weights(const double* xm2, double xm1, double x) {
    const double h = x - xm1;
    if (xm2 && h / (xm1 - *xm2) <= 2.0) {
        const auto s = d1_backward_weights(*xm2, xm1, x);
        return {s.p, s.c, s.m};
    }
    return {1.0 / h, -1.0 / h, 0.0};
}

namespace {

// v at x = 0. Without forcing, u u_x + v u_y = u_yy with v = -int u_x gives (v/u)_y = -u_yy/u^2,
// so v = -u int_0^y u_yy/u^2, using only the datum. With forcing the integrand has a 1/y^2 wall
// singularity and the one-sided x difference of the first three states is used instead.
std::vector<double> datum_v(const std::vector<double>& u, const std::vector<double>& y, double dpdx,
                            const std::vector<PrandtlState>& states, const std::vector<double>& xs) {
    const std::size_t n = y.size();
    std::vector<double> v(n, 0.0);
    if (dpdx == 0.0) {
        const auto uyy = second_derivative(u, y);
        std::vector<double> q(n, 0.0);
        for (std::size_t j = 1; j < n; ++j) q[j] = u[j] > 0.0 ? uyy[j] / (u[j] * u[j]) : 0.0;
        if (n > 2) q[0] = q[1] - (q[2] - q[1]) * (y[1] - y[0]) / (y[2] - y[1]);
        const auto Q = cumulative_integral(q, y);
        for (std::size_t j = 0; j < n; ++j) v[j] = -u[j] * Q[j];
    } else if (states.size() >= 3) {
        const auto w = d1_forward_weights(xs[0], xs[1], xs[2]);
        std::vector<double> ux(n);
        for (std::size_t j = 0; j < n; ++j) ux[j] = w.m * states[0].u[j] + w.c * states[1].u[j] + w.p * states[2].u[j];
        const auto c = cumulative_integral(ux, y);
        for (std::size_t j = 0; j < n; ++j) v[j] = -c[j];
    }
    return v;
}

void fill_diagnostics(PrandtlState& s, const std::vector<double>& y) {
    s.wall_shear = wall_shear(s.u, y);
    std::vector<double> a(y.size()), b(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
        a[j] = 1.0 - s.u[j];
        b[j] = s.u[j] * (1.0 - s.u[j]);
    }
    s.displacement = integrate(a, y);
    s.momentum = integrate(b, y);
}

struct StepSolver {
    const std::vector<double>& y;
    double dpdx;
    double tol;
    int max_iter;
    std::vector<Stencil3> d2;

    StepSolver(const std::vector<double>& y_, double dpdx_, double tol_, int max_iter_)
        : y(y_), dpdx(dpdx_), tol(tol_), max_iter(max_iter_) {
        const std::size_t n = y.size();
        d2.resize(n);
        for (std::size_t j = 1; j + 1 < n; ++j) d2[j] = d2_weights(y[j - 1], y[j], y[j + 1]);
    }

    // One implicit step: Newton on the coupled (u, v) system, d/dx given by the weights w over
    // (new, u1, u2). Momentum is in flux form (u^2)_x + (uv)_y = u_yy on the trapezoid dual cells,
    // so summing the rows telescopes to a discrete momentum-integral balance.
    bool solve(const std::vector<double>& u1, const std::vector<double>* u2, const XDiff& w,
               std::vector<double>& u, std::vector<double>& v, int& iters, double& defect) const {
        const int n = static_cast<int>(y.size());
        std::vector<double> old_u(n), old_q(n);  // history part of D u and D u^2
        for (int j = 0; j < n; ++j) {
            old_u[j] = w.c * u1[j] + (u2 ? w.m * (*u2)[j] : 0.0);
            old_q[j] = w.c * u1[j] * u1[j] + (u2 ? w.m * (*u2)[j] * (*u2)[j] : 0.0);
        }
        u = u1;
        v.assign(n, 0.0);
        BandMatrix J(2 * n, 3, 3);
        std::vector<double> r(2 * n);
        for (int it = 0; it < max_iter; ++it) {
            ++iters;
            J.clear();
            // Wall: u = 0, v = 0.
            J.set(0, 0, 1.0);
            r[0] = -u[0];
            J.set(1, 1, 1.0);
            r[1] = -v[0];
            for (int j = 1; j < n; ++j) {
                const int ru = 2 * j, rv = 2 * j + 1;
                if (j < n - 1) {
                    const auto& b = d2[j];
                    const double span = y[j + 1] - y[j - 1];
                    const double uyy = b.m * u[j - 1] + b.c * u[j] + b.p * u[j + 1];
                    const double flux = (u[j + 1] * v[j + 1] - u[j - 1] * v[j - 1]) / span;
                    r[ru] = -(w.p * u[j] * u[j] + old_q[j] + flux - uyy + dpdx);
                    J.add(ru, ru, 2.0 * w.p * u[j] - b.c);
                    J.add(ru, ru + 2, v[j + 1] / span - b.p);
                    J.add(ru, ru + 3, u[j + 1] / span);
                    J.add(ru, ru - 2, -v[j - 1] / span - b.m);
                    J.add(ru, ru - 1, -u[j - 1] / span);
                } else {
                    r[ru] = -(u[j] - 1.0);
                    J.add(ru, ru, 1.0);
                }
                const double h = y[j] - y[j - 1];
                r[rv] = -(v[j] - v[j - 1] + 0.5 * h * (w.p * u[j] + old_u[j] + w.p * u[j - 1] + old_u[j - 1]));
                J.add(rv, rv, 1.0);
                J.add(rv, rv - 2, -1.0);
                J.add(rv, ru, 0.5 * h * w.p);
                J.add(rv, ru - 2, 0.5 * h * w.p);
            }
            try {
                J.solve(r);
            } catch (const SolverError&) {
                return false;
            }
            double du = 0.0;
            for (int j = 0; j < n; ++j) {
                u[j] += r[2 * j];
                v[j] += r[2 * j + 1];
                du = std::max(du, std::abs(r[2 * j]));
            }
            if (!std::isfinite(du)) return false;
            if (du < tol) {
                u[0] = 0.0;
                v[0] = 0.0;
                defect = 0.0;
                for (int j = 1; j < n; ++j) {
                    const double h = y[j] - y[j - 1];
                    const double d = v[j] - v[j - 1] + 0.5 * h * (w.p * u[j] + old_u[j] + w.p * u[j - 1] + old_u[j - 1]);
                    defect = std::max(defect, std::abs(d));
                }
                return true;
            }
        }
        return false;
    }
};

struct Level {
    double x = 0.0;
    std::vector<double> u;
    bool valid = false;
};

void advance(const StepSolver& S, const Level& l2, const Level& l1, double x1, int depth, int max_depth,
             std::vector<double>& u, std::vector<double>& v, PrandtlRun& run) {
    const XDiff w = backward_x_weights(l2.valid ? &l2.x : nullptr, l1.x, x1);
    const bool two = l2.valid && w.m != 0.0;
    int iters = 0;
    double defect = 0.0;
    const bool ok = S.solve(l1.u, two ? &l2.u : nullptr, w, u, v, iters, defect);
    run.newton_iterations += iters;
    if (ok) {
        run.max_continuity_defect = std::max(run.max_continuity_defect, defect);
        return;
    }
    if (depth >= max_depth) throw SolverError("march_prandtl: Newton failed after maximum step halvings");
    ++run.halvings;
    Level mid;
    mid.x = 0.5 * (l1.x + x1);
    mid.valid = true;
    std::vector<double> vm;
    advance(S, l2, l1, mid.x, depth + 1, max_depth, mid.u, vm, run);
    advance(S, l1, mid, x1, depth + 1, max_depth, u, v, run);
}

}  // namespace

PrandtlRun march_prandtl(const std::vector<double>& datum, const Grid2D& grid, const MarchConfig& cfg) {
    const auto& y = grid.y;
    const std::size_t n = y.size();
    if (datum.size() != n) throw ShapeError("march_prandtl: datum length differs from ny");
    if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw ConfigError("march_prandtl: bad tolerance settings");
    if (std::abs(datum[0]) > cfg.datum_wall_tol) throw PreconditionError("march_prandtl: datum(0) must vanish");
    if (std::abs(datum[n - 1] - 1.0) > cfg.datum_top_tol) throw PreconditionError("march_prandtl: datum must reach 1 at y_max");
    if (cfg.check_monotone)
        for (std::size_t j = 1; j < n; ++j)
            if (datum[j] < datum[j - 1] - 1e-12) throw PreconditionError("march_prandtl: datum must be nondecreasing");

    const std::vector<double>& xs = cfg.x_nodes.empty() ? grid.x : cfg.x_nodes;
    if (xs.size() < 2) throw ConfigError("march_prandtl: need at least two x nodes");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw ConfigError("march_prandtl: x schedule must be strictly increasing");

    PrandtlRun run;
    run.y = y;
    run.dpdx = cfg.dpdx;
    PrandtlState s0;
    s0.x = xs[0];
    s0.u = datum;
    s0.u[0] = 0.0;
    s0.v.assign(n, 0.0);
    fill_diagnostics(s0, y);
    run.states.push_back(s0);
    run.min_value = *std::min_element(datum.begin(), datum.end());

    const StepSolver S(y, cfg.dpdx, cfg.tol, cfg.max_iter);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        Level l1{xs[i - 1], run.states[i - 1].u, true};
        Level l2;
        if (i >= 2) l2 = Level{xs[i - 2], run.states[i - 2].u, true};
        PrandtlState st;
        st.x = xs[i];
        advance(S, l2, l1, xs[i], 0, cfg.max_halvings, st.u, st.v, run);
        fill_diagnostics(st, y);
        for (std::size_t j = 0; j < n; ++j) {
            run.max_overshoot = std::max(run.max_overshoot, st.u[j] - 1.0);
            run.min_value = std::min(run.min_value, st.u[j]);
            if (j > 0 && st.u[j] < st.u[j - 1] - 1e-12) ++run.monotonicity_violations;
        }
        run.states.push_back(std::move(st));
        const double tau = run.states.back().wall_shear;
        if (tau <= 0.0) {
            if (cfg.dpdx <= 0.0) throw IntegrityError("march_prandtl: wall shear vanished under a favorable gradient");
            run.separated = true;
            if (cfg.stop_at_separation) break;
        }
    }
    run.states[0].v = datum_v(run.states[0].u, y, cfg.dpdx, run.states, xs);
    return run;
}

PrandtlRun blasius_run(const BlasiusProfile& p, const Grid2D& grid) {
    PrandtlRun run;
    run.y = grid.y;
    for (double x : grid.x) {
        PrandtlState s;
        s.x = x;
        s.u.resize(grid.ny());
        s.v.resize(grid.ny());
        for (std::size_t j = 0; j < grid.ny(); ++j) {
            const auto b = blasius_sample(p, x, grid.y[j]);
            s.u[j] = b.u;
            s.v[j] = b.v;
        }
        fill_diagnostics(s, grid.y);
        run.states.push_back(std::move(s));
    }
    return run;
}

namespace {

// One profile in von Mises form: psi(y) with slope u, and the inverse y(psi).
struct VonMises {
    const std::vector<double>* y = nullptr;
    std::vector<double> u, uy, uyy, psi;

    VonMises(const std::vector<double>& yy, const std::vector<double>& uu) : y(&yy), u(uu) {
        const std::size_t n = yy.size();
        for (std::size_t j = 1; j < n; ++j) {
            if (!(u[j] > 0.0)) throw InversionError("twisted difference: u must be positive for y > 0");
            if (u[j] < u[j - 1] - 1e-9) throw InversionError("twisted difference: profile is not monotone in y");
        }
        uy = derivative(u, yy);
        uyy = second_derivative(u, yy);
        // psi by Hermite integration: exact for cubic u with the supplied slopes.
        psi.assign(n, 0.0);
        for (std::size_t j = 1; j < n; ++j) {
            const double h = yy[j] - yy[j - 1];
            psi[j] = psi[j - 1] + 0.5 * h * (u[j - 1] + u[j]) + h * h / 12.0 * (uy[j - 1] - uy[j]);
        }
        for (std::size_t j = 1; j < n; ++j)
            if (!(psi[j] > psi[j - 1])) throw InversionError("twisted difference: stream function not increasing");
    }

    struct Point {
        double y, u, uy, uyy;
    };

    Point at_psi(double target) const {
        const auto& Y = *y;
        if (target <= 0.0) return {0.0, u[0], uy[0], uyy[0]};
        const std::size_t k = bracket(psi, target);
        const double y0 = Y[k], h = Y[k + 1] - Y[k];
        // psi on the cell is the integral of the cubic Hermite interpolant of u.
        auto herm = [&](double t, double a0, double d0, double a1, double d1) {
            const double t2 = t * t, t3 = t2 * t;
            return (2 * t3 - 3 * t2 + 1) * a0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * a1 +
                   (t3 - t2) * h * d1;
        };
        auto herm_int = [&](double t, double a0, double d0, double a1, double d1) {
            const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
            return h * ((0.5 * t4 - t3 + t) * a0 + (0.25 * t4 - 2.0 / 3 * t3 + 0.5 * t2) * h * d0 +
                        (-0.5 * t4 + t3) * a1 + (0.25 * t4 - 1.0 / 3 * t3) * h * d1);
        };
        double lo = 0.0, hi = 1.0, t = (target - psi[k]) / (psi[k + 1] - psi[k]);
        for (int it = 0; it < 60; ++it) {
            const double g = psi[k] + herm_int(t, u[k], uy[k], u[k + 1], uy[k + 1]) - target;
            if (g > 0) hi = t; else lo = t;
            const double dg = h * herm(t, u[k], uy[k], u[k + 1], uy[k + 1]);
            double tn = dg > 0 ? t - g / dg : 0.5 * (lo + hi);
            if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
            if (std::abs(tn - t) < 1e-15) { t = tn; break; }
            t = tn;
        }
        Point p;
        p.y = y0 + t * h;
        p.u = herm(t, u[k], uy[k], u[k + 1], uy[k + 1]);
        p.uy = herm(t, uy[k], uyy[k], uy[k + 1], uyy[k + 1]);
        p.uyy = (1 - t) * uyy[k] + t * uyy[k + 1];
        return p;
    }
};

double l2_psi(const Field2D& f, std::size_t i, const std::vector<double>& psi) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < psi.size(); ++k)
        s += 0.5 * (psi[k + 1] - psi[k]) * (f(i, k) * f(i, k) + f(i, k + 1) * f(i, k + 1));
    return std::sqrt(s);
}

}  // namespace

TwistedDifference solve_twisted_difference(const PrandtlRun& base, const PrandtlRun& other,
                                           const TwistedOptions& opt) {
    const std::size_t nx = base.states.size();
    if (nx < 2 || other.states.size() != nx) throw ShapeError("twisted difference: runs must share x nodes");
    for (std::size_t i = 0; i < nx; ++i)
        if (std::abs(base.states[i].x - other.states[i].x) > 1e-12 * (1 + std::abs(base.states[i].x)))
            throw ShapeError("twisted difference: runs must share x nodes");
    if (opt.npsi < 8) throw ConfigError("twisted difference: npsi must be >= 8");

    std::vector<VonMises> vb, vo;
    vb.reserve(nx);
    vo.reserve(nx);
    double psi_max = INFINITY;
    for (std::size_t i = 0; i < nx; ++i) {
        vb.emplace_back(base.y, base.states[i].u);
        vo.emplace_back(other.y, other.states[i].u);
        psi_max = std::min({psi_max, vb.back().psi.back(), vo.back().psi.back()});
    }
    psi_max *= 1.0 - 1e-12;

    TwistedDifference td;
    td.x = base.x();
    const int K = opt.npsi;
    td.psi.resize(K);
    for (int k = 0; k < K; ++k) {
        const double s = static_cast<double>(k) / (K - 1);
        td.psi[k] = psi_max * s * s;
    }
    td.phi_direct = Field2D(nx, K);
    td.phi_marched = Field2D(nx, K);
    td.a_coef = Field2D(nx, K);
    td.up_psi = Field2D(nx, K);
    td.up_psipsi = Field2D(nx, K);

    for (std::size_t i = 0; i < nx; ++i) {
        for (int k = 1; k < K; ++k) {
            const auto pb = vb[i].at_psi(td.psi[k]);
            const auto po = vo[i].at_psi(td.psi[k]);
            td.phi_direct(i, k) = po.u * po.u - pb.u * pb.u;
            td.up_psi(i, k) = po.u;
            td.up_psipsi(i, k) = (po.u * po.uyy - po.uy * po.uy) / (po.u * po.u * po.u);
            const double den = opt.form == DampingForm::exact ? pb.u * (po.u + pb.u) : pb.u * po.u;
            td.a_coef(i, k) = -2.0 * pb.uyy / den;
        }
        td.a_coef(i, 0) = td.a_coef(i, 1);
        td.up_psipsi(i, 0) = td.up_psipsi(i, 1);
        td.up_psi(i, 0) = 0.0;
        td.phi_direct(i, 0) = 0.0;
    }

    double amax = 0.0;
    for (double a : td.a_coef.data) amax = std::max(amax, std::abs(a));
    for (double a : td.a_coef.data)
        if (a < -1e-10 * std::max(1.0, amax)) ++td.negative_a_nodes;

    // March phi_x - u_p phi_psipsi + A phi = 0 with backward Euler.
    for (int k = 0; k < K; ++k) td.phi_marched(0, k) = td.phi_direct(0, k);
    std::vector<double> a(K), b(K), c(K), d(K);
    for (std::size_t i = 1; i < nx; ++i) {
        const double dx = td.x[i] - td.x[i - 1];
        a[0] = 0; b[0] = 1; c[0] = 0; d[0] = 0.0;
        a[K - 1] = 0; b[K - 1] = 1; c[K - 1] = 0; d[K - 1] = td.phi_direct(i, K - 1);
        for (int k = 1; k < K - 1; ++k) {
            const auto w = d2_weights(td.psi[k - 1], td.psi[k], td.psi[k + 1]);
            const double up = td.up_psi(i, k);
            a[k] = -up * w.m;
            b[k] = 1.0 / dx - up * w.c + td.a_coef(i, k);
            c[k] = -up * w.p;
            d[k] = td.phi_marched(i - 1, k) / dx;
        }
        solve_tridiagonal(a, b, c, d);
        for (int k = 0; k < K; ++k) td.phi_marched(i, k) = d[k];
    }
    for (std::size_t i = 0; i < nx; ++i)
        for (int k = 0; k < K; ++k) {
            td.max_discrepancy = std::max(td.max_discrepancy, std::abs(td.phi_marched(i, k) - td.phi_direct(i, k)));
            td.phi_scale = std::max(td.phi_scale, std::abs(td.phi_direct(i, k)));
        }
    return td;
}

DampingAudit damping_audit(const TwistedDifference& td) {
    DampingAudit out;
    const auto& psi = td.psi;
    const std::size_t nx = td.x.size(), K = psi.size();
    out.a_negative_nodes = td.negative_a_nodes;
    out.a_nonneg = td.negative_a_nodes == 0;
    for (std::size_t i = 0; i < nx; ++i) {
        out.norm_marched.push_back(l2_psi(td.phi_marched, i, psi));
        out.norm_direct.push_back(l2_psi(td.phi_direct, i, psi));
    }
    for (std::size_t i = 1; i < nx; ++i) {
        if (out.norm_marched[i] > out.norm_marched[i - 1] * (1 + 1e-12) + 1e-300) ++out.norm_increases;
        if (out.norm_direct[i] > out.norm_direct[i - 1] * (1 + 1e-12) + 1e-300) ++out.direct_norm_increases;
    }
    for (std::size_t i = 1; i < nx; ++i) {
        DampingStep st{};
        st.x = td.x[i];
        const double dx = td.x[i] - td.x[i - 1];
        const double n1 = out.norm_marched[i], n0 = out.norm_marched[i - 1];
        st.rate = 0.5 * (n1 * n1 - n0 * n0) / dx;
        for (std::size_t k = 0; k + 1 < K; ++k) {
            const double h = psi[k + 1] - psi[k];
            const double dphi = (td.phi_marched(i, k + 1) - td.phi_marched(i, k)) / h;
            const double um = 0.5 * (td.up_psi(i, k) + td.up_psi(i, k + 1));
            st.diffusion += h * um * dphi * dphi;
        }
        for (std::size_t k = 0; k + 1 < K; ++k) {
            const double h = psi[k + 1] - psi[k];
            auto g = [&](std::size_t m) {
                const double p = td.phi_marched(i, m);
                return std::pair{-0.5 * td.up_psipsi(i, m) * p * p, td.a_coef(i, m) * p * p};
            };
            const auto [c0, a0] = g(k);
            const auto [c1, a1] = g(k + 1);
            st.concavity += 0.5 * h * (c0 + c1);
            st.damping += 0.5 * h * (a0 + a1);
        }
        if (st.concavity < -1e-12 * std::max(st.diffusion, 1e-300)) out.concavity_nonneg = false;
        st.residual = st.rate + st.diffusion + st.concavity + st.damping;
        const double scale = st.diffusion;
        st.relative = scale > 0.0 ? std::abs(st.residual) / scale : (st.residual == 0.0 ? 0.0 : INFINITY);
        out.max_relative = std::max(out.max_relative, st.relative);
        out.steps.push_back(st);
    }
    return out;
}

MomentumDrift momentum_integral_drift(const PrandtlRun& run) {
    MomentumDrift d;
    const auto& s = run.states;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const XDiff w = backward_x_weights(i >= 2 ? &s[i - 2].x : nullptr, s[i - 1].x, s[i].x);
        double dth = w.p * s[i].momentum + w.c * s[i - 1].momentum;
        if (w.m != 0.0) dth += w.m * s[i - 2].momentum;
        const double e = std::abs(dth - s[i].wall_shear);
        d.x.push_back(s[i].x);
        d.drift.push_back(e);
        if (e > d.max_drift) {
            d.max_drift = e;
            d.x_at_max = s[i].x;
        }
    }
    return d;
}

std::optional<double> detect_separation(const PrandtlRun& run) {
    const auto& s = run.states;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].wall_shear <= 0.0) {
            if (i == 0) return s[0].x;
            const double t0 = s[i - 1].wall_shear, t1 = s[i].wall_shear;
            return s[i - 1].x + (s[i].x - s[i - 1].x) * t0 / (t0 - t1);
        }
    }
    return std::nullopt;
}

std::vector<double> sup_error_vs_blasius(const PrandtlRun& run, const BlasiusProfile& p) {
    std::vector<double> out;
    for (const auto& s : run.states) {
        double e = 0.0;
        for (std::size_t j = 0; j < run.y.size(); ++j)
            e = std::max(e, std::abs(s.u[j] - blasius_sample(p, s.x, run.y[j]).u));
        out.push_back(e);
    }
    return out;
}

std::string run_summary_csv(const PrandtlRun& run, const BlasiusProfile* ref) {
    std::ostringstream os;
    os << "x,wall_shear,sup_error\n";
    std::vector<double> err;
    if (ref) err = sup_error_vs_blasius(run, *ref);
    char buf[160];
    for (std::size_t i = 0; i < run.states.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", run.states[i].x, run.states[i].wall_shear,
                      ref ? err[i] : NAN);
        os << buf;
    }
    return os.str();
}

}  // namespace plab

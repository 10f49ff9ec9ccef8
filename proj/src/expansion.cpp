#include "prandtl_lab/expansion.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>

#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/io.hpp"
#include "prandtl_lab/norms.hpp"
#include "prandtl_lab/numerics.hpp"

namespace plab {

namespace {

void require_shape(const Field2D& f, const Grid2D& g, const char* what) {
    if (f.nx != g.nx() || f.ny != g.ny() || f.data.size() != f.nx * f.ny)
        throw ShapeError(std::string(what) + ": field shape differs from grid");
}

// The datum's v and the backward Euler first step disagree with the marched u at first order,
// which kinks the x trace that feeds the Euler corrector. Rebuilds v(x_0, .) and v(x_1, .) from
// three-point derivatives of u over x_0, x_1, x_2 (one-sided at x_0).
void rebuild_start_v(Field2D& v, const Field2D& u, const std::vector<double>& xs, const std::vector<double>& y) {
    const Stencil3 ws[2] = {d1_forward_weights(xs[0], xs[1], xs[2]), d1_weights(xs[0], xs[1], xs[2])};
    std::vector<double> ux(y.size());
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& w = ws[i];
        for (std::size_t j = 0; j < y.size(); ++j) ux[j] = w.m * u(0, j) + w.c * u(1, j) + w.p * u(2, j);
        const auto iv = cumulative_integral(ux, y);
        const double wall = v(i, 0);
        for (std::size_t j = 0; j < y.size(); ++j) v(i, j) = wall - iv[j];
    }
}

Field2D diff_xx(const Field2D& f, const Grid2D& g) {
    Field2D out(g);
    std::vector<double> col(g.nx());
    for (std::size_t j = 0; j < g.ny(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) col[i] = f(i, j);
        const auto d = second_derivative(col, g.x);
        for (std::size_t i = 0; i < g.nx(); ++i) out(i, j) = d[i];
    }
    return out;
}

}  // namespace

std::vector<double> default_euler_inflow(double w0, const std::vector<double>& Y, FarField far) {
    const auto g = [](double t) { return std::real(std::pow(std::complex<double>(1.0, t), -0.5)); };
    std::vector<double> out(Y.size());
    if (far == FarField::dirichlet || Y.empty()) {
        for (std::size_t j = 0; j < Y.size(); ++j) out[j] = w0 * g(Y[j]);
        return out;
    }
    // Mirror image across Y_max: d_Y vanishes on top, matching the Neumann far side at the corner.
    const double top = Y.back();
    const double scale = w0 / (g(0.0) + g(2.0 * top));
    for (std::size_t j = 0; j < Y.size(); ++j) out[j] = scale * (g(Y[j]) + g(2.0 * top - Y[j]));
    return out;
}

EulerCorrector solve_euler_corrector(const std::vector<double>& wall, const std::vector<double>& inflow,
                                     const Grid2D& g, const EulerOptions& opt) {
    const std::size_t nx = g.nx(), ny = g.ny();
    if (wall.size() != nx) throw ShapeError("solve_euler_corrector: wall data length differs from nx");
    if (inflow.size() != ny) throw ShapeError("solve_euler_corrector: inflow data length differs from ny");
    if (nx < 3 || ny < 3) throw ShapeError("solve_euler_corrector: grid too small");

    EulerCorrector out;
    out.grid = g;
    out.corner_mismatch = std::abs(inflow[0] + wall[0]);
    out.corner_warning = out.corner_mismatch > opt.corner_tol;

    // Unknowns at i >= 1, j >= 1; far-side nodes are unknowns too so both far-field kinds share
    // one layout.
    const std::size_t mx = nx - 1, my = ny - 1;
    auto id = [&](std::size_t i, std::size_t j) { return static_cast<int>((i - 1) * my + (j - 1)); };
    auto known = [&](std::size_t i, std::size_t j) -> double {
        if (j == 0) return -wall[i];
        return inflow[j];  // i == 0
    };
    const bool neumann = opt.far_field == FarField::neumann;
    auto far_value = [&](std::size_t i, std::size_t j) { return opt.far_data ? opt.far_data(g.x[i], g.y[j]) : 0.0; };

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<int>(mx * my));
    auto add = [&](int row, std::size_t i, std::size_t j, double w) {
        if (i == 0 || j == 0)
            rhs[row] -= w * known(i, j);
        else
            trip.emplace_back(row, id(i, j), w);
    };
    for (std::size_t i = 1; i < nx; ++i) {
        for (std::size_t j = 1; j < ny; ++j) {
            const int row = id(i, j);
            const bool right = i == nx - 1, top = j == ny - 1;
            if (right || top) {
                if (!neumann) {
                    trip.emplace_back(row, row, 1.0);
                    rhs[row] = far_value(i, j);
                } else if (right) {
                    const auto w = d1_backward_weights(g.x[i - 2], g.x[i - 1], g.x[i]);
                    add(row, i - 2, j, w.m);
                    add(row, i - 1, j, w.c);
                    add(row, i, j, w.p);
                } else {
                    const auto w = d1_backward_weights(g.y[j - 2], g.y[j - 1], g.y[j]);
                    add(row, i, j - 2, w.m);
                    add(row, i, j - 1, w.c);
                    add(row, i, j, w.p);
                }
                continue;
            }
            const auto ax = d2_weights(g.x[i - 1], g.x[i], g.x[i + 1]);
            const auto ay = d2_weights(g.y[j - 1], g.y[j], g.y[j + 1]);
            add(row, i - 1, j, ax.m);
            add(row, i + 1, j, ax.p);
            add(row, i, j - 1, ay.m);
            add(row, i, j + 1, ay.p);
            add(row, i, j, ax.c + ay.c);
        }
    }
    Eigen::SparseMatrix<double> A(static_cast<int>(mx * my), static_cast<int>(mx * my));
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw SolverError("solve_euler_corrector: factorization failed");
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !sol.allFinite()) throw SolverError("solve_euler_corrector: solve failed");

    out.v = Field2D(g);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            out.v(i, j) = (i == 0 || j == 0) ? known(i, j) : sol[id(i, j)];
    // The wall value wins at the corner.
    out.v(0, 0) = -wall[0];

    // u_E = 0 at (X_max, Y_max). Along the top d_x u_E = -d_Y v_E, then down each column
    // d_Y u_E = d_x v_E; for harmonic v_E the path does not matter, and this one stays clear of
    // the wall corners, where the data of the two sides need not match.
    const Field2D vy = diff_y(out.v, g);
    const Field2D vx = diff_x(out.v, g);
    out.u = Field2D(g);
    const std::size_t top = ny - 1;
    for (std::size_t i = nx - 1; i-- > 0;)
        out.u(i, top) = out.u(i + 1, top) + 0.5 * (g.x[i + 1] - g.x[i]) * (vy(i, top) + vy(i + 1, top));
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = top; j-- > 0;)
            out.u(i, j) = out.u(i, j + 1) - 0.5 * (g.y[j + 1] - g.y[j]) * (vx(i, j) + vx(i, j + 1));
    return out;
}

Field2D euler_on_layer(const Field2D& f, const Grid2D& eg, const Grid2D& lg, double eps) {
    require_shape(f, eg, "euler_on_layer");
    if (!(eps > 0.0)) throw DomainError("euler_on_layer: eps must be positive");
    if (eg.nx() != lg.nx()) throw ShapeError("euler_on_layer: x nodes differ");
    for (std::size_t i = 0; i < eg.nx(); ++i)
        if (std::abs(eg.x[i] - lg.x[i]) > 1e-12 * std::max(1.0, std::abs(eg.x[i])))
            throw ShapeError("euler_on_layer: x nodes differ");
    const double se = std::sqrt(eps);
    const double ytop = eg.y_max() * (1.0 + 1e-12);
    Field2D out(lg);
    std::vector<double> col(eg.ny());
    for (std::size_t i = 0; i < lg.nx(); ++i) {
        for (std::size_t j = 0; j < eg.ny(); ++j) col[j] = f(i, j);
        const CubicInterp c(eg.y, col);
        for (std::size_t j = 0; j < lg.ny(); ++j) {
            const double Y = se * lg.y[j];
            if (Y > ytop) throw ExtrapolationError("euler_on_layer: layer grid reaches above the Euler grid");
            out(i, j) = c(std::min(Y, eg.y_max()));
        }
    }
    return out;
}

Field2D layer_v_decaying(const PrandtlRun& base) {
    Field2D v = base.v_field();
    if (base.states.size() >= 3) {
        const auto xs = base.x();
        rebuild_start_v(v, base.u_field(), xs, base.y);
    }
    for (std::size_t i = 0; i < v.nx; ++i) {
        const double top = v(i, v.ny - 1);
        for (std::size_t j = 0; j < v.ny; ++j) v(i, j) -= top;
    }
    return v;
}

PrandtlCorrector solve_prandtl_corrector(const PrandtlRun& base, const std::vector<double>& bc_shift,
                                         const std::vector<double>& datum, const CorrectorConfig& cfg) {
    const auto& y = base.y;
    const int n = static_cast<int>(y.size());
    const std::size_t nx = base.states.size();
    if (nx < 2 || n < 3) throw ShapeError("solve_prandtl_corrector: base run too small");
    if (bc_shift.size() != nx) throw ShapeError("solve_prandtl_corrector: bc_shift length differs from the x nodes");
    if (datum.size() != static_cast<std::size_t>(n)) throw ShapeError("solve_prandtl_corrector: datum length differs from ny");

    const auto xs = base.x();
    std::vector<double> E(nx);
    for (std::size_t i = 0; i < nx; ++i) E[i] = -bc_shift[i];
    const auto Ex = nx >= 3 ? derivative(E, xs) : std::vector<double>(nx, (E[1] - E[0]) / (xs[1] - xs[0]));

    PrandtlCorrector out;
    out.grid = base.grid();
    out.u = Field2D(nx, n);
    out.v = Field2D(nx, n);
    for (int j = 0; j < n; ++j) out.u(0, j) = datum[j];
    out.u(0, 0) = bc_shift[0];
    out.u(0, n - 1) = 0.0;

    std::vector<Stencil3> d2(n), d1(n);
    for (int j = 1; j + 1 < n; ++j) {
        d2[j] = d2_weights(y[j - 1], y[j], y[j + 1]);
        d1[j] = d1_weights(y[j - 1], y[j], y[j + 1]);
    }
    std::vector<double> z(2 * n);
    for (std::size_t i = 1; i < nx; ++i) {
        const XDiff w = backward_x_weights(i >= 2 ? &xs[i - 2] : nullptr, xs[i - 1], xs[i]);
        const bool two = i >= 2 && w.m != 0.0;
        const auto& ub = base.states[i].u;
        const auto& vb = base.states[i].v;
        const auto& ub1 = base.states[i - 1].u;
        const auto* ub2 = two ? &base.states[i - 2].u : nullptr;
        auto hist_u = [&](int j) { return w.c * out.u(i - 1, j) + (two ? w.m * out.u(i - 2, j) : 0.0); };
        auto hist_q = [&](int j) {
            return 2.0 * w.c * ub1[j] * out.u(i - 1, j) + (two ? 2.0 * w.m * (*ub2)[j] * out.u(i - 2, j) : 0.0);
        };
        BandMatrix J(2 * n, 3, 3);
        J.set(0, 0, 1.0);
        z[0] = bc_shift[i];
        J.set(1, 1, 1.0);
        z[1] = 0.0;
        for (int j = 1; j < n; ++j) {
            const int ru = 2 * j, rv = 2 * j + 1;
            if (j < n - 1) {
                const auto& b = d2[j];
                const double span = y[j + 1] - y[j - 1];
                double src = 0.0;
                if (cfg.outer_forcing) {
                    const double ubx = w.p * ub[j] + w.c * ub1[j] + (two ? w.m * (*ub2)[j] : 0.0);
                    const double uby = d1[j].m * ub[j - 1] + d1[j].c * ub[j] + d1[j].p * ub[j + 1];
                    src = Ex[i] * (ub[j] - 1.0 - y[j] * uby) + E[i] * ubx;
                }
                z[ru] = -(hist_q(j) + src);
                J.add(ru, ru, 2.0 * w.p * ub[j] - b.c);
                J.add(ru, ru + 2, vb[j + 1] / span - b.p);
                J.add(ru, ru + 3, ub[j + 1] / span);
                J.add(ru, ru - 2, -vb[j - 1] / span - b.m);
                J.add(ru, ru - 1, -ub[j - 1] / span);
            } else {
                J.add(ru, ru, 1.0);
                z[ru] = 0.0;
            }
            const double h = y[j] - y[j - 1];
            z[rv] = -0.5 * h * (hist_u(j) + hist_u(j - 1));
            J.add(rv, rv, 1.0);
            J.add(rv, rv - 2, -1.0);
            J.add(rv, ru, 0.5 * h * w.p);
            J.add(rv, ru - 2, 0.5 * h * w.p);
        }
        J.solve(z);
        for (int j = 0; j < n; ++j) {
            out.u(i, j) = z[2 * j];
            out.v(i, j) = z[2 * j + 1];
        }
    }
    if (nx >= 3) rebuild_start_v(out.v, out.u, xs, y);
    // Anchored at the wall for the march; the component itself vanishes at the top.
    for (std::size_t i = 0; i < nx; ++i) {
        const double top = out.v(i, n - 1);
        for (int j = 0; j < n; ++j) out.v(i, j) -= top;
    }
    return out;
}

ExpansionBundle assemble_expansion(const ExpansionComponents& c, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("assemble_expansion: eps must lie in (0, 1)");
    if (c.order != 0 && c.order != 1) throw ConfigError("assemble_expansion: order must be 0 or 1");
    const Grid2D& g = c.grid;
    require_shape(c.u0p, g, "assemble_expansion");
    require_shape(c.v0p, g, "assemble_expansion");
    ExpansionBundle b;
    b.eps = eps;
    b.order = c.order;
    b.grid = g;
    b.u0p = c.u0p;
    b.v0p = c.v0p;
    if (c.order == 1) {
        for (const Field2D* f : {&c.u1e, &c.v1e, &c.u1p, &c.v1p}) require_shape(*f, g, "assemble_expansion");
        b.u1e = c.u1e;
        b.v1e = c.v1e;
        b.u1p = c.u1p;
        b.v1p = c.v1p;
    } else {
        b.u1e = b.v1e = b.u1p = b.v1p = Field2D(g);
    }
    const double se = std::sqrt(eps);
    b.ubar = b.vbar = b.pbar = Field2D(g);
    for (std::size_t k = 0; k < b.ubar.data.size(); ++k) {
        b.ubar.data[k] = 1.0 + b.u0p.data[k] + se * (b.u1e.data[k] + b.u1p.data[k]);
        b.vbar.data[k] = b.v0p.data[k] + b.v1e.data[k] + se * b.v1p.data[k];
        // Linearized Euler around [1, 0, 0]: P1_E = -u1_E.
        b.pbar.data[k] = -se * b.u1e.data[k];
    }
    b.residual = forcing_residual(b.ubar, b.vbar, b.pbar, g, eps);
    b.fr = b.residual.f;
    b.gr = b.residual.g;
    return b;
}

ExpansionComponents first_order_components(const std::vector<double>& datum, const Grid2D& lg, double eps,
                                           const FirstOrderOptions& opt) {
    if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("first_order_components: eps must lie in (0, 1)");
    const PrandtlRun run = march_prandtl(datum, lg, opt.march);
    if (run.states.size() != lg.nx())
        throw SolverError("first_order_components: the march stopped before x_max");
    const double se = std::sqrt(eps);
    ExpansionComponents c;
    c.grid = lg;
    c.u0p = run.u_field();
    for (auto& v : c.u0p.data) v -= 1.0;
    c.v0p = layer_v_decaying(run);

    std::vector<double> wall(lg.nx()), Y(lg.ny());
    for (std::size_t i = 0; i < lg.nx(); ++i) wall[i] = c.v0p(i, 0);
    for (std::size_t j = 0; j < lg.ny(); ++j) Y[j] = se * lg.y[j];
    const Grid2D eg = grid_from_nodes(lg.x, Y);
    EulerOptions eo;
    eo.far_field = opt.far_field;
    const EulerCorrector e = solve_euler_corrector(wall, default_euler_inflow(-wall[0], Y, eo.far_field), eg, eo);
    c.u1e = euler_on_layer(e.u, eg, lg, eps);
    c.v1e = euler_on_layer(e.v, eg, lg, eps);

    // For constant E = -shift the corrector is exactly E (u - 1 + y u_y / 2), the free-stream
    // derivative of the self-similar family; its x = 0 trace starts the march without a layer.
    std::vector<double> shift(lg.nx()), d1(lg.ny());
    for (std::size_t i = 0; i < lg.nx(); ++i) shift[i] = -e.u(i, 0);
    const auto uy = derivative(datum, lg.y);
    for (std::size_t j = 0; j < lg.ny(); ++j) d1[j] = -shift[0] * (datum[j] - 1.0 + 0.5 * lg.y[j] * uy[j]);
    d1.front() = shift[0];
    d1.back() = 0.0;
    const PrandtlCorrector pc = solve_prandtl_corrector(run, shift, d1, opt.corrector);
    c.u1p = pc.u;
    c.v1p = pc.v;
    c.order = 1;
    return c;
}

ForcingResidual forcing_residual(const Field2D& u, const Field2D& v, const Field2D& p, const Grid2D& g,
                                 double eps) {
    require_shape(u, g, "forcing_residual");
    require_shape(v, g, "forcing_residual");
    require_shape(p, g, "forcing_residual");
    if (!(eps > 0.0)) throw DomainError("forcing_residual: eps must be positive");
    const Field2D ux = diff_x(u, g), uy = diff_y(u, g), uyy = diff_yy(u, g), uxx = diff_xx(u, g);
    const Field2D vx = diff_x(v, g), vy = diff_y(v, g), vyy = diff_yy(v, g), vxx = diff_xx(v, g);
    const Field2D px = diff_x(p, g), py = diff_y(p, g);
    ForcingResidual r;
    r.f = Field2D(g);
    r.g = Field2D(g);
    Field2D w2(g);
    for (std::size_t i = 1; i + 1 < g.nx(); ++i) {
        const double wx = std::pow(japanese(g.x[i]), 11.0 / 20.0);
        for (std::size_t j = 1; j + 1 < g.ny(); ++j) {
            const double f = u(i, j) * ux(i, j) + v(i, j) * uy(i, j) + px(i, j) - uyy(i, j) - eps * uxx(i, j);
            const double q = u(i, j) * vx(i, j) + v(i, j) * vy(i, j) + py(i, j) / eps - vyy(i, j) - eps * vxx(i, j);
            r.f(i, j) = f;
            r.g(i, j) = q;
            r.f_sup = std::max(r.f_sup, std::abs(f));
            r.g_sup = std::max(r.g_sup, std::abs(q));
            const double m = std::hypot(f, q) * wx;
            r.weighted_sup = std::max(r.weighted_sup, m);
            w2(i, j) = m * m;
        }
    }
    r.weighted_l2 = std::sqrt(integrate_xy(w2, g));
    return r;
}

ZetaAlpha zeta_alpha(const ExpansionBundle& b) {
    const Grid2D& g = b.grid;
    const Field2D ux = diff_x(b.ubar, g), uy = diff_y(b.ubar, g);
    const Field2D vx = diff_x(b.vbar, g), vy = diff_y(b.vbar, g);
    const Field2D lyy = diff_yy(b.u0p, g);
    ZetaAlpha z;
    z.zeta = Field2D(g);
    z.alpha = Field2D(g);
    z.x = g.x;
    z.zeta_sup.assign(g.nx(), 0.0);
    z.alpha_over_u_sup.assign(g.nx(), 0.0);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.ny(); ++j) {
            const double u = b.ubar(i, j), v = b.vbar(i, j);
            z.zeta(i, j) = u * ux(i, j) + v * uy(i, j) - lyy(i, j);
            z.alpha(i, j) = u * vx(i, j) + v * vy(i, j);
            if (j == 0 || j + 1 == g.ny()) continue;
            z.zeta_sup[i] = std::max(z.zeta_sup[i], std::abs(z.zeta(i, j)));
            if (u > 0.0) z.alpha_over_u_sup[i] = std::max(z.alpha_over_u_sup[i], std::abs(z.alpha(i, j)) / u);
        }
    }
    return z;
}

void write_bundle(const ExpansionBundle& b, const std::string& path) {
    const std::vector<NamedField> blocks = {
        {"u0p", &b.u0p}, {"v0p", &b.v0p}, {"u1e", &b.u1e}, {"v1e", &b.v1e}, {"u1p", &b.u1p},  {"v1p", &b.v1p},
        {"ubar", &b.ubar}, {"vbar", &b.vbar}, {"pbar", &b.pbar}, {"fr", &b.fr}, {"gr", &b.gr},
    };
    char buf[160];
    std::snprintf(buf, sizeof buf, "{\"eps\": %.17g, \"order\": %d, \"x_max\": %.17g, \"y_max\": %.17g}", b.eps,
                  b.order, b.grid.x_max(), b.grid.y_max());
    write_snapshot_with_manifest(path, blocks, buf);
}

}  // namespace plab

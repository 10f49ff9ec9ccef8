#include "prandtl_lab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/numerics.hpp"

namespace plab {

namespace {

void require_shape(const Field2D& f, const Grid2D& g, const char* what) {
    if (f.nx != g.nx() || f.ny != g.ny()) throw ShapeError(std::string(what) + ": field shape differs from grid");
}

double pos(double a) { return a > 0.0 ? a : 0.0; }

// Trapezoid integral over the grid of w(i) * h(i, j), one weight per x slice.
template <class F>
double integrate_weighted(const Grid2D& g, F&& h) {
    const auto wx = trapezoid_weights(g.x);
    double s = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < g.ny(); ++j) r += g.wy[j] * h(i, j);
        s += wx[i] * r;
    }
    return s;
}

template <class F>
double integrate_wall(const Grid2D& g, F&& h) {
    const auto wx = trapezoid_weights(g.x);
    double s = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) s += wx[i] * h(i);
    return s;
}

double max_abs(const Field2D& f) {
    double m = 0.0;
    for (double v : f.data) m = std::max(m, std::abs(v));
    return m;
}

HalfNorms half_norms(int n, const Field2D& U0, const Field2D& V0, const Background& bg, double eps) {
    const Grid2D& g = bg.grid;
    Field2D U = U0, V = V0;
    if (n == 1) {
        U = diff_x(U0, g);
        V = diff_x(V0, g);
    }
    const Field2D Ux = diff_x(U, g), Vx = diff_x(V, g);
    const Field2D Uy = diff_y(U, g), Uyy = diff_yy(U, g);
    const Field2D Uxy = diff_y(Ux, g), Uxx = diff_x(Ux, g);
    std::vector<double> w(g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) w[i] = std::pow(g.x[i], n + 0.5) * cutoff_phi(n + 1, g.x[i]);
    auto norm2 = [&](auto&& h) {
        return std::sqrt(integrate_weighted(g, [&](std::size_t i, std::size_t j) {
            const double a = h(i, j) * w[i];
            return a * a;
        }));
    };
    HalfNorms out;
    out.x_half = norm2([&](std::size_t i, std::size_t j) { return pos(bg.u(i, j)) * Ux(i, j); }) +
                 std::sqrt(eps) * norm2([&](std::size_t i, std::size_t j) { return pos(bg.u(i, j)) * Vx(i, j); });
    const double wall = std::sqrt(integrate_wall(g, [&](std::size_t i) {
        const double a = std::sqrt(pos(bg.u_y(i, 0))) * Uy(i, 0) * w[i];
        return a * a;
    }));
    out.y_half = norm2([&](std::size_t i, std::size_t j) { return std::sqrt(pos(bg.u(i, j))) * Uyy(i, j); }) +
                 norm2([&](std::size_t i, std::size_t j) {
                     return std::sqrt(pos(bg.u(i, j))) * std::sqrt(eps) * Uxy(i, j);
                 }) +
                 norm2([&](std::size_t i, std::size_t j) { return std::sqrt(pos(bg.u(i, j))) * eps * Uxx(i, j); }) +
                 wall;
    return out;
}

}  // namespace

Background background_from_field(const Field2D& ubar, const Grid2D& grid) {
    require_shape(ubar, grid, "background_from_field");
    Background bg;
    bg.grid = grid;
    bg.u = ubar;
    bg.u_x = diff_x(ubar, grid);
    bg.u_y = diff_y(ubar, grid);
    bg.u_yy = diff_yy(ubar, grid);
    return bg;
}

Background blasius_background(const BlasiusProfile& p, const Grid2D& grid) {
    Background bg;
    bg.grid = grid;
    bg.u = bg.u_x = bg.u_y = bg.u_yy = Field2D(grid);
    for (std::size_t i = 0; i < grid.nx(); ++i)
        for (std::size_t j = 0; j < grid.ny(); ++j) {
            const auto s = blasius_sample(p, grid.x[i], grid.y[j]);
            bg.u(i, j) = s.u;
            bg.u_x(i, j) = s.u_x;
            bg.u_y(i, j) = s.u_y;
            bg.u_yy(i, j) = s.u_yy;
        }
    return bg;
}

GoodVariables good_variables(const Field2D& u, const Field2D& v, const Background& bg) {
    const Grid2D& g = bg.grid;
    require_shape(u, g, "good_variables");
    require_shape(v, g, "good_variables");
    require_shape(bg.u, g, "good_variables");
    GoodVariables gv;
    gv.grid = g;
    gv.ubar = bg.u;
    gv.psi = gv.q = gv.U = gv.V = Field2D(g);
    const double umax = max_abs(u);
    const auto w0 = d1_forward_weights(g.y[0], g.y[1], g.y[2]);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        if (std::abs(u(i, 0)) > 1e-12 * (1.0 + umax)) throw PreconditionError("good_variables: u must vanish at the wall");
        if (!(bg.u_y(i, 0) > 0.0)) throw PreconditionError("good_variables: background wall shear must be positive");
        const auto psi = cumulative_integral(u.row(i), g.y);
        for (std::size_t j = 0; j < g.ny(); ++j) gv.psi(i, j) = psi[j];
        for (std::size_t j = 1; j < g.ny(); ++j) {
            const double ub = bg.u(i, j);
            if (ub == 0.0 || !std::isfinite(ub)) throw DomainError("good_variables: background vanishes away from the wall");
            gv.q(i, j) = psi[j] / ub;
            gv.U(i, j) = (u(i, j) * ub - psi[j] * bg.u_y(i, j)) / (ub * ub);
            gv.V(i, j) = (v(i, j) * ub + psi[j] * bg.u_x(i, j)) / (ub * ub);
        }
        // psi ~ u_y y^2 / 2 and u_bar ~ u_bar_y y at the wall.
        const double uy0 = w0.m * u(i, 0) + w0.c * u(i, 1) + w0.p * u(i, 2);
        gv.q(i, 0) = 0.0;
        gv.U(i, 0) = uy0 / (2.0 * bg.u_y(i, 0));
        gv.V(i, 0) = 0.0;
    }
    return gv;
}

Reconstruction reconstruction_error(const GoodVariables& gv, const Background& bg, const Field2D& u,
                                    const Field2D& v, int skip) {
    Reconstruction r;
    const Grid2D& g = bg.grid;
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = static_cast<std::size_t>(std::max(skip, 0)); j < g.ny(); ++j) {
            const double ur = bg.u(i, j) * gv.U(i, j) + bg.u_y(i, j) * gv.q(i, j);
            const double vr = bg.u(i, j) * gv.V(i, j) - bg.u_x(i, j) * gv.q(i, j);
            r.max_u_error = std::max(r.max_u_error, std::abs(u(i, j) - ur));
            r.max_v_error = std::max(r.max_v_error, std::abs(v(i, j) - vr));
        }
    return r;
}

double japanese(double x) { return 1.0 + x; }

double weight_g(double x) {
    if (!(x >= 0.0)) throw DomainError("weight_g: x must be nonnegative");
    return std::sqrt(1.0 + std::pow(japanese(x), -0.01));
}

double cutoff_phi(int n, double x) {
    if (n < 1 || n > 12) throw DomainError("cutoff_phi: n must lie in [1, 12]");
    if (!(x >= 0.0)) throw DomainError("cutoff_phi: x must be nonnegative");
    const double a = 200.0 + 10.0 * n;
    if (x <= a) return 0.0;
    if (x >= a + 5.0) return 1.0;
    const double t = (x - a) / 5.0;
    return t * t * (3.0 - 2.0 * t);
}

NormReport norm_X0(const GoodVariables& gv, const Background& bg, double eps) {
    const Grid2D& g = bg.grid;
    require_shape(gv.U, g, "norm_X0");
    const Field2D Uy = diff_y(gv.U, g), Ux = diff_x(gv.U, g), Vx = diff_x(gv.V, g);
    std::vector<double> g2(g.nx()), ck_u(g.nx()), ck_v(g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const double w = weight_g(g.x[i]);
        g2[i] = w * w;
        ck_u[i] = std::pow(japanese(g.x[i]), -1.0 - 0.01);
        ck_v[i] = std::pow(japanese(g.x[i]), -2.0 - 0.01);
    }
    const auto& U = gv.U;
    const auto& V = gv.V;
    NormReport r;
    r.eps = eps;
    auto term = [&](const char* name, auto&& h) { r.x0_terms.push_back({name, integrate_weighted(g, h)}); };
    term("ubar_Uy_g", [&](std::size_t i, std::size_t j) { return pos(bg.u(i, j)) * Uy(i, j) * Uy(i, j) * g2[i]; });
    term("eps_ubar_Ux_g", [&](std::size_t i, std::size_t j) { return eps * pos(bg.u(i, j)) * Ux(i, j) * Ux(i, j) * g2[i]; });
    term("eps2_ubar_Vx_g",
         [&](std::size_t i, std::size_t j) { return eps * eps * pos(bg.u(i, j)) * Vx(i, j) * Vx(i, j) * g2[i]; });
    term("neg_uyy_U_g", [&](std::size_t i, std::size_t j) { return pos(-bg.u_yy(i, j)) * U(i, j) * U(i, j) * g2[i]; });
    term("eps_neg_uyy_V_g",
         [&](std::size_t i, std::size_t j) { return eps * pos(-bg.u_yy(i, j)) * V(i, j) * V(i, j) * g2[i]; });
    r.x0_terms.push_back({"wall_uy_U_g", integrate_wall(g, [&](std::size_t i) {
                              return pos(bg.u_y(i, 0)) * U(i, 0) * U(i, 0) * g2[i];
                          })});
    term("ck_ubar_U", [&](std::size_t i, std::size_t j) {
        const double a = bg.u(i, j) * U(i, j);
        return a * a * ck_u[i];
    });
    term("ck_eps_ubar_V", [&](std::size_t i, std::size_t j) {
        const double a = bg.u(i, j) * V(i, j);
        return eps * a * a * ck_v[i];
    });
    double sum = 0.0;
    for (const auto& t : r.x0_terms) sum += t.value;
    r.x0 = std::sqrt(sum);
    r.clipped_measure = integrate_weighted(g, [&](std::size_t i, std::size_t j) { return bg.u_yy(i, j) > 0.0 ? 1.0 : 0.0; });
    r.nx = g.nx();
    r.ny = g.ny();
    r.x_max = g.x_max();
    r.y_max = g.y_max();
    return r;
}

HalfNorms norm_half(int n, const GoodVariables& gv, const Background& bg, double eps) {
    if (n != 0 && n != 1) throw DomainError("norm_half: n must be 0 or 1");
    require_shape(gv.U, bg.grid, "norm_half");
    HalfNorms out = half_norms(n, gv.U, gv.V, bg, eps);
    // Differencing-noise floor: a checkerboard at roundoff amplitude is the pattern differences amplify most.
    Field2D cu(bg.grid), cv(bg.grid);
    const double au = std::numeric_limits<double>::epsilon() * max_abs(gv.U);
    const double av = std::numeric_limits<double>::epsilon() * max_abs(gv.V);
    for (std::size_t i = 0; i < cu.nx; ++i)
        for (std::size_t j = 0; j < cu.ny; ++j) {
            const double s = ((i + j) % 2) ? -1.0 : 1.0;
            cu(i, j) = s * au;
            cv(i, j) = s * av;
        }
    const HalfNorms floor = half_norms(n, cu, cv, bg, eps);
    out.noise_floor = floor.x_half + floor.y_half;
    return out;
}

void norm_X1(const GoodVariables& gv, const Background& bg, double eps, NormReport& r) {
    const Grid2D& g = bg.grid;
    const Field2D Ux = diff_x(gv.U, g), Vx = diff_x(gv.V, g);
    const Field2D Uxy = diff_y(Ux, g), Uxx = diff_x(Ux, g), Vxx = diff_x(Vx, g);
    std::vector<double> w(g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const double a = g.x[i] * cutoff_phi(1, g.x[i]);
        w[i] = a * a;
    }
    r.x1_terms.clear();
    auto term = [&](const char* name, auto&& h) { r.x1_terms.push_back({name, integrate_weighted(g, h)}); };
    term("ubar_Uxy", [&](std::size_t i, std::size_t j) { return pos(bg.u(i, j)) * Uxy(i, j) * Uxy(i, j) * w[i]; });
    term("eps_ubar_Uxx", [&](std::size_t i, std::size_t j) { return eps * pos(bg.u(i, j)) * Uxx(i, j) * Uxx(i, j) * w[i]; });
    term("eps2_ubar_Vxx",
         [&](std::size_t i, std::size_t j) { return eps * eps * pos(bg.u(i, j)) * Vxx(i, j) * Vxx(i, j) * w[i]; });
    term("neg_uyy_Ux", [&](std::size_t i, std::size_t j) { return pos(-bg.u_yy(i, j)) * Ux(i, j) * Ux(i, j) * w[i]; });
    term("eps_neg_uyy_Vx",
         [&](std::size_t i, std::size_t j) { return eps * pos(-bg.u_yy(i, j)) * Vx(i, j) * Vx(i, j) * w[i]; });
    r.x1_terms.push_back({"wall_uy_Ux", integrate_wall(g, [&](std::size_t i) {
                              return pos(bg.u_y(i, 0)) * Ux(i, 0) * Ux(i, 0) * w[i];
                          })});
    double sum = 0.0;
    for (const auto& t : r.x1_terms) sum += t.value;
    r.x_one = std::sqrt(sum);
}

NormReport evaluate_norms(const GoodVariables& gv, const Background& bg, double eps) {
    NormReport r = norm_X0(gv, bg, eps);
    const HalfNorms h = norm_half(0, gv, bg, eps);
    r.x_half = h.x_half;
    r.y_half = h.y_half;
    r.noise_floor_half = h.noise_floor;
    norm_X1(gv, bg, eps, r);
    return r;
}

std::string norm_report_json(const NormReport& r) {
    std::string s = "{";
    char buf[96];
    bool first = true;
    auto put = [&](const std::string& k, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        if (!first) s += ",";
        first = false;
        s += "\"" + k + "\":" + (std::isfinite(v) ? std::string(buf) : std::string("null"));
    };
    put("eps", r.eps);
    put("X0", r.x0);
    for (const auto& t : r.x0_terms) put("X0." + t.name, t.value);
    put("X_half", r.x_half);
    put("Y_half", r.y_half);
    put("X1", r.x_one);
    for (const auto& t : r.x1_terms) put("X1." + t.name, t.value);
    put("noise_floor_half", r.noise_floor_half);
    put("clipped_measure", r.clipped_measure);
    put("nx", static_cast<double>(r.nx));
    put("ny", static_cast<double>(r.ny));
    put("x_max", r.x_max);
    put("y_max", r.y_max);
    return s + "}";
}

double hardy_precise_check(const std::vector<double>& f, const std::vector<double>& ubar,
                           const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (f.size() != n || ubar.size() != n || n < 3) throw ShapeError("hardy_precise_check: sizes");
    double fmax = 0.0;
    for (double e : f) fmax = std::max(fmax, std::abs(e));
    if (std::abs(f[0]) > 1e-14 * std::max(fmax, 1.0)) throw PreconditionError("hardy_precise_check: f(0) must vanish");
    const auto fx = derivative(f, x);
    const auto ux = derivative(ubar, x);
    std::vector<double> lhs(n), a(n), b(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double jx = japanese(x[k]);
        lhs[k] = std::pow(jx, -3.01) * ubar[k] * ubar[k] * f[k] * f[k];
        a[k] = std::pow(jx, -1.01) * ubar[k] * ubar[k] * fx[k] * fx[k];
        b[k] = std::pow(jx, -2.01) * ubar[k] * ux[k] * f[k] * f[k];
    }
    return integrate(a, x) / 1.01 + 2.0 / 1.01 * integrate(b, x) - integrate(lhs, x);
}

HardyWeighted hardy_weighted_check(const Field2D& f, double gamma, const Field2D& up, const Grid2D& g) {
    require_shape(f, g, "hardy_weighted_check");
    require_shape(up, g, "hardy_weighted_check");
    if (!(gamma > 0.0)) throw DomainError("hardy_weighted_check: gamma must be positive");
    HardyWeighted out;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const auto fy = derivative(f.row(i), g.y);
        double l = 0.0, r1 = 0.0, r2 = 0.0;
        for (std::size_t j = 0; j < g.ny(); ++j) {
            const double fv = f(i, j), u = up(i, j);
            l += g.wy[j] * fv * fv;
            r1 += g.wy[j] * pos(u) * fy[j] * fy[j] * japanese(g.x[i]);
            r2 += g.wy[j] * u * u * fv * fv;
        }
        const double rhs = gamma * r1 + r2 / (gamma * gamma);
        double ratio = 0.0;
        if (l > 0.0) ratio = rhs > 0.0 ? l / rhs : INFINITY;
        if (ratio > out.max_ratio) {
            out.max_ratio = ratio;
            out.x_at_max = g.x[i];
        }
    }
    return out;
}

}  // namespace plab

#include "criteria.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "prandtl_lab/blasius.hpp"
#include "prandtl_lab/norms.hpp"
#include "prandtl_lab/ns_solver.hpp"
#include "prandtl_lab/prandtl.hpp"

namespace plab::criteria {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

const BlasiusProfile& profile() {
    static const BlasiusProfile p = solve_blasius(20.0, 4001, 1e-10);
    return p;
}

std::vector<double> blasius_datum(const BlasiusProfile& p, const std::vector<double>& y) {
    std::vector<double> d(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) d[j] = blasius_sample(p, 0.0, y[j]).u;
    return d;
}

double max_error(const PrandtlRun& r, const BlasiusProfile& p) {
    const auto e = sup_error_vs_blasius(r, p);
    return *std::max_element(e.begin(), e.end());
}

// U = e^{-z}/X, V = X^{-3/2} (1 - e^{-z}(1 - z))/2 with X = 1 + x, z = y/sqrt(X); divergence free.
GoodVariables smooth_good_variables(const Grid2D& g) {
    GoodVariables gv;
    gv.grid = g;
    gv.psi = gv.q = gv.U = gv.V = gv.ubar = Field2D(g);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) {
            const double X = 1 + g.x[i], z = g.y[j] / std::sqrt(X);
            gv.U(i, j) = std::exp(-z) / X;
            gv.V(i, j) = std::pow(X, -1.5) * (1 - std::exp(-z) * (1 - z)) / 2;
        }
    return gv;
}

std::vector<double> norm_values(const NormReport& r) {
    std::vector<double> v{r.x0, r.x_half, r.y_half, r.x_one};
    for (const auto& t : r.x0_terms) v.push_back(t.value);
    for (const auto& t : r.x1_terms) v.push_back(t.value);
    return v;
}

}  // namespace

double oracle_wall_slope(double z_max, int steps) {
    using S = std::array<double, 3>;
    auto rhs = [](const S& y) { return S{y[1], y[2], -y[0] * y[2]}; };
    auto end_slope = [&](double s) {
        const double h = z_max / steps;
        S y{0, 0, s};
        for (int i = 0; i < steps; ++i) {
            const S k1 = rhs(y);
            S a;
            for (int j = 0; j < 3; ++j) a[j] = y[j] + 0.5 * h * k1[j];
            const S k2 = rhs(a);
            for (int j = 0; j < 3; ++j) a[j] = y[j] - h * k1[j] + 2 * h * k2[j];
            const S k3 = rhs(a);
            for (int j = 0; j < 3; ++j) y[j] += h / 6 * (k1[j] + 4 * k2[j] + k3[j]);
        }
        return y[1];
    };
    double lo = 0.1, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (lo + hi);
        (end_slope(m) < 1.0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

Outcome blasius_solve() {
    const auto t0 = Clock::now();
    const auto p = solve_blasius(20.0, 4001, 1e-10);
    const double oracle = oracle_wall_slope(20.0, 80000);
    double fppp = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < p.z.size(); ++k) fppp = std::max(fppp, -p.f[k] * p.fpp[k]);
    const auto props = blasius_properties_check(p, {0.0, 1.0, 10.0, 100.0});
    const double sec = since(t0);
    const double top = std::abs(p.fp.back() - 1.0), ds = std::abs(p.s - oracle);
    Outcome o{1, "Blasius solve", false, "", 0.0};
    o.seconds = sec;
    o.pass = top <= 1e-8 && ds <= 1e-6 && fppp <= 1e-10 && props.concavity_ok && sec < 1.0;
    o.detail = fmt("|f'(Zmax)-1| = %.2e (<= 1e-8), |f''(0) - oracle| = %.2e (<= 1e-6), max f''' = %.2e, "
                   "max u_yy on family = %.2e (<= 1e-10), %.2f s (< 1 s)",
                   top, ds, fppp, props.max_uyy, sec);
    return o;
}

Outcome exact_solution_regression() {
    const auto t0 = Clock::now();
    const auto& p = profile();
    std::vector<double> xs;
    for (int i = 0; i <= 200; ++i) xs.push_back(i * 1e-4);
    std::vector<double> ey, ex;
    for (int ny : {40, 80, 160}) {
        const auto g = make_grid(8, ny, 1.0, 15.0, 1.0, 1.0);
        MarchConfig c;
        c.x_nodes = xs;
        ey.push_back(max_error(march_prandtl(blasius_datum(p, g.y), g, c), p));
    }
    for (int nx : {51, 101, 201}) {
        const auto g = make_grid(nx, 800, 10.0, 40.0, 8.0, 4.0);
        ex.push_back(max_error(march_prandtl(blasius_datum(p, g.y), g, {}), p));
    }
    const double oy = std::min(std::log2(ey[0] / ey[1]), std::log2(ey[1] / ey[2]));
    const double ox = std::min(std::log2(ex[0] / ex[1]), std::log2(ex[1] / ex[2]));
    const double sec = since(t0);
    Outcome o{2, "exact-solution regression", false, "", 0.0};
    o.seconds = sec;
    o.pass = ox >= 1.0 && oy >= 1.8 && sec < 60.0;
    o.detail = fmt("order in dx %.3f (>= 1), order in dy %.3f (>= 1.8), %.1f s (< 60 s)", ox, oy, sec);
    return o;
}

Outcome attractor_rate(AttractorReport* keep) {
    const auto t0 = Clock::now();
    const auto r = run_attractor_experiment(attractor_defaults());
    const double sec = since(t0);
    Outcome o{3, "attractor rate", false, "", 0.0};
    o.seconds = sec;
    if (!r.fit) {
        o.detail = r.status;
    } else {
        o.pass = r.pass && sec < 300.0;
        o.detail = fmt("exponent %.4f (<= -0.35), r^2 %.4f (>= 0.95), margin over -1/4 %.4f (>= 0.05) on [%g, %g], "
                       "%.1f s (< 300 s)",
                       r.fit->exponent, r.fit->r_squared, -0.25 - r.fit->exponent, r.fit->x_lo, r.fit->x_hi, sec);
    }
    if (keep) *keep = r;
    return o;
}

Outcome damping_identity() {
    const auto t0 = Clock::now();
    const auto& p = profile();
    double rel[2] = {0.0, 0.0};
    int increases = 0;
    for (int lev = 0; lev < 2; ++lev) {
        const int nx = (1000 << lev) + 1, ny = 200 << lev, npsi = 400 << lev;
        const auto g = make_grid(nx, ny, 1.0, 30.0, 8.0, 1.0);
        const auto td = solve_twisted_difference(blasius_run(p, g),
                                                 march_prandtl(blasius_datum(p.with_origin(2.0), g.y), g, {}),
                                                 {npsi, DampingForm::exact});
        const auto au = damping_audit(td);
        rel[lev] = au.max_relative;
        increases += au.norm_increases + au.direct_norm_increases;
    }
    const double ratio = rel[1] / rel[0];
    Outcome o{4, "damping identity", false, "", 0.0};
    o.seconds = since(t0);
    o.pass = rel[0] <= 1e-3 && ratio <= 0.5 && increases == 0;
    o.detail = fmt("relative residual %.3e (<= 1e-3), refined/reference %.3f (<= 0.5), norm increases %d (= 0)",
                   rel[0], ratio, increases);
    return o;
}

Outcome momentum_drift() {
    const auto t0 = Clock::now();
    const auto g = make_grid(101, 400, 10.0, 30.0, 16.0, 1.0);
    const auto d = momentum_integral_drift(march_prandtl(blasius_datum(profile(), g.y), g, {}));
    Outcome o{5, "momentum-integral drift", false, "", 0.0};
    o.seconds = since(t0);
    o.pass = d.max_drift <= 1e-6;
    o.detail = fmt("max drift %.3e per unit x at x = %.3f (<= 1e-6)", d.max_drift, d.x_at_max);
    return o;
}

Outcome sharp_hardy() {
    const auto t0 = Clock::now();
    std::vector<double> x;
    for (int k = 0; k <= 8000; ++k) x.push_back(k * 5e-3);
    const std::size_t n = x.size();
    // Backgrounds: the uniform stream and Blasius traces at a few heights.
    std::vector<std::vector<double>> traces{std::vector<double>(n, 1.0)};
    for (double y : {0.3, 1.0, 3.0}) {
        std::vector<double> u(n);
        for (std::size_t k = 0; k < n; ++k) u[k] = blasius_sample(profile(), x[k], y).u;
        traces.push_back(u);
    }
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    int violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> f(n, 0.0);
        const int family = trial % 3;
        if (family == 0) {
            // Compact smooth bump.
            const double a = 1.0 + 10.0 * d(rng), w = (0.1 + 0.85 * d(rng)) * a, c = 2 * d(rng) - 1;
            for (std::size_t k = 0; k < n; ++k) {
                const double t = (x[k] - a) / w;
                if (std::abs(t) < 1.0) f[k] = c * std::exp(-1.0 / (1.0 - t * t));
            }
        } else if (family == 1) {
            // x^m e^{-a x}.
            const double m = 1.0 + 3.0 * d(rng), a = 0.2 + 2.0 * d(rng), c = 2 * d(rng) - 1;
            for (std::size_t k = 0; k < n; ++k) f[k] = c * std::pow(x[k], m) * std::exp(-a * x[k]);
        } else {
            // Close to the extremal <x>: the square term nearly vanishes away from x = 0.
            const double s = 1.0 + 20.0 * d(rng), len = 20.0 + 200.0 * d(rng);
            for (std::size_t k = 0; k < n; ++k)
                f[k] = (1.0 + x[k]) * (1.0 - std::exp(-s * x[k])) * std::exp(-x[k] / len);
        }
        const double m = hardy_precise_check(f, traces[trial % traces.size()], x);
        worst = std::min(worst, m);
        if (m < -1e-8) ++violations;
    }
    const double sec = since(t0);
    Outcome o{6, "sharp Hardy inequality", false, "", 0.0};
    o.seconds = sec;
    o.pass = violations == 0 && sec < 10.0;
    o.detail = fmt("100 functions, min margin %.3e (>= -1e-8), violations %d, %.2f s (< 10 s)", worst, violations,
                   sec);
    return o;
}

Outcome good_variable_round_trip() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const auto g = make_grid(31, 150, 20.0, 30.0, 8.0, 2.0);
    const auto bg = blasius_background(profile(), g);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        // psi = y^2 e^{-a y} (c0 + c1 sin(k x)); u = psi_y, v = -psi_x.
        const double a = 0.3 + 0.5 * std::abs(d(rng)), c0 = d(rng), c1 = d(rng), k = 0.2 + std::abs(d(rng));
        Field2D u(g), v(g);
        for (std::size_t i = 0; i < g.nx(); ++i)
            for (std::size_t j = 0; j < g.ny(); ++j) {
                const double x = g.x[i], y = g.y[j];
                const double A = c0 + c1 * std::sin(k * x), e = std::exp(-a * y);
                u(i, j) = (2 * y - a * y * y) * e * A;
                v(i, j) = -y * y * e * c1 * k * std::cos(k * x);
            }
        const auto rec = reconstruction_error(good_variables(u, v, bg), bg, u, v, 2);
        worst = std::max({worst, rec.max_u_error, rec.max_v_error});
    }
    Outcome o{7, "good-variable round trip", false, "", 0.0};
    o.seconds = since(t0);
    o.pass = worst <= 1e-12;
    o.detail = fmt("20 fields, max reconstruction error %.3e off the two wall cells (<= 1e-12)", worst);
    return o;
}

Outcome manufactured_order() {
    const auto t0 = Clock::now();
    std::vector<Grid2D> gs;
    for (int n : {16, 32, 64}) gs.push_back(make_grid(n + 1, n + 1, 0.25, 1.0, 1.0, 1.0));
    const auto r = manufactured_test(gs, 1e-2);
    const double sec = since(t0);
    Outcome o{8, "Navier-Stokes manufactured order", false, "", 0.0};
    o.seconds = sec;
    o.pass = r.observed_order >= 1.8 && sec < 600.0;
    o.detail = fmt("observed order %.3f (>= 1.8) on 16/32/64 at eps = 1e-2, errors U %.2e %.2e %.2e, %.1f s (< 600 s)",
                   r.observed_order, r.error_u[0], r.error_u[1], r.error_u[2], sec);
    return o;
}

std::vector<Outcome> inviscid_limit(InviscidReport* keep) {
    const auto t0 = Clock::now();
    const auto r = run_inviscid_limit_experiment(inviscid_defaults());
    const double sec = since(t0);
    auto find = [&](const char* name) -> const Threshold* {
        for (const auto& t : r.checks)
            if (t.name == name) return &t;
        return nullptr;
    };
    auto ok = [&](const char* name) { return find(name) && find(name)->pass; };
    auto val = [&](const char* name) { return find(name) ? find(name)->value : std::nan(""); };

    Outcome a{9, "inviscid-limit eps rate", false, "", 0.0};
    a.seconds = sec;
    a.pass = ok("eps_slope_u") && ok("eps_slope_v") && sec < 1800.0;
    a.detail = fmt("u slope %.4f (in [0.4, 0.6]), v slope %.4f (>= 0.8) at x = %g, %.1f s (< 1800 s)",
                   val("eps_slope_u"), val("eps_slope_v"), r.config.x_station, sec);

    Outcome b{10, "x-decay proxy", false, "", 0.0};
    b.pass = ok("x_exponent_u");
    b.detail = fmt("exponent %.4f (<= -0.1) at eps = %g on [%g, %g]; short window, not the asymptotic rate",
                   val("x_exponent_u"), r.x_fit_eps, r.config.window.lo, r.config.window.hi);

    Outcome c{11, "forcing residual scaling", false, "", 0.0};
    c.pass = ok("residual_ratio_order1_to_order0") && ok("residual_increases_along_sweep");
    std::string sweep;
    for (const auto& run : r.runs)
        sweep += fmt(" eps %g: %.4f/%.4f;", run.eps, run.residual_order0, run.residual_order1);
    c.detail = fmt("order1/order0 %.4f (< 1) at eps = %g, increases along the sweep %g (= 0); order0/order1:",
                   val("residual_ratio_order1_to_order0"), r.x_fit_eps, val("residual_increases_along_sweep")) +
               sweep;
    if (keep) *keep = r;
    return {a, b, c};
}

Outcome norm_plumbing() {
    const auto t0 = Clock::now();
    const auto& p = profile();
    const double eps = 1e-2;

    // Homogeneity of every norm and squared term.
    const auto g = make_grid(161, 60, 260.0, 60.0, 2.0, 1.0);
    const auto bg = blasius_background(p, g);
    const auto gv = smooth_good_variables(g);
    const auto base = norm_values(evaluate_norms(gv, bg, eps));
    const auto h0 = norm_half(0, gv, bg, eps);
    const auto h1 = norm_half(1, gv, bg, eps);
    double homog = 0.0;
    for (double c : {3.0, -0.25}) {
        auto s = gv;
        for (auto& e : s.U.data) e *= c;
        for (auto& e : s.V.data) e *= c;
        const auto sc = norm_values(evaluate_norms(s, bg, eps));
        for (std::size_t k = 0; k < base.size(); ++k) {
            // Norms scale with |c|, squared terms with c^2.
            const double want = k < 4 ? std::abs(c) * base[k] : c * c * base[k];
            if (want != 0.0) homog = std::max(homog, std::abs(sc[k] - want) / std::abs(want));
        }
        const auto s0 = norm_half(0, s, bg, eps), s1 = norm_half(1, s, bg, eps);
        for (auto [a, b] : {std::pair{h0.x_half, s0.x_half}, {h0.y_half, s0.y_half}, {h1.x_half, s1.x_half},
                            {h1.y_half, s1.y_half}})
            if (a != 0.0) homog = std::max(homog, std::abs(b - std::abs(c) * a) / (std::abs(c) * a));
    }

    // Locality: fields supported in x <= 200 see none of the cutoffs, and edits there leave the
    // cutoff norms bit-identical.
    const auto gl = make_grid(301, 60, 300.0, 60.0, 2.0, 1.0);
    const auto bgl = blasius_background(p, gl);
    auto full = smooth_good_variables(gl);
    auto early = full, edited = full;
    for (std::size_t i = 0; i < gl.nx(); ++i)
        for (std::size_t j = 0; j < gl.ny(); ++j) {
            if (gl.x[i] > 200.0) early.U(i, j) = early.V(i, j) = 0.0;
            else edited.U(i, j) *= 1.0 + 0.5 * std::sin(gl.x[i] + gl.y[j]);
        }
    bool local = true;
    for (int n : {0, 1}) {
        const auto e = norm_half(n, early, bgl, 1e-3);
        local = local && e.x_half == 0.0 && e.y_half == 0.0;
        const auto a = norm_half(n, full, bgl, 1e-3), b = norm_half(n, edited, bgl, 1e-3);
        local = local && a.x_half == b.x_half && a.y_half == b.y_half;
    }
    NormReport r1;
    norm_X1(early, bgl, 1e-3, r1);
    local = local && r1.x_one == 0.0;

    // Clipping on the Blasius background.
    const auto gc = make_grid(41, 200, 50.0, 40.0, 4.0, 1.0);
    const double clipped = norm_X0(smooth_good_variables(gc), blasius_background(p, gc), 1e-3).clipped_measure;

    Outcome o{12, "norm plumbing", false, "", 0.0};
    o.seconds = since(t0);
    o.pass = homog <= 1e-12 && local && clipped == 0.0;
    o.detail = fmt("homogeneity defect %.2e (<= 1e-12), cutoff locality %s, clipped measure %g (= 0)", homog,
                   local ? "exact" : "violated", clipped);
    return o;
}

std::vector<Outcome> run(const std::set<int>& ids, const std::function<void(const Outcome&)>& on_result) {
    auto want = [&](int k) { return ids.empty() || ids.count(k) > 0; };
    std::vector<Outcome> out;
    auto keep = [&](Outcome o) {
        if (on_result) on_result(o);
        out.push_back(std::move(o));
    };
    if (want(1)) keep(blasius_solve());
    if (want(2)) keep(exact_solution_regression());
    if (want(3)) keep(attractor_rate());
    if (want(4)) keep(damping_identity());
    if (want(5)) keep(momentum_drift());
    if (want(6)) keep(sharp_hardy());
    if (want(7)) keep(good_variable_round_trip());
    if (want(8)) keep(manufactured_order());
    if (want(9) || want(10) || want(11))
        for (auto& o : inviscid_limit())
            if (want(o.id)) keep(o);
    if (want(12)) keep(norm_plumbing());
    return out;
}

std::string format_line(const Outcome& o) {
    return fmt("criterion %2d %s  %s: %s", o.id, o.pass ? "PASS" : "FAIL", o.title.c_str(), o.detail.c_str());
}

}  // namespace plab::criteria

#include <doctest.h>

#include <cmath>
#include <random>

#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/prandtl.hpp"

using namespace plab;

namespace {

const BlasiusProfile& profile() {
    static const BlasiusProfile p = solve_blasius(20.0, 4001, 1e-9);
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

// Composite Simpson on a uniform profile grid, independent of the library quadrature.
double simpson(const std::vector<double>& f, double h) {
    std::size_t n = f.size() - 1;
    if (n % 2) --n;
    double s = f[0] + f[n];
    for (std::size_t k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f[k];
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("blasius datum is reproduced with second order in y") {
    const auto& p = profile();
    std::vector<double> xs;
    for (int i = 0; i <= 200; ++i) xs.push_back(i * 1e-4);
    std::vector<double> err;
    for (int ny : {40, 80, 160}) {
        const auto g = make_grid(8, ny, 1.0, 15.0, 1.0, 1.0);
        MarchConfig c;
        c.x_nodes = xs;
        err.push_back(max_error(march_prandtl(blasius_datum(p, g.y), g, c), p));
    }
    CHECK(std::log2(err[0] / err[1]) >= 1.8);
    CHECK(std::log2(err[1] / err[2]) >= 1.8);
}

TEST_CASE("blasius datum is reproduced with at least first order in x") {
    const auto& p = profile();
    std::vector<double> err;
    for (int nx : {51, 101, 201}) {
        const auto g = make_grid(nx, 800, 10.0, 40.0, 8.0, 4.0);
        err.push_back(max_error(march_prandtl(blasius_datum(p, g.y), g, {}), p));
    }
    CHECK(std::log2(err[0] / err[1]) >= 1.0);
    CHECK(std::log2(err[1] / err[2]) >= 1.0);
}

TEST_CASE("march states satisfy the boundary conditions and the maximum principle") {
    const auto& p = profile();
    const auto g = make_grid(81, 200, 20.0, 40.0, 8.0, 2.0);
    auto datum = blasius_datum(p, g.y);
    const auto bump = bump_perturbation(g.y, 0.1, 3.0, 1.0, 1.0);
    for (std::size_t j = 0; j < datum.size(); ++j) datum[j] = std::min(1.0, datum[j] + bump[j]);
    MarchConfig c;
    c.check_monotone = false;
    const auto r = march_prandtl(datum, g, c);
    REQUIRE(r.states.size() == g.nx());
    for (const auto& s : r.states) {
        CHECK(s.u.front() == 0.0);
        CHECK(s.v.front() == 0.0);
        CHECK(std::abs(s.u.back() - 1.0) <= 1e-12);
        CHECK(s.wall_shear > 0.0);
    }
    CHECK(r.max_overshoot <= 1e-9);
    CHECK(r.min_value >= 0.0);
    CHECK(r.max_continuity_defect <= 1e-12);
    CHECK_FALSE(detect_separation(r).has_value());
}

TEST_CASE("monotone datum stays monotone") {
    const auto& p = profile();
    const auto g = make_grid(41, 150, 10.0, 40.0, 8.0, 1.0);
    const auto r = march_prandtl(blasius_datum(p.with_origin(0.5), g.y), g, {});
    CHECK(r.monotonicity_violations == 0);
}

TEST_CASE("march preconditions") {
    const auto g = make_grid(11, 50, 1.0, 30.0, 1.0, 1.0);
    const auto d = blasius_datum(profile(), g.y);
    auto bad = d;
    bad[0] = 0.1;
    CHECK_THROWS_AS(march_prandtl(bad, g, {}), PreconditionError);
    bad = d;
    bad.back() = 0.9;
    CHECK_THROWS_AS(march_prandtl(bad, g, {}), PreconditionError);
    bad = d;
    bad[20] = 0.0;
    CHECK_THROWS_AS(march_prandtl(bad, g, {}), PreconditionError);
    CHECK_THROWS_AS(march_prandtl(std::vector<double>(10, 1.0), g, {}), ShapeError);
    MarchConfig c;
    c.x_nodes = {0.0, 0.5, 0.5};
    CHECK_THROWS_AS(march_prandtl(d, g, c), ConfigError);
    c.x_nodes.clear();
    c.tol = 0.0;
    CHECK_THROWS_AS(march_prandtl(d, g, c), ConfigError);
}

TEST_CASE("newton failure halves the step and then gives up") {
    const auto g = make_grid(8, 100, 4.0, 30.0, 4.0, 1.0);
    const auto d = blasius_datum(profile(), g.y);
    MarchConfig c;
    c.x_nodes = {0.0, 2.0, 4.0};
    c.max_iter = 3;
    const auto r = march_prandtl(d, g, c);
    CHECK(r.halvings > 0);
    CHECK(max_error(r, profile()) < 1e-2);
    c.max_iter = 1;
    c.max_halvings = 2;
    CHECK_THROWS_AS(march_prandtl(d, g, c), SolverError);
}

TEST_CASE("v_from_u") {
    const auto g = make_grid(8, 300, 1.0, 30.0, 4.0, 1.0);
    std::vector<double> u(g.ny());
    for (std::size_t j = 0; j < g.ny(); ++j) u[j] = std::tanh(g.y[j]);
    for (double e : v_from_u(u, u, 0.1, g.y)) CHECK(e == 0.0);
    CHECK_THROWS_AS(v_from_u(u, u, 0.0, g.y), DomainError);

    // Centered in x at the midpoint, the Blasius v is matched to O(dx^2 + dy^2).
    const auto& p = profile();
    const double x = 2.0, dx = 1e-3;
    std::vector<double> a(g.ny()), b(g.ny());
    for (std::size_t j = 0; j < g.ny(); ++j) {
        a[j] = blasius_sample(p, x - dx / 2, g.y[j]).u;
        b[j] = blasius_sample(p, x + dx / 2, g.y[j]).u;
    }
    const auto v = v_from_u(a, b, dx, g.y);
    CHECK(v[0] == 0.0);
    double worst = 0.0;
    for (std::size_t j = 0; j < g.ny(); ++j) worst = std::max(worst, std::abs(v[j] - blasius_sample(p, x, g.y[j]).v));
    CHECK(worst < 1e-4);
}

TEST_CASE("momentum drift of the sampled Blasius family is within quadrature error") {
    const auto& p = profile();
    const auto g = make_grid(41, 400, 10.0, 40.0, 8.0, 1.0);
    const auto run = blasius_run(p, g);
    const auto md = momentum_integral_drift(run);

    // theta(x) = m sqrt(2X), m from Simpson over the similarity profile.
    std::vector<double> q(p.z.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = p.fp[k] * (1.0 - p.fp[k]);
    const double m = simpson(q, p.z[1] - p.z[0]);
    auto theta = [&](double x) { return m * std::sqrt(2.0 * (x + p.x0)); };
    double quad = 0.0, shear = 0.0;
    for (const auto& s : run.states) {
        quad = std::max(quad, std::abs(s.momentum - theta(s.x)));
        shear = std::max(shear, std::abs(s.wall_shear - p.s / std::sqrt(2.0 * (s.x + p.x0))));
    }
    double bound = 0.0;
    const auto& x = g.x;
    for (std::size_t i = 1; i < x.size(); ++i) {
        double wp, wc, wm = 0.0;
        if (i >= 2) {
            const double h1 = x[i] - x[i - 1], h2 = x[i] - x[i - 2];
            wm = h1 / (h2 * (h2 - h1));
            wc = -h2 / (h1 * (h2 - h1));
            wp = (h1 + h2) / (h1 * h2);
        } else {
            wp = 1.0 / (x[1] - x[0]);
            wc = -wp;
        }
        double d = wp * theta(x[i]) + wc * theta(x[i - 1]);
        if (i >= 2) d += wm * theta(x[i - 2]);
        const double xerr = std::abs(d - m / std::sqrt(2.0 * (x[i] + p.x0)));
        bound = std::max(bound, xerr + (std::abs(wp) + std::abs(wc) + std::abs(wm)) * quad + shear);
    }
    CHECK(md.max_drift <= bound);
    // The similarity identity: int f'(1 - f') d eta = f''(0).
    CHECK(m == doctest::Approx(p.s).epsilon(1e-6));
}

TEST_CASE("momentum drift of uniform flow is zero") {
    PrandtlRun r;
    r.y = {0.0, 1.0, 2.0, 3.0};
    for (double x : {0.0, 0.5, 1.0}) {
        PrandtlState s;
        s.x = x;
        s.u.assign(4, 1.0);
        s.v.assign(4, 0.0);
        s.wall_shear = wall_shear(s.u, r.y);
        s.momentum = 0.0;
        r.states.push_back(s);
    }
    CHECK(momentum_integral_drift(r).max_drift == 0.0);
}

TEST_CASE("marched run conserves the momentum integral") {
    const auto& p = profile();
    const auto g = make_grid(101, 400, 10.0, 30.0, 16.0, 1.0);
    const auto r = march_prandtl(blasius_datum(p, g.y), g, {});
    CHECK(momentum_integral_drift(r).max_drift <= 1e-6);
}

TEST_CASE("separation detection") {
    const auto& p = profile();
    const auto g = make_grid(101, 200, 2.0, 30.0, 8.0, 1.0);
    MarchConfig c;
    c.dpdx = 0.5;
    const auto r = march_prandtl(blasius_datum(p, g.y), g, c);
    CHECK(r.separated);
    const auto xs = detect_separation(r);
    REQUIRE(xs.has_value());
    CHECK(*xs > 0.0);
    CHECK(*xs < 2.0);
    CHECK_FALSE(detect_separation(PrandtlRun{}).has_value());
}

TEST_CASE("twisted difference of a run with itself vanishes") {
    const auto& p = profile();
    const auto g = make_grid(21, 150, 5.0, 30.0, 8.0, 1.0);
    const auto base = blasius_run(p, g);
    const auto td = solve_twisted_difference(base, base, {100, DampingForm::exact});
    for (double e : td.phi_direct.data) CHECK(e == 0.0);
    CHECK(td.max_discrepancy == 0.0);
    const auto au = damping_audit(td);
    for (const auto& s : au.steps) {
        CHECK(s.rate == 0.0);
        CHECK(s.diffusion == 0.0);
        CHECK(s.residual == 0.0);
        CHECK(s.relative == 0.0);
    }
}

TEST_CASE("twisted difference against a shifted Blasius profile decays") {
    const auto& p = profile();
    const auto g = make_grid(201, 200, 1.0, 30.0, 8.0, 1.0);
    const auto base = blasius_run(p, g);
    const auto other = march_prandtl(blasius_datum(p.with_origin(2.0), g.y), g, {});
    const auto td = solve_twisted_difference(base, other, {400, DampingForm::exact});
    for (std::size_t i = 0; i < td.x.size(); ++i) CHECK(td.phi_direct(i, 0) == 0.0);
    double phi0 = 0.0;
    for (std::size_t k = 0; k < td.psi.size(); ++k) phi0 = std::max(phi0, std::abs(td.phi_direct(0, k)));
    CHECK(phi0 > 0.05);
    CHECK(td.negative_a_nodes == 0);
    CHECK(td.max_discrepancy < 0.05 * td.phi_scale);
    const auto au = damping_audit(td);
    CHECK(au.norm_increases == 0);
    CHECK(au.direct_norm_increases == 0);
    CHECK(au.a_nonneg);
    CHECK(au.concavity_nonneg);
    for (const auto& s : au.steps) {
        CHECK(s.diffusion > 0.0);
        CHECK(s.concavity >= 0.0);
        CHECK(s.damping >= 0.0);
    }
}

TEST_CASE("damping identity residual halves under refinement") {
    const auto& p = profile();
    double prev = 0.0;
    for (int lev = 0; lev < 2; ++lev) {
        const int nx = (50 << lev) + 1, ny = 100 << lev, npsi = 200 << lev;
        const auto g = make_grid(nx, ny, 0.5, 30.0, 8.0, 1.0);
        const auto td = solve_twisted_difference(blasius_run(p, g),
                                                 march_prandtl(blasius_datum(p.with_origin(2.0), g.y), g, {}),
                                                 {npsi, DampingForm::exact});
        const double r = damping_audit(td).max_relative;
        if (lev) CHECK(r <= 0.6 * prev);
        prev = r;
    }
}

TEST_CASE("convex base profile flags negative damping") {
    const auto g = make_grid(11, 120, 1.0, 12.0, 1.0, 1.0);
    // u = y^2/(1 + y^2) is increasing with u_yy > 0 for y < 1/sqrt(3).
    PrandtlRun base;
    base.y = g.y;
    for (double x : g.x) {
        PrandtlState s;
        s.x = x;
        for (double y : g.y) s.u.push_back(y * y / (1.0 + y * y));
        s.v.assign(g.ny(), 0.0);
        base.states.push_back(s);
    }
    const auto other = blasius_run(profile(), g);
    const auto td = solve_twisted_difference(base, other);
    CHECK(td.negative_a_nodes > 0);
    const auto au = damping_audit(td);
    CHECK_FALSE(au.a_nonneg);
    CHECK(au.a_negative_nodes == td.negative_a_nodes);
}

TEST_CASE("literal and exact damping forms differ only through the denominator") {
    const auto& p = profile();
    const auto g = make_grid(11, 120, 1.0, 30.0, 8.0, 1.0);
    const auto base = blasius_run(p, g);
    const auto other = blasius_run(p.with_origin(1.5), g);
    const auto e = solve_twisted_difference(base, other, {100, DampingForm::exact});
    const auto l = solve_twisted_difference(base, other, {100, DampingForm::literal});
    // exact / literal = u_p / (u_p + u*), in (0, 1) away from the wall.
    for (std::size_t k = 5; k < e.psi.size(); ++k) {
        if (std::abs(l.a_coef(3, k)) < 1e-8) continue;
        const double ratio = e.a_coef(3, k) / l.a_coef(3, k);
        CHECK(ratio > 0.0);
        CHECK(ratio < 1.0);
    }
}

TEST_CASE("twisted difference input errors") {
    const auto& p = profile();
    const auto g = make_grid(11, 100, 1.0, 30.0, 8.0, 1.0);
    const auto base = blasius_run(p, g);
    auto bad = base;
    bad.states[4].u[10] = -0.1;
    CHECK_THROWS_AS(solve_twisted_difference(base, bad), InversionError);
    bad = base;
    bad.states[4].u[30] = 0.5 * bad.states[4].u[29];
    CHECK_THROWS_AS(solve_twisted_difference(base, bad), InversionError);
    const auto g2 = make_grid(12, 100, 1.0, 30.0, 8.0, 1.0);
    CHECK_THROWS_AS(solve_twisted_difference(base, blasius_run(p, g2)), ShapeError);
}

TEST_CASE("bump perturbation keeps the wall compatible") {
    std::vector<double> y{0.0, 1e-3, 2e-3, 1.0, 3.0};
    const auto b = bump_perturbation(y, 0.1, 3.0, 1.0, 1.0);
    CHECK(b[0] == 0.0);
    CHECK(std::abs(b[1]) < 1e-9);
    const double gauss = std::exp((3.0 - 1e-3) * (3.0 - 1e-3) - (3.0 - 2e-3) * (3.0 - 2e-3));
    CHECK(std::abs(b[2] / b[1] / gauss - 8.0) < 1e-6);  // cubic onset
    CHECK(b[4] == doctest::Approx(0.1 * 27.0 / 28.0));
}

TEST_CASE("summary csv") {
    const auto g = make_grid(9, 60, 1.0, 30.0, 4.0, 1.0);
    const auto r = blasius_run(profile(), g);
    const auto csv = run_summary_csv(r, &profile());
    CHECK(csv.rfind("x,wall_shear,sup_error\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
    const auto e = sup_error_vs_blasius(r, profile());
    for (double v : e) CHECK(v == 0.0);
}

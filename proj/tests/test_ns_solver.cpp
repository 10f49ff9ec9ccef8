#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "prandtl_lab/blasius.hpp"
#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/expansion.hpp"
#include "prandtl_lab/io.hpp"
#include "prandtl_lab/numerics.hpp"
#include "prandtl_lab/ns_solver.hpp"

using namespace plab;

namespace {

const BlasiusProfile& profile() {
    static const BlasiusProfile p = solve_blasius(20.0, 4001, 1e-10);
    return p;
}

NSBoundary blasius_inflow(const Grid2D& g) {
    return inflow_from_profiles(
        g, [](double y) { return blasius_sample(profile(), 0.0, y).u; },
        [](double y) { return blasius_sample(profile(), 0.0, y).v; });
}

double sup_abs(const Field2D& f) {
    double m = 0.0;
    for (double v : f.data) m = std::max(m, std::abs(v));
    return m;
}

// Small converged Blasius-inflow solve shared by several cases.
const NSField& small_solve() {
    static const NSField f = [] {
        const auto g = make_grid(33, 33, 5.0, 25.0, 8.0, 2.0);
        NSConfig c;
        c.eps = 1e-2;
        c.schedule = {1e-1};
        c.picard_switch = 1e-2;
        return solve_steady_ns(blasius_inflow(g), c, g);
    }();
    return f;
}

}  // namespace

TEST_CASE("manufactured solution converges at second order") {
    std::vector<Grid2D> gs;
    for (int n : {16, 32, 64}) gs.push_back(make_grid(n + 1, n + 1, 0.25, 1.0, 1.0, 1.0));
    const auto r = manufactured_test(gs, 1e-2);
    REQUIRE(r.orders.size() == 2);
    CHECK(r.observed_order >= 1.8);
    CHECK(r.error_u[2] < r.error_u[0]);
}

TEST_CASE("manufactured_test rejects too few or non-nested grids") {
    const auto a = make_grid(17, 17, 0.25, 1.0, 1.0, 1.0);
    const auto b = make_grid(33, 33, 0.25, 1.0, 1.0, 1.0);
    const auto c = make_grid(60, 60, 0.25, 1.0, 1.0, 1.0);
    CHECK_THROWS_AS(manufactured_test({a, b}, 1e-2), ConfigError);
    CHECK_THROWS_AS(manufactured_test({a, b, c}, 1e-2), ConfigError);
    CHECK_THROWS_AS(manufactured_test({a, b, make_grid(65, 65, 0.25, 1.0, 1.0, 1.0)}, 0.0), ConfigError);
}

TEST_CASE("zero data gives the zero field") {
    const auto g = make_grid(12, 12, 1.0, 1.0, 1.0, 1.0);
    NSBoundary bc;
    bc.inflow_u.assign(g.ny() - 1, 0.0);
    bc.inflow_v.assign(g.ny(), 0.0);
    bc.top_u.assign(g.nx(), 0.0);
    NSConfig c;
    const auto f = solve_steady_ns(bc, c, g);
    CHECK(sup_abs(f.U) == 0.0);
    CHECK(sup_abs(f.V) == 0.0);
    CHECK(sup_abs(f.P) == 0.0);
}

TEST_CASE("configuration errors") {
    const auto g = make_grid(12, 12, 1.0, 1.0, 1.0, 1.0);
    const auto bc = blasius_inflow(g);
    NSConfig c;
    c.eps = 0.0;
    CHECK_THROWS_AS(solve_steady_ns(bc, c, g), ConfigError);
    c.eps = -1e-3;
    CHECK_THROWS_AS(solve_steady_ns(bc, c, g), ConfigError);
    c.eps = 1e-2;
    c.schedule = {1e-1, 2e-1};
    CHECK_THROWS_AS(solve_steady_ns(bc, c, g), ConfigError);
    c.schedule = {1e-1, 1e-3};
    CHECK_THROWS_AS(solve_steady_ns(bc, c, g), ConfigError);
    auto bad = bc;
    bad.inflow_u.pop_back();
    c.schedule.clear();
    CHECK_THROWS_AS(solve_steady_ns(bad, c, g), ShapeError);
}

TEST_CASE("a stalled continuation names the last converged eps") {
    const auto g = make_grid(33, 33, 5.0, 25.0, 8.0, 2.0);
    NSConfig c;
    c.eps = 1e-2;
    c.schedule = {1e-1};
    c.picard_switch = 1e-2;
    c.max_iter = 6;
    c.tol = 1e-30;
    try {
        solve_steady_ns(blasius_inflow(g), c, g);
        FAIL("expected a solver error");
    } catch (const SolverError& e) {
        CHECK(std::string(e.what()).find("eps = 1.000e-01") != std::string::npos);
        CHECK(std::string(e.what()).find("no stage converged") != std::string::npos);
    }
}

TEST_CASE("uniform stream has zero interior momentum residual") {
    const auto g = make_grid(16, 16, 2.0, 4.0, 4.0, 1.0);
    NSField f;
    f.grid = g;
    f.eps = 1e-2;
    f.U = Field2D(g.nx(), g.ny() - 1);
    for (auto& v : f.U.data) v = 1.0;
    f.V = Field2D(g.nx() - 1, g.ny());
    f.P = Field2D(g.nx() - 1, g.ny() - 1);
    f.bc.inflow_u.assign(g.ny() - 1, 1.0);
    f.bc.inflow_v.assign(g.ny(), 0.0);
    const auto r = ns_residual(f);
    CHECK(r.momentum_x_interior < 1e-13);
    CHECK(r.continuity < 1e-13);
    CHECK(r.momentum_y < 1e-13);
}

TEST_CASE("converged solve: residual within tolerance, continuity, no-slip, history") {
    const auto& f = small_solve();
    const auto r = ns_residual(f);
    CHECK(r.total <= 1e-9);
    CHECK(f.history.back().residual <= 1e-9);
    // Internal and external residuals agree within 10x.
    CHECK(r.total <= 10.0 * std::max(f.history.back().residual, 1e-300));
    CHECK(f.history.back().residual <= 10.0 * std::max(r.total, 1e-300));
    CHECK(f.max_continuity < 1e-10);
    for (std::size_t i = 0; i + 1 < f.grid.nx(); ++i) CHECK(f.V(i, 0) == 0.0);
    REQUIRE(f.history.size() == 2);
    CHECK(f.history[0].eps == 1e-1);
    CHECK(f.history[1].eps == 1e-2);
    for (const auto& s : f.history) CHECK(s.iterations <= NSConfig{}.max_iter);
    const auto csv = ns_history_csv(f);
    CHECK(csv.rfind("eps,iterations,residual\n", 0) == 0);
}

TEST_CASE("a face perturbation raises the residual by at most the operator norm") {
    auto f = small_solve();
    const double base = ns_residual(f).total;
    const double jn = ns_jacobian_norm(f);
    CHECK(jn > 0.0);
    const std::size_t i = f.grid.nx() / 2, j = f.grid.ny() / 3;
    f.U(i, j) += 1e-3;
    const double rise = ns_residual(f).total - base;
    CHECK(rise > 0.0);
    CHECK(rise <= jn * 1e-3);
}

TEST_CASE("shifting the free stream shifts the far-field velocity by the same constant") {
    const auto g = make_grid(25, 33, 4.0, 25.0, 8.0, 2.0);
    const double c = 0.1;
    auto bc = blasius_inflow(g);
    const auto ramp = [&](double y) { return 1.0 - std::exp(-y / 2.0); };
    const auto yc = [&](std::size_t j) { return 0.5 * (g.y[j] + g.y[j + 1]); };
    for (std::size_t j = 0; j < bc.inflow_u.size(); ++j) bc.inflow_u[j] += c * ramp(yc(j));
    bc.top_u.assign(g.nx(), 1.0 + c);
    NSConfig cfg;
    cfg.eps = 1e-2;
    cfg.schedule = {1e-1};
    cfg.picard_switch = 1e-2;
    const auto f = solve_steady_ns(bc, cfg, g);
    const std::size_t top = g.ny() - 2;
    for (std::size_t i = 0; i < g.nx(); ++i) CHECK(std::abs(f.U(i, top) - (1.0 + c)) < 1e-2);
}

TEST_CASE("outflow truncation: X_max and 1.5 X_max agree upstream") {
    NSConfig cfg;
    cfg.eps = 1e-2;
    cfg.schedule = {1e-1};
    cfg.picard_switch = 1e-2;
    std::vector<double> x10, x15, y = stretched_nodes(33, 25.0, 0.1);
    for (int i = 0; i <= 40; ++i) x10.push_back(0.25 * i);
    for (int i = 0; i <= 60; ++i) x15.push_back(0.25 * i);
    const auto g10 = grid_from_nodes(x10, y), g15 = grid_from_nodes(x15, y);
    const auto a = solve_steady_ns(blasius_inflow(g10), cfg, g10);
    const auto b = solve_steady_ns(blasius_inflow(g15), cfg, g15);
    double d = 0.0;
    for (std::size_t i = 0; i <= 20; ++i)
        for (std::size_t j = 0; j + 1 < y.size(); ++j) d = std::max(d, std::abs(a.U(i, j) - b.U(i, j)));
    CHECK(d < 1e-2);
}

TEST_CASE("wall shear follows the prandtl layer within 20% on x in [2, 10] at eps = 4e-3") {
    const double eps = 4e-3;
    const auto g = make_grid(81, 81, 20.0, 4.0 / std::sqrt(eps), 12.0, 4.0);
    NSConfig c;
    c.eps = eps;
    c.schedule = {1e-1, 3e-2, 1e-2};
    c.picard_switch = 1e-2;
    const auto f = solve_steady_ns(blasius_inflow(g), c, g);
    const double yc0 = 0.5 * g.y[1], yc1 = 0.5 * (g.y[1] + g.y[2]);
    const auto w = d1_forward_weights(0.0, yc0, yc1);
    int checked = 0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        if (g.x[i] < 2.0 || g.x[i] > 10.0) continue;
        const double ns = w.c * f.U(i, 0) + w.p * f.U(i, 1);
        const double bl = blasius_sample(profile(), g.x[i], 0.0).u_y;
        CHECK(std::abs(ns / bl - 1.0) <= 0.2);
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("remainder of a bundle built from the field itself is zero") {
    const auto& f = small_solve();
    const auto lg = u_point_grid(f.grid);
    ExpansionComponents c;
    c.grid = lg;
    c.order = 0;
    c.u0p = ns_u_on_points(f);
    for (auto& v : c.u0p.data) v -= 1.0;
    c.v0p = ns_v_on_points(f);
    const auto b = assemble_expansion(c, f.eps);
    const auto r = extract_remainder(f, b);
    CHECK(sup_abs(r.du) < 1e-14);
    CHECK(sup_abs(r.dv) < 1e-14);
    CHECK(*std::max_element(r.sup_du.begin(), r.sup_du.end()) < 1e-14);

    const auto other = assemble_expansion(c, 2.0 * f.eps);
    CHECK_THROWS_AS(extract_remainder(f, other), ShapeError);
    auto wrong = c;
    wrong.grid = f.grid;
    wrong.u0p = Field2D(f.grid);
    wrong.v0p = Field2D(f.grid);
    CHECK_THROWS_AS(extract_remainder(f, assemble_expansion(wrong, f.eps)), ShapeError);
}

TEST_CASE("snapshot holds one block per staggered component") {
    const auto& f = small_solve();
    const auto dir = std::filesystem::temp_directory_path() / "plab_test_ns";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "ns.bin").string();
    write_ns_snapshot(f, path);
    const auto blocks = read_snapshot(path);
    REQUIRE(blocks.size() == 3);
    CHECK(blocks[0].data == f.U.data);
    CHECK(blocks[1].data == f.V.data);
    CHECK(blocks[2].data == f.P.data);
    std::ifstream manifest(path + ".json");
    const std::string text((std::istreambuf_iterator<char>(manifest)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"mac\"") != std::string::npos);
    std::filesystem::remove_all(dir);
}

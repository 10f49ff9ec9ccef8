#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <functional>
#include <random>

#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/norms.hpp"

using namespace plab;

namespace {

const BlasiusProfile& profile() {
    static const BlasiusProfile p = solve_blasius(20.0, 4001, 1e-9);
    return p;
}

// Composite 8-point Gauss-Legendre over [a, b] with m panels.
double gauss(const std::function<double(double)>& f, double a, double b, int m) {
    static const double xg[] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static const double wg[] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                                0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    const double h = (b - a) / m;
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
        const double c = a + (k + 0.5) * h;
        for (int q = 0; q < 8; ++q) s += wg[q] * f(c + 0.5 * h * xg[q]);
    }
    return 0.5 * h * s;
}

double gauss2(const std::function<double(double, double)>& f, double x0, double x1, double y0, double y1, int mx,
              int my) {
    return gauss([&](double x) { return gauss([&](double y) { return f(x, y); }, y0, y1, my); }, x0, x1, mx);
}

// Manufactured pair U = e^{-z}/X, V = X^{-3/2} (1 - e^{-z}(1 - z))/2 with X = 1 + x, z = y/sqrt(X);
// U_x + V_y = 0 and V(x, 0) = 0.
struct Manufactured {
    static double U(double x, double y) {
        const double X = 1 + x, z = y / std::sqrt(X);
        return std::exp(-z) / X;
    }
    static double V(double x, double y) {
        const double X = 1 + x, z = y / std::sqrt(X);
        return std::pow(X, -1.5) * (1 - std::exp(-z) * (1 - z)) / 2;
    }
    static double Uy(double x, double y) {
        const double X = 1 + x, z = y / std::sqrt(X);
        return -std::exp(-z) * std::pow(X, -1.5);
    }
    static double Ux(double x, double y) {
        const double X = 1 + x, z = y / std::sqrt(X);
        return std::exp(-z) / (X * X) * (z / 2 - 1);
    }
    static double Vx(double x, double y) {
        const double X = 1 + x, z = y / std::sqrt(X);
        const double h = 1 - std::exp(-z) * (1 - z), hp = std::exp(-z) * (2 - z);
        return -std::pow(X, -2.5) * (3 * h + z * hp) / 4;
    }
    static double Uyy(double x, double y) {
        const double X = 1 + x, z = y / std::sqrt(X);
        return std::exp(-z) / (X * X);
    }
    static double Uxy(double x, double y) {
        const double X = 1 + x, z = y / std::sqrt(X);
        return std::exp(-z) * std::pow(X, -2.5) * (1.5 - z / 2);
    }
    static double Uxx(double x, double y) {
        const double X = 1 + x, z = y / std::sqrt(X);
        return std::exp(-z) * std::pow(X, -3.0) * (z * z / 4 - 7 * z / 4 + 2);
    }
};

GoodVariables manufactured_gv(const Grid2D& g) {
    GoodVariables gv;
    gv.grid = g;
    gv.psi = gv.q = gv.U = gv.V = gv.ubar = Field2D(g);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) {
            gv.U(i, j) = Manufactured::U(g.x[i], g.y[j]);
            gv.V(i, j) = Manufactured::V(g.x[i], g.y[j]);
        }
    return gv;
}

GoodVariables scaled(GoodVariables gv, double c) {
    for (auto& e : gv.U.data) e *= c;
    for (auto& e : gv.V.data) e *= c;
    return gv;
}

}  // namespace

TEST_CASE("weight and cutoffs") {
    CHECK(weight_g(0.0) * weight_g(0.0) == doctest::Approx(2.0).epsilon(1e-15));
    const double g6 = weight_g(1e6);
    CHECK(std::abs(g6 * g6 - 1.0 - std::pow(1e6 + 1.0, -0.01)) < 1e-14);
    CHECK(g6 * g6 - 1.0 <= 1.1 * std::pow(10.0, -0.06));
    CHECK(cutoff_phi(1, 200.0) == 0.0);
    CHECK(cutoff_phi(1, 210.0) == 0.0);
    CHECK(cutoff_phi(1, 215.0) == 1.0);
    CHECK(cutoff_phi(12, 320.0) == 0.0);
    CHECK(cutoff_phi(12, 325.0) == 1.0);
    double prev = 0.0;
    for (double x = 205.0; x <= 220.0; x += 0.01) {
        const double v = cutoff_phi(1, x);
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
    }
    // C^1: one-sided slopes vanish at both ends of the transition.
    CHECK(cutoff_phi(1, 210.0 + 1e-6) < 1e-11);
    CHECK(1.0 - cutoff_phi(1, 215.0 - 1e-6) < 1e-11);
    CHECK_THROWS_AS(cutoff_phi(0, 1.0), DomainError);
    CHECK_THROWS_AS(cutoff_phi(13, 1.0), DomainError);
}

TEST_CASE("good variables of the background itself") {
    const auto g = make_grid(41, 120, 10.0, 30.0, 4.0, 1.0);
    const auto bg = blasius_background(profile(), g);
    Field2D v(g);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) v(i, j) = blasius_sample(profile(), g.x[i], g.y[j]).v;
    const auto gv = good_variables(bg.u, v, bg);
    const auto rec = reconstruction_error(gv, bg, bg.u, v, 0);
    CHECK(rec.max_u_error <= 1e-13);
    CHECK(rec.max_v_error <= 1e-13);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        CHECK(gv.q(i, 0) == 0.0);
        CHECK(gv.V(i, 0) == 0.0);
        // psi ~ u_y y^2/2 and u_bar ~ u_y y: U(x, 0) = 1/2.
        CHECK(gv.U(i, 0) == doctest::Approx(0.5).epsilon(1e-3));
    }
}

TEST_CASE("good variables of zero fields vanish") {
    const auto g = make_grid(9, 40, 1.0, 20.0, 2.0, 1.0);
    const auto bg = blasius_background(profile(), g);
    const auto gv = good_variables(Field2D(g), Field2D(g), bg);
    for (double e : gv.q.data) CHECK(e == 0.0);
    for (double e : gv.U.data) CHECK(e == 0.0);
    for (double e : gv.V.data) CHECK(e == 0.0);
}

TEST_CASE("reconstruction holds for random compatible fields") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const auto g = make_grid(31, 150, 20.0, 30.0, 8.0, 2.0);
    const auto bg = blasius_background(profile(), g);
    for (int trial = 0; trial < 10; ++trial) {
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
        const auto gv = good_variables(u, v, bg);
        const auto rec = reconstruction_error(gv, bg, u, v, 2);
        CHECK(rec.max_u_error <= 1e-12);
        CHECK(rec.max_v_error <= 1e-12);
    }
}

TEST_CASE("good variable input errors") {
    const auto g = make_grid(9, 40, 1.0, 20.0, 2.0, 1.0);
    auto bg = blasius_background(profile(), g);
    Field2D u(g, 0.0);
    u(3, 0) = 0.1;
    CHECK_THROWS_AS(good_variables(u, Field2D(g), bg), PreconditionError);
    bg.u(2, 5) = 0.0;
    CHECK_THROWS_AS(good_variables(Field2D(g), Field2D(g), bg), DomainError);
    CHECK_THROWS_AS(good_variables(Field2D(3, 3), Field2D(g), bg), ShapeError);
}

TEST_CASE("norms of zero fields are zero") {
    const auto g = make_grid(21, 40, 300.0, 60.0, 2.0, 1.0);
    const auto bg = blasius_background(profile(), g);
    const auto gv = good_variables(Field2D(g), Field2D(g), bg);
    const auto r = evaluate_norms(gv, bg, 1e-3);
    CHECK(r.x0 == 0.0);
    for (const auto& t : r.x0_terms) CHECK(t.value == 0.0);
    CHECK(r.x_half == 0.0);
    CHECK(r.y_half == 0.0);
    CHECK(r.x_one == 0.0);
    CHECK(norm_half(1, gv, bg, 1e-3).x_half == 0.0);
}

TEST_CASE("norms are homogeneous") {
    const auto g = make_grid(161, 60, 260.0, 60.0, 2.0, 1.0);
    const auto bg = blasius_background(profile(), g);
    const auto gv = manufactured_gv(g);
    for (double c : {3.0, -0.25}) {
        const auto a = evaluate_norms(gv, bg, 1e-2);
        const auto b = evaluate_norms(scaled(gv, c), bg, 1e-2);
        CHECK(std::abs(b.x0 - std::abs(c) * a.x0) <= 1e-12 * std::abs(c) * a.x0);
        CHECK(std::abs(b.x_half - std::abs(c) * a.x_half) <= 1e-12 * std::abs(c) * a.x_half);
        CHECK(std::abs(b.y_half - std::abs(c) * a.y_half) <= 1e-12 * std::abs(c) * a.y_half);
        CHECK(std::abs(b.x_one - std::abs(c) * a.x_one) <= 1e-12 * std::abs(c) * a.x_one);
        for (std::size_t k = 0; k < a.x0_terms.size(); ++k) CHECK(b.x0_terms[k].value >= 0.0);
    }
}

TEST_CASE("X0 matches a quadrature oracle for a manufactured field") {
    const double X = 10.0, Y = 12.0, eps = 1e-2;
    const auto g = make_grid(201, 301, X, Y, 1.0, 1.0);
    const auto& p = profile();
    const auto bg = blasius_background(p, g);
    const auto r = norm_X0(manufactured_gv(g), bg, eps);
    REQUIRE(r.x0_terms.size() == 8);
    using M = Manufactured;
    auto g2 = [](double x) { return 1.0 + std::pow(1.0 + x, -0.01); };
    auto B = [&](double x, double y) { return blasius_sample(p, x, y); };
    std::vector<double> oracle;
    oracle.push_back(gauss2([&](double x, double y) { return B(x, y).u * std::pow(M::Uy(x, y), 2) * g2(x); }, 0, X, 0, Y, 20, 30));
    oracle.push_back(gauss2([&](double x, double y) { return eps * B(x, y).u * std::pow(M::Ux(x, y), 2) * g2(x); }, 0, X, 0, Y, 20, 30));
    oracle.push_back(gauss2([&](double x, double y) { return eps * eps * B(x, y).u * std::pow(M::Vx(x, y), 2) * g2(x); }, 0, X, 0, Y, 20, 30));
    oracle.push_back(gauss2([&](double x, double y) { return -B(x, y).u_yy * std::pow(M::U(x, y), 2) * g2(x); }, 0, X, 0, Y, 20, 30));
    oracle.push_back(gauss2([&](double x, double y) { return -eps * B(x, y).u_yy * std::pow(M::V(x, y), 2) * g2(x); }, 0, X, 0, Y, 20, 30));
    oracle.push_back(gauss([&](double x) { return B(x, 0).u_y * std::pow(M::U(x, 0), 2) * g2(x); }, 0, X, 20));
    oracle.push_back(gauss2([&](double x, double y) { return std::pow(B(x, y).u * M::U(x, y), 2) * std::pow(1 + x, -1.01); }, 0, X, 0, Y, 20, 30));
    oracle.push_back(gauss2([&](double x, double y) { return eps * std::pow(B(x, y).u * M::V(x, y), 2) * std::pow(1 + x, -2.01); }, 0, X, 0, Y, 20, 30));
    double total = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
        total += oracle[k];
        CHECK(std::isfinite(r.x0_terms[k].value));
        CHECK(r.x0_terms[k].value == doctest::Approx(oracle[k]).epsilon(5e-3));
    }
    CHECK(r.x0 == doctest::Approx(std::sqrt(total)).epsilon(1e-3));
}

TEST_CASE("half-level norms match a quadrature oracle past the cutoff") {
    const double X = 260.0, Y = 80.0, eps = 1e-2;
    const auto g = make_grid(1041, 321, X, Y, 1.0, 1.0);
    const auto& p = profile();
    const auto bg = blasius_background(p, g);
    const auto h = norm_half(0, manufactured_gv(g), bg, eps);
    using M = Manufactured;
    auto w = [](double x) { return std::sqrt(x) * cutoff_phi(1, x); };
    auto B = [&](double x, double y) { return blasius_sample(p, x, y); };
    auto n2 = [&](const std::function<double(double, double)>& f) {
        return std::sqrt(gauss2([&](double x, double y) { return std::pow(f(x, y) * w(x), 2); }, 210, X, 0, Y, 50, 40));
    };
    const double xh = n2([&](double x, double y) { return B(x, y).u * M::Ux(x, y); }) +
                      std::sqrt(eps) * n2([&](double x, double y) { return B(x, y).u * M::Vx(x, y); });
    const double wall = std::sqrt(gauss([&](double x) { return B(x, 0).u_y * std::pow(M::Uy(x, 0) * w(x), 2); }, 210, X, 50));
    const double yh = n2([&](double x, double y) { return std::sqrt(B(x, y).u) * M::Uyy(x, y); }) +
                      n2([&](double x, double y) { return std::sqrt(B(x, y).u * eps) * M::Uxy(x, y); }) +
                      n2([&](double x, double y) { return std::sqrt(B(x, y).u) * eps * M::Uxx(x, y); }) + wall;
    CHECK(h.x_half == doctest::Approx(xh).epsilon(1e-3));
    CHECK(h.y_half == doctest::Approx(yh).epsilon(1e-3));
    CHECK(h.noise_floor > 0.0);
    CHECK(h.noise_floor < 1e-6 * (h.x_half + h.y_half));
}

TEST_CASE("cutoff locality: fields supported before the cutoff have zero half norms") {
    const auto g = make_grid(301, 60, 300.0, 60.0, 2.0, 1.0);
    const auto bg = blasius_background(profile(), g);
    auto gv = manufactured_gv(g);
    for (std::size_t i = 0; i < g.nx(); ++i)
        if (g.x[i] > 200.0)
            for (std::size_t j = 0; j < g.ny(); ++j) gv.U(i, j) = gv.V(i, j) = 0.0;
    const auto h0 = norm_half(0, gv, bg, 1e-3);
    CHECK(h0.x_half == 0.0);
    CHECK(h0.y_half == 0.0);
    const auto h1 = norm_half(1, gv, bg, 1e-3);
    CHECK(h1.x_half == 0.0);
    CHECK(h1.y_half == 0.0);
    NormReport r;
    norm_X1(gv, bg, 1e-3, r);
    CHECK(r.x_one == 0.0);
    CHECK_THROWS_AS(norm_half(2, gv, bg, 1e-3), DomainError);
}

TEST_CASE("clipped concavity measure") {
    const auto g = make_grid(41, 200, 50.0, 40.0, 4.0, 1.0);
    const auto bg = blasius_background(profile(), g);
    const auto gv = manufactured_gv(g);
    CHECK(norm_X0(gv, bg, 1e-3).clipped_measure == 0.0);
    Field2D convex(g);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) convex(i, j) = g.y[j] * g.y[j] / (1 + g.y[j] * g.y[j]) + 0.1 * g.y[j];
    auto cb = background_from_field(convex, g);
    const auto r = norm_X0(gv, cb, 1e-3);
    CHECK(r.clipped_measure > 0.0);
    for (const auto& t : r.x0_terms) CHECK(t.value >= 0.0);
}

TEST_CASE("norm report json") {
    const auto g = make_grid(21, 40, 10.0, 20.0, 2.0, 1.0);
    const auto bg = blasius_background(profile(), g);
    const auto r = evaluate_norms(manufactured_gv(g), bg, 1e-3);
    const auto s = norm_report_json(r);
    const auto j = nlohmann::json::parse(s);
    CHECK(j.contains("X0"));
    CHECK(j.contains("X0.wall_uy_U_g"));
    CHECK(j.contains("X1.ubar_Uxy"));
    CHECK(j["X0"].get<double>() == r.x0);  // 17 digits round-trip
    CHECK(j.size() == 2 + 8 + 3 + 6 + 2 + 4);
}

TEST_CASE("sharp Hardy inequality") {
    std::vector<double> x;
    for (int k = 0; k <= 20000; ++k) x.push_back(k * 2e-3);
    std::vector<double> zero(x.size(), 0.0), one(x.size(), 1.0), f(x.size());
    CHECK(hardy_precise_check(zero, one, x) == 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) f[k] = x[k] * std::exp(-x[k]);
    const double m = hardy_precise_check(f, one, x);
    CHECK(m >= 0.0);
    // RHS - LHS = (1/1.01) int <x>^{-1.01} u^2 (f_x - f/<x>)^2 after integrating by parts.
    const double oracle = gauss([](double t) {
        const double fx = (1 - t) * std::exp(-t), fv = t * std::exp(-t);
        return std::pow(1 + t, -1.01) * std::pow(fx - fv / (1 + t), 2) / 1.01;
    }, 0.0, 40.0, 400);
    CHECK(m == doctest::Approx(oracle).epsilon(1e-5));
    f[0] = 1e-3;
    CHECK_THROWS_AS(hardy_precise_check(f, one, x), PreconditionError);
}

TEST_CASE("sharp Hardy inequality on random bumps with a Blasius trace") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<double> x;
    for (int k = 0; k <= 8000; ++k) x.push_back(k * 5e-3);
    std::vector<double> ub(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) ub[k] = blasius_sample(profile(), x[k], 1.0).u;
    int violations = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> f(x.size(), 0.0);
        const double a = 1.0 + 10.0 * d(rng), w = (0.1 + 0.85 * d(rng)) * a, c = 2 * d(rng) - 1;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double t = (x[k] - a) / w;
            if (std::abs(t) < 1.0) f[k] = c * std::exp(-1.0 / (1.0 - t * t));
        }
        if (hardy_precise_check(f, ub, x) < -1e-8) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("weighted Hardy ratio is stable under refinement") {
    const auto& p = profile();
    CHECK(hardy_weighted_check(Field2D(9, 40), 0.1, Field2D(9, 40, 1.0), make_grid(9, 40, 1, 1, 1, 1)).max_ratio == 0.0);
    std::vector<double> ratios;
    for (int lev = 0; lev < 3; ++lev) {
        const auto g = make_grid(11, 100 << lev, 10.0, 40.0, 4.0, 1.0);
        Field2D f(g), up(g);
        for (std::size_t i = 0; i < g.nx(); ++i)
            for (std::size_t j = 0; j < g.ny(); ++j) {
                f(i, j) = std::exp(-similarity_z(g.x[i], g.y[j]));
                up(i, j) = blasius_sample(p, g.x[i], g.y[j]).u;
            }
        const auto h = hardy_weighted_check(f, 0.1, up, g);
        CHECK(std::isfinite(h.max_ratio));
        ratios.push_back(h.max_ratio);
    }
    CHECK(std::abs(ratios[1] / ratios[0] - 1.0) <= 0.1);
    CHECK(std::abs(ratios[2] / ratios[1] - 1.0) <= 0.1);
}

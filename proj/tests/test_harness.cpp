#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/fit.hpp"
#include "prandtl_lab/harness.hpp"

using namespace plab;
namespace fs = std::filesystem;

namespace {

std::vector<double> log_nodes(double lo, double hi, int n) {
    std::vector<double> x(n);
    for (int k = 0; k < n; ++k) x[k] = lo * std::pow(hi / lo, k / (n - 1.0));
    return x;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const char* name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST_CASE("fit of an exact power law") {
    const auto x = log_nodes(1.0, 1000.0, 40);
    std::vector<double> v;
    for (double t : x) v.push_back(std::pow(t, -0.5));
    const auto f = fit_power_law(x, v, {1.0, 1000.0});
    CHECK(f.exponent == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.samples == 40);
}

TEST_CASE("fit of a rippled power law stays within 0.02") {
    const auto x = log_nodes(1.0, 1000.0, 200);
    std::vector<double> v;
    for (double t : x) v.push_back(3.0 * std::pow(t, -0.25) * (1.0 + 0.01 * std::sin(t)));
    const auto f = fit_power_law(x, v, {1.0, 1000.0});
    CHECK(std::abs(f.exponent + 0.25) <= 0.02);
    CHECK(f.r_squared >= 0.0);
    CHECK(f.r_squared <= 1.0);
}

TEST_CASE("fit preconditions") {
    CHECK_THROWS_AS(fit_power_law({1.0, 2.0, 3.0}, {1.0, 0.5, 0.3}, {0.5, 10.0}), PreconditionError);
    auto x = log_nodes(1.0, 10.0, 10);
    std::vector<double> v(10, 1.0);
    v[3] = 0.0;
    CHECK_THROWS_AS(fit_power_law(x, v, {1.0, 10.0}), DomainError);
    v[3] = -1.0;
    CHECK_THROWS_AS(fit_power_law(x, v, {1.0, 10.0}), DomainError);
}

TEST_CASE("config json round trip and rejection") {
    const auto a = inviscid_defaults();
    const auto b = config_from_json(config_to_json(a), attractor_defaults());
    CHECK(config_to_json(b) == config_to_json(a));
    const auto c = config_from_json(R"({"nx": 61, "eps": [0.004], "window": [2, 9]})", a);
    CHECK(c.nx == 61);
    CHECK(c.eps == std::vector<double>{4e-3});
    CHECK(c.window.lo == 2.0);
    CHECK(c.ny == a.ny);
    CHECK_THROWS_AS(config_from_json(R"({"nxx": 61})", a), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"nx": "many"})", a), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"window": [1]})", a), ConfigError);
    CHECK_THROWS_AS(config_from_json("[1, 2]", a), ConfigError);
    CHECK_THROWS_AS(config_from_json("{", a), ConfigError);
}

TEST_CASE("config validation") {
    auto c = inviscid_defaults();
    CHECK_NOTHROW(validate(c));
    c.eps = {1e-3, 4e-3};
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.eps = {0.0};
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = attractor_defaults();
    c.delta = 1.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.delta = 0.1;
    c.window = {30.0, 20.0};
    CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("attractor experiment at the default amplitude") {
    const auto r = run_attractor_experiment(attractor_defaults());
    REQUIRE(r.fit);
    CHECK(r.fit->exponent <= -0.35);
    CHECK(r.fit->r_squared >= 0.95);
    CHECK(-0.25 - r.fit->exponent >= 0.05);
    CHECK(r.small_data);
    CHECK(r.pass);
    CHECK(r.checks.size() == 3);
}

TEST_CASE("attractor experiment without perturbation skips the fit") {
    auto c = attractor_defaults();
    c.delta = 0.0;
    const auto r = run_attractor_experiment(c);
    CHECK_FALSE(r.fit);
    CHECK(r.status.rfind("skipped", 0) == 0);
    // The error curve is the discretization floor.
    CHECK(*std::max_element(r.error.begin(), r.error.end()) < 1e-3);
}

TEST_CASE("attractor experiment flags a large amplitude") {
    auto c = attractor_defaults();
    c.delta = 0.5;
    const auto r = run_attractor_experiment(c);
    CHECK_FALSE(r.small_data);
    CHECK(r.status.find("outside the small-data hypothesis") != std::string::npos);
}

TEST_CASE("inviscid experiment with a single eps skips the eps fit") {
    auto c = inviscid_defaults();
    c.nx = 61;
    c.ny = 60;
    c.eps = {4e-3};
    const auto r = run_inviscid_limit_experiment(c);
    REQUIRE(r.runs.size() == 1);
    CHECK_FALSE(r.eps_fit_u);
    CHECK(r.eps_status.rfind("skipped", 0) == 0);
    REQUIRE(r.x_fit);
    CHECK(r.x_fit_eps == 4e-3);
    CHECK(r.runs[0].ns_residual <= 1e-9);
    CHECK(r.runs[0].residual_order1 > 0.0);
}

TEST_CASE("empty report is valid json with empty arrays") {
    const auto j = nlohmann::json::parse(report_json({}));
    CHECK(j["attractor"].is_array());
    CHECK(j["attractor"].empty());
    CHECK(j["inviscid"].empty());
}

TEST_CASE("report schema, csv curves, and byte determinism") {
    ReportSet rs;
    rs.attractor.push_back(run_attractor_experiment(attractor_defaults()));
    const auto j = nlohmann::json::parse(report_json(rs));
    const auto& a = j["attractor"][0];
    for (const char* k : {"experiment", "exponent", "threshold", "pass"}) CHECK(a.contains(k));
    CHECK(a["threshold"].get<double>() == -0.35);
    CHECK(a["pass"].get<bool>());

    const auto d1 = scratch("plab_report_a"), d2 = scratch("plab_report_b");
    write_report(rs, d1.string());
    write_report(rs, d2.string());
    CHECK(slurp(d1 / "summary.json") == slurp(d2 / "summary.json"));
    const auto csv = slurp(d1 / "attractor_0.csv");
    CHECK(csv.rfind("x,sup_error\n", 0) == 0);
    CHECK(csv == slurp(d2 / "attractor_0.csv"));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("unwritable report path is an io error") {
    const auto d = scratch("plab_report_blocked");
    fs::create_directories(d);
    std::ofstream(d / "file") << "x";
    CHECK_THROWS_AS(write_report({}, (d / "file" / "sub").string()), IoError);
    fs::remove_all(d);
}

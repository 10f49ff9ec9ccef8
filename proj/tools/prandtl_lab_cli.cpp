// prandtl-lab: command-line front end. Every subcommand writes CSV and JSON into --out and exits 0
// iff all of its asserted thresholds pass.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "prandtl_lab/blasius.hpp"
#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/expansion.hpp"
#include "prandtl_lab/harness.hpp"
#include "prandtl_lab/io.hpp"
#include "prandtl_lab/norms.hpp"
#include "prandtl_lab/ns_solver.hpp"
#include "prandtl_lab/prandtl.hpp"

using namespace plab;
using Json = nlohmann::ordered_json;

namespace {

struct Common {
    std::string config, out = "plab_out", grid, eps;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON file overriding the experiment configuration");
    app->add_option("--out", c.out, "output directory")->capture_default_str();
    app->add_option("--grid", c.grid, "nx,ny,Xmax,Ymax");
    app->add_option("--eps", c.eps, "comma-separated eps list");
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw ConfigError("cannot read number '" + item + "' in '" + s + "'");
        v.push_back(d);
    }
    return v;
}

// Config precedence: defaults, then --config, then --grid and --eps.
ExperimentConfig resolve(const Common& c, ExperimentConfig base) {
    if (!c.config.empty()) {
        std::ifstream in(c.config);
        if (!in) throw IoError("cannot read config " + c.config);
        std::stringstream ss;
        ss << in.rdbuf();
        base = config_from_json(ss.str(), base);
    }
    if (!c.grid.empty()) {
        const auto g = parse_list(c.grid);
        if (g.size() != 4) throw ConfigError("--grid wants nx,ny,Xmax,Ymax");
        base.nx = static_cast<int>(g[0]);
        base.ny = static_cast<int>(g[1]);
        base.x_max = g[2];
        base.y_max = g[3];
    }
    if (!c.eps.empty()) base.eps = parse_list(c.eps);
    base.out_dir.clear();
    return base;
}

void prepare(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

std::string eps_tag(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", eps);
    return buf;
}

struct Checks {
    Json list = Json::array();
    bool pass = true;
    void add(const std::string& name, double value, double lo, double hi) {
        const bool ok = std::isfinite(value) && value >= lo && value <= hi;
        list.push_back({{"name", name},
                        {"value", value},
                        {"lo", std::isfinite(lo) ? Json(lo) : Json(nullptr)},
                        {"hi", std::isfinite(hi) ? Json(hi) : Json(nullptr)},
                        {"pass", ok}});
        pass = pass && ok;
        std::printf("%-40s %-4s %.6g\n", name.c_str(), ok ? "PASS" : "FAIL", value);
    }
};

constexpr double inf = std::numeric_limits<double>::infinity();

int finish(const std::string& dir, Json summary, const Checks& checks) {
    summary["checks"] = checks.list;
    summary["pass"] = checks.pass;
    write_text(dir + "/summary.json", summary.dump(2) + "\n");
    return checks.pass ? 0 : 1;
}

std::vector<double> datum_of(const BlasiusProfile& p, const std::vector<double>& y) {
    std::vector<double> d(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) d[j] = blasius_sample(p, 0.0, y[j]).u;
    return d;
}

const BlasiusProfile& reference() {
    static const BlasiusProfile p = solve_blasius(20.0, 4001, 1e-12);
    return p;
}

// Layer grid and first-order bundle pieces for one eps.
struct Layer {
    Grid2D ns_grid, grid;
    ExpansionComponents comp;
};

Layer layer_for(const ExperimentConfig& c, double eps) {
    Layer l;
    l.ns_grid = inviscid_grid(c, eps);
    l.grid = u_point_grid(l.ns_grid);
    l.comp = first_order_components(datum_of(reference(), l.grid.y), l.grid, eps);
    return l;
}

int cmd_blasius(const Common& c, double z_max, int nz, double tol) {
    prepare(c.out);
    const auto p = solve_blasius(z_max, nz, tol);
    write_blasius_csv(p, c.out + "/blasius.csv");
    const double oracle = criteria::oracle_wall_slope(z_max, 80000);
    double fppp = -inf;
    for (std::size_t k = 0; k < p.z.size(); ++k) fppp = std::max(fppp, -p.f[k] * p.fpp[k]);
    Checks ch;
    ch.add("far_field_slope_error", std::abs(p.fp.back() - 1.0), 0.0, 1e-8);
    ch.add("wall_slope_vs_oracle", std::abs(p.s - oracle), 0.0, 1e-6);
    ch.add("max_fppp", fppp, -inf, 1e-10);
    Json s{{"command", "blasius"}, {"z_max", z_max}, {"nz", nz}, {"s", p.s}, {"oracle_s", oracle},
           {"integration_error", p.integration_error}, {"ode_residual", blasius_ode_residual(p)}};
    return finish(c.out, s, ch);
}

int cmd_march(const Common& c, double dpdx) {
    auto cfg = attractor_defaults();
    cfg.nx = 401;
    cfg.ny = 400;
    cfg.x_max = 100.0;
    // Lower tops cut the layer off and show up as momentum drift.
    cfg.y_max = default_y_max(cfg.x_max);
    cfg.delta = 0.0;
    cfg = resolve(c, cfg);
    validate(cfg);
    prepare(c.out);
    const auto p = reference().with_origin(cfg.x_origin);
    const Grid2D g = grid_from_nodes(stretched_nodes(cfg.nx, cfg.x_max, cfg.x_first_step),
                                     stretched_nodes(cfg.ny, cfg.y_max, cfg.y_first_step));
    auto datum = datum_of(p, g.y);
    const auto bump = bump_perturbation(g.y, cfg.delta, cfg.bump_center, cfg.bump_width, cfg.bump_cutoff);
    for (std::size_t j = 0; j < datum.size(); ++j) datum[j] += bump[j];
    MarchConfig mc;
    mc.dpdx = dpdx;
    mc.check_monotone = false;
    const auto run = march_prandtl(datum, g, mc);
    write_text(c.out + "/march.csv", run_summary_csv(run, &p));
    const auto drift = momentum_integral_drift(run);
    const auto sep = detect_separation(run);
    Checks ch;
    ch.add("momentum_drift", drift.max_drift, 0.0, 1e-6);
    ch.add("monotonicity_violations", run.monotonicity_violations, 0.0, 0.0);
    ch.add("overshoot", run.max_overshoot, 0.0, 1e-12);
    Json s{{"command", "prandtl-march"}, {"config", Json::parse(config_to_json(cfg))}, {"dpdx", dpdx},
           {"states", run.states.size()}, {"halvings", run.halvings}, {"newton_iterations", run.newton_iterations},
           {"separated", run.separated}, {"separation_x", sep ? Json(*sep) : Json(nullptr)},
           {"min_u", run.min_value}, {"max_continuity_defect", run.max_continuity_defect}};
    return finish(c.out, s, ch);
}

int cmd_twisted(const Common& c, int npsi, double other_origin, const std::string& form) {
    auto cfg = attractor_defaults();
    cfg.nx = 1001;
    cfg.ny = 200;
    cfg.x_max = 1.0;
    cfg.y_max = 30.0;
    cfg = resolve(c, cfg);
    validate(cfg);
    if (form != "exact" && form != "literal") throw ConfigError("--form is exact or literal");
    prepare(c.out);
    const auto& p = reference();
    const Grid2D g = make_grid(cfg.nx, cfg.ny, cfg.x_max, cfg.y_max, 8.0, 1.0);
    const auto td = solve_twisted_difference(blasius_run(p, g),
                                             march_prandtl(datum_of(p.with_origin(other_origin), g.y), g, {}),
                                             {npsi, form == "exact" ? DampingForm::exact : DampingForm::literal});
    const auto au = damping_audit(td);
    std::ostringstream os;
    os << "x,rate,diffusion,concavity,damping,residual,relative\n";
    char buf[256];
    for (const auto& s : au.steps) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.x, s.rate, s.diffusion,
                      s.concavity, s.damping, s.residual, s.relative);
        os << buf;
    }
    write_text(c.out + "/damping.csv", os.str());
    Checks ch;
    ch.add("max_relative_residual", au.max_relative, 0.0, 1e-3);
    ch.add("norm_increases", au.norm_increases + au.direct_norm_increases, 0.0, 0.0);
    Json s{{"command", "twisted-diff"}, {"grid", {cfg.nx, cfg.ny, cfg.x_max, cfg.y_max}}, {"npsi", npsi},
           {"other_origin", other_origin}, {"form", form}, {"max_discrepancy", td.max_discrepancy},
           {"phi_scale", td.phi_scale}, {"negative_a_nodes", td.negative_a_nodes},
           {"a_nonneg", au.a_nonneg}, {"concavity_nonneg", au.concavity_nonneg}};
    return finish(c.out, s, ch);
}

int cmd_expansion(const Common& c) {
    const auto cfg = resolve(c, inviscid_defaults());
    validate(cfg);
    prepare(c.out);
    Checks ch;
    Json runs = Json::array();
    for (double eps : cfg.eps) {
        auto l = layer_for(cfg, eps);
        const auto b1 = assemble_expansion(l.comp, eps);
        l.comp.order = 0;
        const auto b0 = assemble_expansion(l.comp, eps);
        write_bundle(b1, c.out + "/bundle_eps_" + eps_tag(eps) + ".bin");
        ch.add("residual_ratio_eps_" + eps_tag(eps), b1.residual.weighted_l2 / b0.residual.weighted_l2, 0.0,
               1.0 - 1e-12);
        runs.push_back({{"eps", eps}, {"order0_weighted_l2", b0.residual.weighted_l2},
                        {"order1_weighted_l2", b1.residual.weighted_l2},
                        {"order1_weighted_sup", b1.residual.weighted_sup}});
    }
    Json s{{"command", "expansion"}, {"config", Json::parse(config_to_json(cfg))}, {"runs", runs}};
    return finish(c.out, s, ch);
}

int cmd_ns(const Common& c) {
    const auto cfg = resolve(c, inviscid_defaults());
    validate(cfg);
    prepare(c.out);
    Checks ch;
    Json runs = Json::array();
    for (double eps : cfg.eps) {
        const auto l = layer_for(cfg, eps);
        const auto b = assemble_expansion(l.comp, eps);
        NSConfig nc;
        nc.eps = eps;
        for (double s : cfg.schedule)
            if (s > eps) nc.schedule.push_back(s);
        nc.picard_switch = 1e-2;
        const auto f = solve_steady_ns(boundary_from_bundle(b, l.ns_grid), nc, l.ns_grid);
        const std::string stem = c.out + "/ns_eps_" + eps_tag(eps);
        write_ns_snapshot(f, stem + ".bin");
        write_text(stem + "_history.csv", ns_history_csv(f));
        const auto rem = extract_remainder(f, b);
        std::ostringstream os;
        os << "x,sup_du,sup_dv\n";
        char buf[128];
        for (std::size_t i = 0; i < rem.x.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", rem.x[i], rem.sup_du[i], rem.sup_dv[i]);
            os << buf;
        }
        write_text(stem + "_remainder.csv", os.str());
        const auto r = ns_residual(f);
        ch.add("ns_residual_eps_" + eps_tag(eps), r.total, 0.0, nc.tol);
        runs.push_back({{"eps", eps}, {"residual", r.total}, {"max_continuity", f.max_continuity},
                        {"stages", f.history.size()}});
    }
    Json s{{"command", "ns-solve"}, {"config", Json::parse(config_to_json(cfg))}, {"runs", runs}};
    return finish(c.out, s, ch);
}

int cmd_rates(const Common& c, const std::string& which, const std::string& ids) {
    if (!ids.empty()) {
        std::set<int> sel;
        for (double d : parse_list(ids)) sel.insert(static_cast<int>(d));
        bool ok = true;
        criteria::run(sel, [&](const criteria::Outcome& o) {
            std::printf("%s\n", criteria::format_line(o).c_str());
            std::fflush(stdout);
            ok = ok && o.pass;
        });
        return ok ? 0 : 1;
    }
    if (which != "attractor" && which != "inviscid" && which != "all")
        throw ConfigError("--experiment is attractor, inviscid or all");
    ReportSet rs;
    bool ok = true;
    if (which != "inviscid") {
        rs.attractor.push_back(run_attractor_experiment(resolve(c, attractor_defaults())));
        ok = ok && rs.attractor.back().pass;
        for (const auto& t : rs.attractor.back().checks)
            std::printf("attractor %-36s %-4s %.6g\n", t.name.c_str(), t.pass ? "PASS" : "FAIL", t.value);
    }
    if (which != "attractor") {
        rs.inviscid.push_back(run_inviscid_limit_experiment(resolve(c, inviscid_defaults())));
        ok = ok && rs.inviscid.back().pass;
        for (const auto& t : rs.inviscid.back().checks)
            std::printf("inviscid  %-36s %-4s %.6g\n", t.name.c_str(), t.pass ? "PASS" : "FAIL", t.value);
    }
    write_report(rs, c.out);
    return ok ? 0 : 1;
}

int cmd_norms(const Common& c) {
    auto cfg = attractor_defaults();
    cfg.nx = 301;
    cfg.ny = 300;
    cfg.x_max = 300.0;
    cfg.y_max = 60.0;
    cfg.eps = {1e-3};
    cfg = resolve(c, cfg);
    validate(cfg);
    prepare(c.out);
    // Perturbation of the marched bump datum about the Blasius background.
    const auto p = reference().with_origin(cfg.x_origin);
    const Grid2D g = make_grid(cfg.nx, cfg.ny, cfg.x_max, cfg.y_max, 4.0, 1.0);
    auto datum = datum_of(p, g.y);
    const auto bump = bump_perturbation(g.y, cfg.delta, cfg.bump_center, cfg.bump_width, cfg.bump_cutoff);
    for (std::size_t j = 0; j < datum.size(); ++j) datum[j] += bump[j];
    MarchConfig mc;
    mc.check_monotone = false;
    const auto run = march_prandtl(datum, g, mc);
    const auto bg = blasius_background(p, g);
    Field2D du = run.u_field(), dv = run.v_field();
    const Field2D vb = blasius_v_field(p, g);
    for (std::size_t k = 0; k < du.data.size(); ++k) {
        du.data[k] -= bg.u.data[k];
        dv.data[k] -= vb.data[k];
    }
    const auto gv = good_variables(du, dv, bg);
    Checks ch;
    Json terms = Json::array();
    for (double eps : cfg.eps) {
        const auto r = evaluate_norms(gv, bg, eps);
        write_text(c.out + "/norms_eps_" + eps_tag(eps) + ".json", norm_report_json(r) + "\n");
        ch.add("clipped_measure_eps_" + eps_tag(eps), r.clipped_measure, 0.0, 0.0);
        terms.push_back({{"eps", eps}, {"X0", r.x0}, {"X_half", r.x_half}, {"Y_half", r.y_half}, {"X1", r.x_one}});
    }
    const auto rec = reconstruction_error(gv, bg, du, dv, 2);
    ch.add("reconstruction_error", std::max(rec.max_u_error, rec.max_v_error), 0.0, 1e-12);
    for (const auto& o : criteria::run({6, 7, 12})) ch.add("criterion_" + std::to_string(o.id), o.pass ? 1 : 0, 1, 1);
    Json s{{"command", "audit-norms"}, {"config", Json::parse(config_to_json(cfg))}, {"norms", terms}};
    return finish(c.out, s, ch);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prandtl-lab: steady boundary layers, their expansions and Navier-Stokes checks"};
    app.require_subcommand(1);

    Common cb, cm, ct, ce, cn, cr, ca;
    double z_max = 20.0, tol = 1e-10, dpdx = 0.0, other_origin = 2.0;
    int nz = 4001, npsi = 400;
    std::string form = "exact", which = "all", ids;

    auto* sb = app.add_subcommand("blasius", "solve the Blasius profile and check it against the oracle");
    add_common(sb, cb);
    sb->add_option("--zmax", z_max)->capture_default_str();
    sb->add_option("--nz", nz)->capture_default_str();
    sb->add_option("--tol", tol)->capture_default_str();

    auto* sm = app.add_subcommand("prandtl-march", "march a (perturbed) Blasius datum");
    add_common(sm, cm);
    sm->add_option("--dpdx", dpdx, "constant outer pressure gradient")->capture_default_str();

    auto* st = app.add_subcommand("twisted-diff", "von Mises difference against a shifted profile and its damping audit");
    add_common(st, ct);
    st->add_option("--npsi", npsi)->capture_default_str();
    st->add_option("--other-origin", other_origin)->capture_default_str();
    st->add_option("--form", form, "exact or literal")->capture_default_str();

    auto* se = app.add_subcommand("expansion", "first-order bundle and its forcing residual per eps");
    add_common(se, ce);
    auto* sn = app.add_subcommand("ns-solve", "Navier-Stokes solve with bundle data per eps");
    add_common(sn, cn);

    auto* sr = app.add_subcommand("verify-rates", "decay-rate experiments, or acceptance criteria by id");
    add_common(sr, cr);
    sr->add_option("--experiment", which, "attractor, inviscid or all")->capture_default_str();
    sr->add_option("--criteria", ids, "comma-separated criterion ids 1-12");

    auto* sa = app.add_subcommand("audit-norms", "energy norms of a marched perturbation and the norm checks");
    add_common(sa, ca);

    CLI11_PARSE(app, argc, argv);
    try {
        if (sb->parsed()) return cmd_blasius(cb, z_max, nz, tol);
        if (sm->parsed()) return cmd_march(cm, dpdx);
        if (st->parsed()) return cmd_twisted(ct, npsi, other_origin, form);
        if (se->parsed()) return cmd_expansion(ce);
        if (sn->parsed()) return cmd_ns(cn);
        if (sr->parsed()) return cmd_rates(cr, which, ids);
        if (sa->parsed()) return cmd_norms(ca);
    } catch (const Error& e) {
        std::fprintf(stderr, "prandtl-lab: %s\n", e.what());
        return 2;
    }
    return 2;
}

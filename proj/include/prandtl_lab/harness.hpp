// End-to-end experiments and their reports.
//
// The attractor experiment marches a bump-perturbed Blasius datum and fits the decay of
// sup_y |u - u*|. The inviscid-limit experiment solves Navier-Stokes with the first-order bundle
// as data for each eps and fits sup_y |U - (1 + u0_p)| and sqrt(eps) sup_y |V - (v0_p + v1_E)|
// in eps at a fixed station and in x at a fixed eps.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prandtl_lab/fit.hpp"
#include "prandtl_lab/ns_solver.hpp"

namespace plab {

struct ExperimentConfig {
    std::string id;
    // Grid. Attractor: stretched_nodes in x and y with the given first steps. Inviscid limit:
    // make_grid(nx, ny, x_max, y_max / sqrt(eps), wall_ratio, x_ramp), so y_max is the height in Y;
    // y_first_step > 0 replaces wall_ratio by the ratio that gives that first y step at every eps.
    int nx = 0, ny = 0;
    double x_max = 0.0, y_max = 0.0;
    double x_first_step = 0.0, y_first_step = 0.0;
    double wall_ratio = 1.0, x_ramp = 1.0;

    // Attractor.
    double delta = 0.0;  // bump amplitude
    double bump_center = 1.5, bump_width = 0.6, bump_cutoff = 0.5;
    double x_origin = 1.0;  // Blasius family compared against

    // Inviscid limit.
    std::vector<double> eps;
    std::vector<double> schedule;  // continuation stages above the sweep
    double x_station = 10.0;
    double decay_eps = 1e-3;  // eps of the x-decay fit

    FitWindow window{20.0, 2000.0};
    std::string out_dir;  // empty: no files
};

ExperimentConfig attractor_defaults();
ExperimentConfig inviscid_defaults();
// Throws ConfigError on an invalid combination.
void validate(const ExperimentConfig& c);
// Overrides the fields present in a JSON object (same names as the struct; window as [lo, hi]).
ExperimentConfig config_from_json(const std::string& text, ExperimentConfig base);
std::string config_to_json(const ExperimentConfig& c);

struct Threshold {
    std::string name;
    double value = 0.0;
    double lo = 0.0, hi = 0.0;  // pass iff lo <= value <= hi
    bool pass = false;
};

struct AttractorReport {
    ExperimentConfig config;
    std::vector<double> x, error;  // sup_y |u - u*| per state
    std::optional<DecayFit> fit;
    std::string status;       // "fitted" or the reason the fit was skipped
    bool small_data = true;   // false when delta is outside the small-data hypothesis
    std::vector<Threshold> checks;  // exponent, r_squared, margin over the stated rate
    bool pass = false;
};

// Threshold slack: the exponent must be <= -0.35 (asymptotic -1/2), r^2 >= 0.95, and the
// exponent must beat -1/4 by 0.05.
AttractorReport run_attractor_experiment(const ExperimentConfig& config);

// Navier-Stokes grid of the inviscid-limit experiment at one eps (faces; the layer grid of the bundle
// is u_point_grid of it).
Grid2D inviscid_grid(const ExperimentConfig& config, double eps);

struct InviscidRun {
    double eps = 0.0;
    std::vector<double> x, sup_u, sup_v;  // sup_v carries the sqrt(eps) factor
    double u_station = 0.0, v_station = 0.0;
    std::vector<NSStage> history;
    double ns_residual = 0.0, max_continuity = 0.0;
    double residual_order0 = 0.0, residual_order1 = 0.0;  // weighted L2 of (F_R, G_R)
};

struct InviscidReport {
    ExperimentConfig config;
    std::vector<InviscidRun> runs;
    std::optional<DecayFit> eps_fit_u, eps_fit_v, x_fit;
    std::string eps_status, x_status;
    double x_fit_eps = 0.0;
    std::vector<Threshold> checks;
    bool pass = false;
};

// Threshold slack: eps slope of the u quantity in [0.4, 0.6], of the v quantity >= 0.8; x exponent
// <= -0.1; order-1 residual below order 0 at decay_eps and nonincreasing along the sweep.
InviscidReport run_inviscid_limit_experiment(const ExperimentConfig& config);

struct ReportSet {
    std::vector<AttractorReport> attractor;
    std::vector<InviscidReport> inviscid;
};

// JSON summary; byte-identical for identical inputs.
std::string report_json(const ReportSet& r);
// dir/summary.json plus one CSV per curve. Throws IoError when dir cannot be written.
void write_report(const ReportSet& r, const std::string& dir);

}  // namespace plab

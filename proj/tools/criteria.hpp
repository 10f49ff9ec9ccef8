// Acceptance checks 1-12, shared by the acceptance runner and the command-line tool.
#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "prandtl_lab/harness.hpp"

namespace plab::criteria {

struct Outcome {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;  // measured values against their thresholds
    double seconds = 0.0;
};

// Independent wall-slope oracle: third-order Kutta integration of f''' = -f f'' with plain
// bisection on f''(0) until f'(z_max) = 1.
double oracle_wall_slope(double z_max, int steps);

Outcome blasius_solve();
Outcome exact_solution_regression();
Outcome attractor_rate(AttractorReport* keep = nullptr);
Outcome damping_identity();
Outcome momentum_drift();
Outcome sharp_hardy();
Outcome good_variable_round_trip();
Outcome manufactured_order();
// Criteria 9, 10 and 11 read one inviscid-limit experiment.
std::vector<Outcome> inviscid_limit(InviscidReport* keep = nullptr);
Outcome norm_plumbing();

// Runs the selected ids (all when empty) in order; on_result sees each outcome as it completes.
std::vector<Outcome> run(const std::set<int>& ids = {},
                         const std::function<void(const Outcome&)>& on_result = {});

std::string format_line(const Outcome& o);

}  // namespace plab::criteria

// Steady Prandtl layer marched in x, von Mises twisted differences, and run diagnostics.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prandtl_lab/blasius.hpp"
#include "prandtl_lab/core_grid.hpp"

namespace plab {

// Weights of a backward x difference: d/dx q(x_n) ~ p q_n + c q_{n-1} + m q_{n-2}.
struct XDiff {
    double p, c, m;
};
// Weights the march uses at x from (x, xm1, xm2): variable-step BDF2 when the step ratio is at
// most 2, otherwise (or with xm2 null) the two-point backward difference.
XDiff backward_x_weights(const double* xm2, double xm1, double x);

struct PrandtlState {
    double x = 0.0;
    std::vector<double> u, v;  // on the run's y nodes
    double wall_shear = 0.0;   // d_y u(x, 0), second-order one-sided
    double displacement = 0.0;  // int (1 - u) dy
    double momentum = 0.0;      // int u (1 - u) dy
};

struct MarchConfig {
    std::vector<double> x_nodes;  // empty: use grid.x
    double tol = 1e-11;           // Newton update tolerance (max norm)
    int max_iter = 25;
    int max_halvings = 10;
    bool check_monotone = true;   // datum must be nondecreasing in y
    double dpdx = 0.0;            // constant d_x P^E forcing; > 0 is adverse
    bool stop_at_separation = true;
    double datum_wall_tol = 1e-12;
    double datum_top_tol = 1e-6;
};

struct PrandtlRun {
    std::vector<double> y;
    std::vector<PrandtlState> states;
    double dpdx = 0.0;
    int halvings = 0;                  // total step halvings used
    int newton_iterations = 0;
    int monotonicity_violations = 0;   // node pairs with u decreasing in y
    double max_overshoot = 0.0;        // max(u - 1, 0)
    double min_value = 0.0;            // min u
    double max_continuity_defect = 0.0;
    bool separated = false;

    std::vector<double> x() const;
    Field2D u_field() const;
    Field2D v_field() const;
    Grid2D grid() const;
};

PrandtlRun march_prandtl(const std::vector<double>& datum, const Grid2D& grid, const MarchConfig& config);

// Exact Blasius family sampled at the grid nodes, packaged as a run.
PrandtlRun blasius_run(const BlasiusProfile& p, const Grid2D& grid);

// v(y) = -int_0^y (u_next - u_prev)/dx dy'.
std::vector<double> v_from_u(const std::vector<double>& u_prev, const std::vector<double>& u_next,
                             double dx, const std::vector<double>& y);

double wall_shear(const std::vector<double>& u, const std::vector<double>& y);

// Gaussian bump times a wall cutoff (y/l)^3/(1 + (y/l)^3), so the datum keeps u_yy(0) = 0.
std::vector<double> bump_perturbation(const std::vector<double>& y, double amplitude, double center,
                                      double width, double cutoff_scale);

enum class DampingForm {
    exact,    // A = -2 u*_yy / (u* (u_p + u*)), the coefficient the Prandtl system produces
    literal,  // A = -2 u*_yy / (u* u_p)
};

struct TwistedOptions {
    int npsi = 400;
    DampingForm form = DampingForm::exact;
};

struct TwistedDifference {
    std::vector<double> x, psi;
    Field2D phi_direct;   // |u_p|^2 - |u*|^2 at equal stream function
    Field2D phi_marched;  // backward Euler solution of phi_x - u_p phi_psipsi + A phi = 0
    Field2D a_coef;
    Field2D up_psi;       // other profile u_p at (x, psi)
    Field2D up_psipsi;    // d_psipsi u_p
    double max_discrepancy = 0.0;  // max |phi_marched - phi_direct|
    double phi_scale = 0.0;        // max |phi_direct|
    int negative_a_nodes = 0;
};

TwistedDifference solve_twisted_difference(const PrandtlRun& base, const PrandtlRun& other,
                                           const TwistedOptions& opt = {});

struct DampingStep {
    double x;
    double rate;       // (1/2) d_x int phi^2, backward difference
    double diffusion;  // int u_p phi_psi^2
    double concavity;  // -(1/2) int d_psipsi u_p phi^2
    double damping;    // int A phi^2
    double residual;
    double relative;   // |residual| / diffusion (0 when all terms vanish)
};

struct DampingAudit {
    std::vector<DampingStep> steps;
    double max_relative = 0.0;
    bool concavity_nonneg = true;  // concavity term >= 0 at every step (to roundoff)
    bool a_nonneg = true;
    int a_negative_nodes = 0;
    int norm_increases = 0;        // steps where ||phi_marched|| grew
    int direct_norm_increases = 0;  // same for the direct construction
    std::vector<double> norm_marched, norm_direct;
};

DampingAudit damping_audit(const TwistedDifference& td);

struct MomentumDrift {
    double max_drift = 0.0;
    double x_at_max = 0.0;
    std::vector<double> x, drift;  // per step, at the step's end
};
// max over steps of |d/dx int u(1-u) - d_y u(x,0)|. The x derivative is the backward formula the
// march itself uses at that node, so for a marched run this checks the discrete balance.
MomentumDrift momentum_integral_drift(const PrandtlRun& run);

std::optional<double> detect_separation(const PrandtlRun& run);

// CSV: x,wall_shear,sup_error (error against the Blasius family; header line first).
std::string run_summary_csv(const PrandtlRun& run, const BlasiusProfile* reference);
// sup_y |u - u*| per state.
std::vector<double> sup_error_vs_blasius(const PrandtlRun& run, const BlasiusProfile& p);

}  // namespace plab

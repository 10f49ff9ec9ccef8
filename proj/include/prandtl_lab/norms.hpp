// Good unknowns (q, U, V), low-order weighted energy norms, the x weights and cutoffs, and Hardy checks.
#pragma once

#include <string>
#include <vector>

#include "prandtl_lab/blasius.hpp"
#include "prandtl_lab/core_grid.hpp"

namespace plab {

// Background u_bar with the derivatives the norms need, all on one grid.
struct Background {
    Grid2D grid;
    Field2D u, u_x, u_y, u_yy;
};

// Derivatives by second-order differences of the sampled field.
Background background_from_field(const Field2D& ubar, const Grid2D& grid);
// Closed-form derivatives of the Blasius family.
Background blasius_background(const BlasiusProfile& p, const Grid2D& grid);

struct GoodVariables {
    Grid2D grid;
    Field2D psi, q, U, V;
    Field2D ubar;
};

// psi = int_0^y u, q = psi/u_bar. U and V are the exact derivatives of q written with psi_y = u and
// psi_x = -v (quotient rule), so u = u_bar U + u_bar_y q and v = u_bar V - u_bar_x q hold to roundoff.
// The wall row takes the one-sided limits q = 0, U = u_y/(2 u_bar_y), V = 0.
GoodVariables good_variables(const Field2D& u, const Field2D& v, const Background& bg);

struct Reconstruction {
    double max_u_error = 0.0;
    double max_v_error = 0.0;
};
// Max of |u - (u_bar U + u_bar_y q)| and |v - (u_bar V - u_bar_x q)| over nodes with j >= skip_wall_cells.
Reconstruction reconstruction_error(const GoodVariables& gv, const Background& bg, const Field2D& u,
                                    const Field2D& v, int skip_wall_cells = 2);

double japanese(double x);  // <x> = 1 + x
double weight_g(double x);  // g^2 = 1 + <x>^{-1/100}
// C^1 smoothstep from 0 at x = 200 + 10 n to 1 at x = 205 + 10 n, 1 <= n <= 12.
double cutoff_phi(int n, double x);

struct NormTerm {
    std::string name;
    double value;  // squared term
};

struct NormReport {
    double eps = 0.0;
    double x0 = 0.0;                // sqrt of the sum of the eight squared X0 terms
    std::vector<NormTerm> x0_terms;
    double x_half = 0.0, y_half = 0.0;  // X_{1/2}, Y_{1/2}
    double x_one = 0.0;                 // sqrt of the sum of the six squared X_1 terms
    std::vector<NormTerm> x1_terms;
    double noise_floor_half = 0.0;  // X_{1/2} + Y_{1/2} of a roundoff-level checkerboard
    double clipped_measure = 0.0;   // area where u_bar_yy > 0 (set to 0 in -u_bar_yy factors)
    std::size_t nx = 0, ny = 0;
    double x_max = 0.0, y_max = 0.0;
};

struct HalfNorms {
    double x_half = 0.0, y_half = 0.0;
    double noise_floor = 0.0;
};

NormReport norm_X0(const GoodVariables& gv, const Background& bg, double eps);
// n in {0, 1}: X_{n+1/2} and Y_{n+1/2}.
HalfNorms norm_half(int n, const GoodVariables& gv, const Background& bg, double eps);
// X_1 squared terms; the report fields x_one and x1_terms.
void norm_X1(const GoodVariables& gv, const Background& bg, double eps, NormReport& report);
// X0, X_{1/2}, Y_{1/2} and X_1 together.
NormReport evaluate_norms(const GoodVariables& gv, const Background& bg, double eps);

// JSON object, one key per term, 17 significant digits.
std::string norm_report_json(const NormReport& r);

// RHS - LHS of the sharp weighted Hardy inequality on a 1-D x grid:
//   int <x>^{-3.01} u^2 f^2 <= (1/1.01) int <x>^{-1.01} u^2 f_x^2 + (2/1.01) int <x>^{-2.01} u u_x f^2.
// f_x and u_x by second-order differences; composite trapezoid quadrature.
double hardy_precise_check(const std::vector<double>& f, const std::vector<double>& ubar,
                           const std::vector<double>& x);

struct HardyWeighted {
    double max_ratio = 0.0;  // max over x slices of LHS / RHS
    double x_at_max = 0.0;
};
// Per slice: ||f||^2 / (gamma ||sqrt(u_p) f_y <x>^{1/2}||^2 + gamma^{-2} ||u_p f||^2), in L^2_y.
HardyWeighted hardy_weighted_check(const Field2D& f, double gamma, const Field2D& up, const Grid2D& grid);

}  // namespace plab

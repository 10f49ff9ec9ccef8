// Steady rescaled Navier-Stokes on a truncated quadrant, staggered (MAC) grid:
//   U U_x + V U_y + P_x = U_yy + eps U_xx,  U V_x + V V_y + P_y/eps = V_yy + eps V_xx,  U_x + V_y = 0.
//
// Grid2D nodes are cell faces. U sits at (x_i, y_{j+1/2}), V at (x_{i+1/2}, y_j), P at cell
// centers. Inflow U, V at x = 0; no-slip at y = 0; on top U is given and the normal stress
// P - eps V_y is given, which fixes the pressure level; d_x U and d_x V given at the outflow.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "prandtl_lab/core_grid.hpp"
#include "prandtl_lab/expansion.hpp"

namespace plab {

enum class Outflow {
    neumann,      // d_x U = out_dudx, d_x V = out_dvdx
    extrapolate,  // d_xx U = 0, V extended linearly
};

struct NSConfig {
    double eps = 1e-2;
    std::vector<double> schedule;  // decreasing eps stages ending at eps; empty: eps alone
    double picard_switch = 1e-3;   // Newton once the residual drops below this
    double tol = 1e-9;             // RMS of the full residual
    int max_iter = 40;             // per stage
    Outflow outflow = Outflow::neumann;
    bool verbose = false;
};

struct NSBoundary {
    std::vector<double> inflow_u;  // at y_{j+1/2}, size ny - 1
    std::vector<double> inflow_v;  // at y_j, size ny
    std::vector<double> top_u;     // at x_i, size nx; empty: 1
    std::vector<double> top_p;     // P - eps V_y at x_{i+1/2}, size nx - 1; empty: 0
    std::vector<double> out_dudx;  // at y_{j+1/2}; empty: 0
    std::vector<double> out_dvdx;  // at y_j; empty: 0
    std::function<double(double x, double y)> force_u, force_v;  // body forcing, optional
};

struct NSStage {
    double eps;
    int iterations;
    double residual;
};

struct NSField {
    Grid2D grid;
    double eps = 0.0;
    Field2D U;  // nx x (ny - 1)
    Field2D V;  // (nx - 1) x ny
    Field2D P;  // (nx - 1) x (ny - 1)
    NSBoundary bc;
    Outflow outflow = Outflow::neumann;
    std::vector<NSStage> history;
    double max_continuity = 0.0;
};

// Inflow profile sampled at the staggered positions of a grid.
NSBoundary inflow_from_profiles(const Grid2D& grid, const std::function<double(double)>& u_of_y,
                                const std::function<double(double)>& v_of_y);

// Inflow, top velocity and top normal stress taken from a bundle on u_point_grid(grid); homogeneous
// outflow data.
NSBoundary boundary_from_bundle(const ExpansionBundle& b, const Grid2D& grid);

// Solves from the inflow-extended state, or continues from `initial` when given (same grid).
NSField solve_steady_ns(const NSBoundary& bc, const NSConfig& config, const Grid2D& grid,
                        const NSField* initial = nullptr);

struct NSResidual {
    double momentum_x = 0.0, momentum_y = 0.0, continuity = 0.0;  // RMS over the equations' rows
    double momentum_x_interior = 0.0;  // U rows not adjacent to a boundary
    double total = 0.0;                // RMS over all rows, as the solver measures it
};
NSResidual ns_residual(const NSField& f);

// Sparse Jacobian infinity norm at f (for sensitivity checks).
double ns_jacobian_norm(const NSField& f);

struct MMSResult {
    std::vector<double> h, error_u, error_v;  // per grid: max x spacing, RMS errors
    std::vector<double> orders;               // between successive grids, min over U and V
    double observed_order = 0.0;              // min of orders
};
// Manufactured field u = F'(y) G(x), v = -F(y) G'(x) with F = y - 1 + e^{-y}, G = 1 + sin(2x)/2,
// P = cos(3x) cos(2y)/20; the forcing is its exact residual.
MMSResult manufactured_test(const std::vector<Grid2D>& grids, double eps);

// y nodes of the U points with the wall and the top added: {0, y_{1/2}, ..., y_{ny-3/2}, y_max}.
Grid2D u_point_grid(const Grid2D& grid);

struct Remainder {
    Grid2D grid;     // u_point_grid
    Field2D du, dv;  // U - u_bar, V - v_bar
    std::vector<double> x, sup_du, sup_dv;
};
// Bundle on u_point_grid(field.grid) with the same eps.
Remainder extract_remainder(const NSField& f, const ExpansionBundle& b);

// Field values at the U-point grid nodes (V interpolated).
Field2D ns_u_on_points(const NSField& f);
Field2D ns_v_on_points(const NSField& f);

// Convergence history CSV: eps,iterations,residual.
std::string ns_history_csv(const NSField& f);
void write_ns_snapshot(const NSField& f, const std::string& path);

}  // namespace plab

// Truncated expansion u_bar = 1 + u0_p + sqrt(eps) (u1_E + u1_p), v_bar = v0_p + v1_E + sqrt(eps) v1_p,
// its pieces, and the Navier-Stokes forcing it leaves behind.
//
// Layer fields live on a grid in the rescaled wall variable y; Euler fields are solved on a grid
// in Y = sqrt(eps) y and sampled onto the layer grid.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "prandtl_lab/core_grid.hpp"
#include "prandtl_lab/fit.hpp"
#include "prandtl_lab/prandtl.hpp"

namespace plab {

enum class FarField {
    dirichlet,  // v_E = far_data (zero when none is given) on x = X_max and Y = Y_max
    neumann,    // d_n v_E = 0 there; matches velocity-Neumann outflow and u = 1 on top
};

struct EulerOptions {
    FarField far_field = FarField::dirichlet;
    std::function<double(double x, double Y)> far_data;  // dirichlet only
    double corner_tol = 1e-8;
};

struct EulerCorrector {
    Grid2D grid;  // y coordinate is Y
    Field2D u, v;
    bool corner_warning = false;
    double corner_mismatch = 0.0;  // |inflow(0) + wall(0)|
};

// Laplace problem for v_E with v_E(x, 0) = -wall_data(x) and v_E(0, Y) = inflow_data(Y). u_E is the
// harmonic conjugate with u_E = 0 at x = X_max: d_x u_E = -d_Y v_E integrated back along the top,
// then d_Y u_E = d_x v_E down each column.
EulerCorrector solve_euler_corrector(const std::vector<double>& wall_data, const std::vector<double>& inflow_data,
                                     const Grid2D& grid, const EulerOptions& opt = {});

// w0 Re[(1 + iY)^{-1/2}]: the x = 0 trace of the harmonic function whose wall value is w0/sqrt(1 + x).
// For a Neumann far side the trace is mirrored across Y_max = Y.back() and rescaled to w0 at Y = 0,
// so the inflow data has d_Y = 0 at the top corner.
std::vector<double> default_euler_inflow(double w0, const std::vector<double>& Y,
                                         FarField far = FarField::dirichlet);

// Samples an Euler field at Y = sqrt(eps) y on the layer grid; x nodes must agree.
Field2D euler_on_layer(const Field2D& f, const Grid2D& euler_grid, const Grid2D& layer_grid, double eps);

// v0_p = v_bar - v_bar(x, y_max): the layer part that vanishes at the top. Its wall trace is the
// datum of the Euler corrector.
Field2D layer_v_decaying(const PrandtlRun& base);

struct CorrectorConfig {
    bool outer_forcing = true;  // include the Euler slip gradient E_x and the tangent of v1_E
};

struct PrandtlCorrector {
    Grid2D grid;
    Field2D u, v;  // v normalized to vanish at y_max
};

// Linearization of the discrete march around the base run, with u1_p(x, 0) = bc_shift(x) and the
// outer forcing of E = -bc_shift. The scheme is the exact derivative of the marching scheme, so a
// nonlinear difference of two nearby runs is reproduced to second order in their separation.
PrandtlCorrector solve_prandtl_corrector(const PrandtlRun& base, const std::vector<double>& bc_shift,
                                         const std::vector<double>& datum, const CorrectorConfig& cfg = {});

struct ExpansionComponents {
    Grid2D grid;  // layer grid
    Field2D u0p, v0p;  // u0p = u_bar0 - 1, v0p vanishes at the top
    Field2D u1e, v1e, u1p, v1p;  // zero for order 0
    int order = 1;
};

struct ForcingResidual {
    Field2D f, g;              // interior nodes; boundary rows and columns are zero
    double weighted_l2 = 0.0;   // || |(F, G)| <x>^{11/20} ||_{L^2}
    double weighted_sup = 0.0;  // sup |(F, G)| <x>^{11/20}
    double f_sup = 0.0, g_sup = 0.0;
};

struct ExpansionBundle {
    double eps = 0.0;
    int order = 0;
    Grid2D grid;
    Field2D u0p, v0p, u1e, v1e, u1p, v1p;
    Field2D ubar, vbar, pbar;
    Field2D fr, gr;
    ForcingResidual residual;
};

ExpansionBundle assemble_expansion(const ExpansionComponents& c, double eps);

struct FirstOrderOptions {
    FarField far_field = FarField::neumann;
    CorrectorConfig corrector;
    MarchConfig march;
};

// All components on one layer grid: the march from `datum`, the Euler corrector on the same x
// nodes with Y = sqrt(eps) y and the default inflow, and the Prandtl corrector with
// u1_p(x, 0) = -u1_E(x, 0) whose datum is u1_E(0, 0) (u - 1 + y u_y / 2) at x = 0.
ExpansionComponents first_order_components(const std::vector<double>& datum, const Grid2D& layer_grid,
                                           double eps, const FirstOrderOptions& opt = {});

// F_R = u u_x + v u_y + P_x - Delta_eps u, G_R = u v_x + v v_y + P_y/eps - Delta_eps v by
// second-order differences.
ForcingResidual forcing_residual(const Field2D& ubar, const Field2D& vbar, const Field2D& pbar,
                                 const Grid2D& grid, double eps);

struct ZetaAlpha {
    Field2D zeta, alpha;
    std::vector<double> x, zeta_sup, alpha_over_u_sup;  // per x node (interior in y)
};
// zeta = u u_x + v u_y - u0_pyy, alpha = u v_x + v v_y.
ZetaAlpha zeta_alpha(const ExpansionBundle& b);

// Snapshot file of all bundle fields plus a manifest.
void write_bundle(const ExpansionBundle& b, const std::string& path);

}  // namespace plab

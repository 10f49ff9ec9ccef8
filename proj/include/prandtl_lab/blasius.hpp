// Blasius profile: f f'' + f''' = 0, f(0) = f'(0) = 0, f'(inf) = 1, and its velocity family.
//
// With this normalization the family that solves the Prandtl system exactly is
//   u = f'(eta), v = (eta f' - f)/sqrt(2 (x + x0)), eta = y/sqrt(2 (x + x0)),
// so the wall shear obeys d_y u(x, 0) sqrt(2 (x + x0)) = f''(0).
#pragma once

#include <string>
#include <vector>

#include "prandtl_lab/core_grid.hpp"

namespace plab {

struct BlasiusProfile {
    std::vector<double> z;  // uniform similarity nodes on [0, z_max]
    std::vector<double> f, fp, fpp;
    double s = 0.0;   // f''(0)
    double x0 = 1.0;  // virtual origin of the family
    double integration_error = 0.0;  // |s(h) - s(h/2)| estimate

    double z_max() const { return z.back(); }
    BlasiusProfile with_origin(double new_x0) const;
};

struct BlasiusOptions {
    int substeps = 0;  // RK4 steps per output interval; 0 picks h <= 0.0025
    double bracket_lo = 0.1;
    double bracket_hi = 1.0;
};

BlasiusProfile solve_blasius(double z_max, int nz, double tol, const BlasiusOptions& opt = {});

// Sup over interior nodes of |f f'' + f'''| with f''' from fourth-order differences of fpp.
double blasius_ode_residual(const BlasiusProfile& p);

struct BlasiusVelocity {
    double u = 0.0, v = 0.0;
};
// Throws ExtrapolationError when eta exceeds z_max.
BlasiusVelocity blasius_field(const BlasiusProfile& p, double x, double y);

// Field value and derivatives; beyond z_max the far-field continuation f' = 1 is used.
struct BlasiusSample {
    double u, v, u_x, u_y, u_yy, v_x, v_y;
};
BlasiusSample blasius_sample(const BlasiusProfile& p, double x, double y);

// Similarity variable of the exact family.
double blasius_eta(const BlasiusProfile& p, double x, double y);

struct BlasiusPropertiesReport {
    bool concavity_ok = true;
    bool wall_shear_ok = true;
    double max_uyy = 0.0;             // largest d_yy u over sampled nodes
    double max_wall_shear_error = 0.0;  // max |d_y u(x,0) sqrt(2(x+x0)) - s|, d_y u by differences
    std::vector<double> x_samples;
    bool pass() const { return concavity_ok && wall_shear_ok; }
};
BlasiusPropertiesReport blasius_properties_check(const BlasiusProfile& p,
                                                 const std::vector<double>& x_samples,
                                                 double tol = 1e-10, double shear_tol = 1e-6);

// u_star(x, y) and v_star sampled on a grid; Field2D layout (i over x, j over y).
Field2D blasius_u_field(const BlasiusProfile& p, const Grid2D& g);
Field2D blasius_v_field(const BlasiusProfile& p, const Grid2D& g);

// CSV with header z,f,fp,fpp and 16 significant digits.
std::string blasius_csv(const BlasiusProfile& p);
void write_blasius_csv(const BlasiusProfile& p, const std::string& path);

}  // namespace plab

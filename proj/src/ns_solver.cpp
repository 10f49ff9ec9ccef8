#include "prandtl_lab/ns_solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "prandtl_lab/errors.hpp"
#include "prandtl_lab/io.hpp"
#include "prandtl_lab/numerics.hpp"

namespace plab {

namespace {

// Affine function of the unknowns with its value at the current state.
struct Lin {
    static constexpr int cap = 48;
    double val = 0.0;
    int n = 0;
    std::array<int, cap> col;
    std::array<double, cap> w;

    void push(int k, double c) {
        if (n == cap) throw SolverError("ns_solver: stencil overflow");
        col[n] = k;
        w[n++] = c;
    }
    void add(const Lin& o, double c) {
        val += c * o.val;
        for (int k = 0; k < o.n; ++k) push(o.col[k], c * o.w[k]);
    }
};

Lin known(double v) {
    Lin l;
    l.val = v;
    return l;
}

Lin comb3(const Lin& a, const Lin& b, const Lin& c, Stencil3 s) {
    Lin out;
    out.add(a, s.m);
    out.add(b, s.c);
    out.add(c, s.p);
    return out;
}

// a * b. Picard keeps a (the advecting factor) at its current value.
Lin product(const Lin& a, const Lin& b, bool newton) {
    Lin out;
    out.add(b, a.val);
    if (newton) {
        for (int k = 0; k < a.n; ++k) out.push(a.col[k], b.val * a.w[k]);
    }
    out.val = a.val * b.val;
    return out;
}

// First derivative at p0 blended between central and upwind by the cell Peclet number
// |speed| h / kappa; weights and direction are frozen at the current state.
Lin advective_d1(const Lin& fm, const Lin& f0, const Lin& fp, double pm, double p0, double pp, double speed,
                 double kappa) {
    const double h = std::max(p0 - pm, pp - p0);
    const double pe = std::abs(speed) * h / kappa;
    const double theta = pe <= 2.0 ? 1.0 : 2.0 / pe;
    Stencil3 s = d1_weights(pm, p0, pp);
    s.m *= theta;
    s.c *= theta;
    s.p *= theta;
    if (speed >= 0.0) {
        const double k = (1.0 - theta) / (p0 - pm);
        s.m -= k;
        s.c += k;
    } else {
        const double k = (1.0 - theta) / (pp - p0);
        s.c -= k;
        s.p += k;
    }
    return comb3(fm, f0, fp, s);
}

enum class RowKind { u_momentum, u_outflow, v_momentum, v_top, continuity };

class System {
public:
    System(const Grid2D& g, const NSBoundary& bc, Outflow outflow, double eps)
        : g_(g), bc_(bc), outflow_(outflow), eps_(eps), N_(static_cast<int>(g.nx())), M_(static_cast<int>(g.ny())) {
        if (N_ < 4 || M_ < 4) throw ShapeError("solve_steady_ns: grid needs at least 4 nodes per direction");
        const auto sz = [](const std::vector<double>& v, std::size_t n, double fill) {
            return v.empty() ? std::vector<double>(n, fill) : v;
        };
        if (bc_.inflow_u.size() != static_cast<std::size_t>(M_ - 1))
            throw ShapeError("solve_steady_ns: inflow u length must be ny - 1");
        if (bc_.inflow_v.size() != static_cast<std::size_t>(M_))
            throw ShapeError("solve_steady_ns: inflow v length must be ny");
        bc_.top_u = sz(bc_.top_u, N_, 1.0);
        bc_.top_p = sz(bc_.top_p, N_ - 1, 0.0);
        bc_.out_dudx = sz(bc_.out_dudx, M_ - 1, 0.0);
        bc_.out_dvdx = sz(bc_.out_dvdx, M_, 0.0);
        if (bc_.top_u.size() != static_cast<std::size_t>(N_) || bc_.top_p.size() != static_cast<std::size_t>(N_ - 1) ||
            bc_.out_dudx.size() != static_cast<std::size_t>(M_ - 1) ||
            bc_.out_dvdx.size() != static_cast<std::size_t>(M_))
            throw ShapeError("solve_steady_ns: boundary data lengths differ from the grid");
        xc_.resize(N_ - 1);
        yc_.resize(M_ - 1);
        for (int i = 0; i + 1 < N_; ++i) xc_[i] = 0.5 * (g.x[i] + g.x[i + 1]);
        for (int j = 0; j + 1 < M_; ++j) yc_[j] = 0.5 * (g.y[j] + g.y[j + 1]);
        nu_ = (N_ - 1) * (M_ - 1);
        fu_.assign(nu_, 0.0);
        fv_.assign(nu_, 0.0);
        if (bc_.force_u)
            for (int i = 1; i < N_; ++i)
                for (int j = 0; j + 1 < M_; ++j) fu_[iu(i, j)] = bc_.force_u(g.x[i], yc_[j]);
        if (bc_.force_v)
            for (int i = 0; i + 1 < N_; ++i)
                for (int j = 1; j < M_; ++j) fv_[iv(i, j) - nu_] = bc_.force_v(xc_[i], g.y[j]);
    }

    int size() const { return 3 * nu_; }
    int nx() const { return N_; }
    int ny() const { return M_; }
    const NSBoundary& bc() const { return bc_; }
    const std::vector<double>& xc() const { return xc_; }
    const std::vector<double>& yc() const { return yc_; }

    int iu(int i, int j) const { return (i - 1) * (M_ - 1) + j; }
    int iv(int i, int j) const { return nu_ + i * (M_ - 1) + (j - 1); }
    int ip(int i, int j) const { return 2 * nu_ + i * (M_ - 1) + j; }

    RowKind kind(int row) const {
        if (row < nu_) {
            const int i = row / (M_ - 1) + 1;
            return i < N_ - 1 ? RowKind::u_momentum : RowKind::u_outflow;
        }
        if (row < 2 * nu_) return (row - nu_) % (M_ - 1) == M_ - 2 ? RowKind::v_top : RowKind::v_momentum;
        return RowKind::continuity;
    }
    // U rows whose stencil touches no boundary value.
    bool u_interior(int row) const {
        const int i = row / (M_ - 1) + 1, j = row % (M_ - 1);
        return i >= 2 && i <= N_ - 3 && j >= 1 && j <= M_ - 3;
    }

    // Residual of every row (unscaled). With jac, Jacobian triplets with V-momentum rows scaled by
    // v_scale; Picard freezes the advecting velocities.
    void eval(const std::vector<double>& s, std::vector<double>& r, std::vector<Eigen::Triplet<double>>* jac,
              bool newton, double v_scale = 1.0) const {
        r.assign(size(), 0.0);
        if (jac) {
            jac->clear();
            jac->reserve(static_cast<std::size_t>(size()) * 20);
        }
        const auto emit = [&](int row, const Lin& l, double constant, double scale) {
            r[row] = l.val - constant;
            if (jac)
                for (int k = 0; k < l.n; ++k) jac->emplace_back(row, l.col[k], scale * l.w[k]);
        };
        const auto& x = g_.x;
        const auto& y = g_.y;

        for (int i = 1; i < N_; ++i) {
            for (int j = 0; j + 1 < M_; ++j) {
                const int row = iu(i, j);
                if (i == N_ - 1) {
                    if (outflow_ == Outflow::neumann) {
                        const Lin l = comb3(U(s, N_ - 3, j), U(s, N_ - 2, j), U(s, N_ - 1, j),
                                            d1_backward_weights(x[N_ - 3], x[N_ - 2], x[N_ - 1]));
                        emit(row, l, bc_.out_dudx[j], 1.0);
                    } else {
                        const Lin l = comb3(U(s, N_ - 3, j), U(s, N_ - 2, j), U(s, N_ - 1, j),
                                            d2_weights(x[N_ - 3], x[N_ - 2], x[N_ - 1]));
                        emit(row, l, 0.0, 1.0);
                    }
                    continue;
                }
                emit(row, u_momentum(s, i, j, newton), fu_[row], 1.0);
            }
        }
        for (int i = 0; i + 1 < N_; ++i) {
            for (int j = 1; j < M_; ++j) {
                const int row = iv(i, j);
                if (j == M_ - 1) {
                    // P - eps V_y on the top face, P extrapolated from the two cells below.
                    Lin l = comb3(V(s, i, M_ - 3), V(s, i, M_ - 2), V(s, i, M_ - 1),
                                  d1_backward_weights(y[M_ - 3], y[M_ - 2], y[M_ - 1]));
                    l.val *= -eps_;
                    for (int k = 0; k < l.n; ++k) l.w[k] *= -eps_;
                    const double t = (y[M_ - 1] - yc_[M_ - 2]) / (yc_[M_ - 2] - yc_[M_ - 3]);
                    l.add(P(s, i, M_ - 2), 1.0 + t);
                    l.add(P(s, i, M_ - 3), -t);
                    emit(row, l, bc_.top_p[i], 1.0);
                    continue;
                }
                emit(row, v_momentum(s, i, j, newton), fv_[row - nu_], v_scale);
            }
        }
        for (int i = 0; i + 1 < N_; ++i) {
            for (int j = 0; j + 1 < M_; ++j) {
                Lin l;
                l.add(U(s, i + 1, j), 1.0 / (x[i + 1] - x[i]));
                l.add(U(s, i, j), -1.0 / (x[i + 1] - x[i]));
                l.add(V(s, i, j + 1), 1.0 / (y[j + 1] - y[j]));
                l.add(V(s, i, j), -1.0 / (y[j + 1] - y[j]));
                emit(ip(i, j), l, 0.0, 1.0);
            }
        }
    }

    Lin U(const std::vector<double>& s, int i, int j) const {
        if (i == 0) return known(bc_.inflow_u[j]);
        Lin l;
        const int k = iu(i, j);
        l.val = s[k];
        l.push(k, 1.0);
        return l;
    }
    Lin V(const std::vector<double>& s, int i, int j) const {
        if (j == 0) return known(0.0);
        Lin l;
        const int k = iv(i, j);
        l.val = s[k];
        l.push(k, 1.0);
        return l;
    }
    Lin P(const std::vector<double>& s, int i, int j) const {
        Lin l;
        const int k = ip(i, j);
        l.val = s[k];
        l.push(k, 1.0);
        return l;
    }

private:
    Lin u_momentum(const std::vector<double>& s, int i, int j, bool newton) const {
        const auto& x = g_.x;
        const auto& y = g_.y;
        const Lin u0 = U(s, i, j), um = U(s, i - 1, j), up = U(s, i + 1, j);
        const double ax = (xc_[i] - x[i]) / (xc_[i] - xc_[i - 1]);
        Lin vbar;
        vbar.add(V(s, i - 1, j), 0.5 * ax);
        vbar.add(V(s, i - 1, j + 1), 0.5 * ax);
        vbar.add(V(s, i, j), 0.5 * (1.0 - ax));
        vbar.add(V(s, i, j + 1), 0.5 * (1.0 - ax));

        const double ym = j == 0 ? 0.0 : yc_[j - 1];
        const double yp = j == M_ - 2 ? y[M_ - 1] : yc_[j + 1];
        const Lin ulo = j == 0 ? known(0.0) : U(s, i, j - 1);
        const Lin uhi = j == M_ - 2 ? known(bc_.top_u[i]) : U(s, i, j + 1);

        Lin out = product(u0, advective_d1(um, u0, up, x[i - 1], x[i], x[i + 1], u0.val, eps_), newton);
        out.add(product(vbar, advective_d1(ulo, u0, uhi, ym, yc_[j], yp, vbar.val, 1.0), newton), 1.0);
        const double dxp = xc_[i] - xc_[i - 1];
        out.add(P(s, i, j), 1.0 / dxp);
        out.add(P(s, i - 1, j), -1.0 / dxp);
        out.add(comb3(ulo, u0, uhi, d2_weights(ym, yc_[j], yp)), -1.0);
        out.add(comb3(um, u0, up, d2_weights(x[i - 1], x[i], x[i + 1])), -eps_);
        return out;
    }

    Lin v_momentum(const std::vector<double>& s, int i, int j, bool newton) const {
        const auto& x = g_.x;
        const auto& y = g_.y;
        const Lin v0 = V(s, i, j), vlo = V(s, i, j - 1), vhi = V(s, i, j + 1);
        const double by = (y[j] - yc_[j - 1]) / (yc_[j] - yc_[j - 1]);
        Lin ubar;
        ubar.add(U(s, i, j - 1), 0.5 * (1.0 - by));
        ubar.add(U(s, i + 1, j - 1), 0.5 * (1.0 - by));
        ubar.add(U(s, i, j), 0.5 * by);
        ubar.add(U(s, i + 1, j), 0.5 * by);

        double xm, xp;
        Lin vm, vp;
        if (i == 0) {
            xm = x[0];
            vm = known(bc_.inflow_v[j]);
        } else {
            xm = xc_[i - 1];
            vm = V(s, i - 1, j);
        }
        if (i == N_ - 2) {
            // Ghost node mirrored across the outflow face.
            xp = 2.0 * x[N_ - 1] - xc_[i];
            if (outflow_ == Outflow::neumann) {
                vp = v0;
                vp.val += bc_.out_dvdx[j] * (xp - xc_[i]);
            } else {
                const double t = (xp - xc_[i]) / (xc_[i] - xc_[i - 1]);
                vp.add(v0, 1.0 + t);
                vp.add(V(s, i - 1, j), -t);
            }
        } else {
            xp = xc_[i + 1];
            vp = V(s, i + 1, j);
        }

        Lin out = product(ubar, advective_d1(vm, v0, vp, xm, xc_[i], xp, ubar.val, eps_), newton);
        out.add(product(v0, advective_d1(vlo, v0, vhi, y[j - 1], y[j], y[j + 1], v0.val, 1.0), newton), 1.0);
        const double dyp = (yc_[j] - yc_[j - 1]) * eps_;
        out.add(P(s, i, j), 1.0 / dyp);
        out.add(P(s, i, j - 1), -1.0 / dyp);
        out.add(comb3(vlo, v0, vhi, d2_weights(y[j - 1], y[j], y[j + 1])), -1.0);
        out.add(comb3(vm, v0, vp, d2_weights(xm, xc_[i], xp)), -eps_);
        return out;
    }

    const Grid2D& g_;
    NSBoundary bc_;
    Outflow outflow_;
    double eps_;
    int N_, M_, nu_ = 0;
    std::vector<double> xc_, yc_, fu_, fv_;
};

double rms(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return r.empty() ? 0.0 : std::sqrt(s / static_cast<double>(r.size()));
}

std::vector<double> pack(const System& sys, const NSField& f) {
    std::vector<double> s(sys.size());
    const int N = sys.nx(), M = sys.ny();
    for (int i = 1; i < N; ++i)
        for (int j = 0; j + 1 < M; ++j) s[sys.iu(i, j)] = f.U(i, j);
    for (int i = 0; i + 1 < N; ++i)
        for (int j = 1; j < M; ++j) s[sys.iv(i, j)] = f.V(i, j);
    for (int i = 0; i + 1 < N; ++i)
        for (int j = 0; j + 1 < M; ++j) s[sys.ip(i, j)] = f.P(i, j);
    return s;
}

void unpack(const System& sys, const std::vector<double>& s, NSField& f) {
    const int N = sys.nx(), M = sys.ny();
    f.U = Field2D(N, M - 1);
    f.V = Field2D(N - 1, M);
    f.P = Field2D(N - 1, M - 1);
    for (int j = 0; j + 1 < M; ++j) f.U(0, j) = sys.bc().inflow_u[j];
    for (int i = 1; i < N; ++i)
        for (int j = 0; j + 1 < M; ++j) f.U(i, j) = s[sys.iu(i, j)];
    for (int i = 0; i + 1 < N; ++i)
        for (int j = 1; j < M; ++j) f.V(i, j) = s[sys.iv(i, j)];
    for (int i = 0; i + 1 < N; ++i)
        for (int j = 0; j + 1 < M; ++j) f.P(i, j) = s[sys.ip(i, j)];
}

std::vector<double> solve_linear(const System& sys, const std::vector<Eigen::Triplet<double>>& trip,
                                 const std::vector<double>& rhs) {
    const int n = sys.size();
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw SolverError("solve_steady_ns: singular Jacobian");
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), n);
    Eigen::VectorXd d = lu.solve(b);
    if (lu.info() != Eigen::Success) throw SolverError("solve_steady_ns: linear solve failed");
    return {d.data(), d.data() + n};
}

bool same_nodes(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (std::abs(a[k] - b[k]) > 1e-12 * (1.0 + std::abs(a[k]))) return false;
    return true;
}

// Every node of the coarse list appears in the fine one.
bool contains_nodes(const std::vector<double>& coarse, const std::vector<double>& fine) {
    for (double c : coarse) {
        const auto it = std::lower_bound(fine.begin(), fine.end(), c - 1e-12 * (1.0 + std::abs(c)));
        if (it == fine.end() || std::abs(*it - c) > 1e-12 * (1.0 + std::abs(c))) return false;
    }
    return true;
}

// V at the x nodes, rows j = 0 .. ny - 1.
Field2D v_on_x_nodes(const NSField& f) {
    const auto& g = f.grid;
    const std::size_t N = g.nx(), M = g.ny();
    Field2D out(N, M);
    const auto xc = [&](std::size_t i) { return 0.5 * (g.x[i] + g.x[i + 1]); };
    for (std::size_t j = 0; j < M; ++j) {
        out(0, j) = f.bc.inflow_v[j];
        for (std::size_t i = 1; i + 1 < N; ++i) {
            const double t = (g.x[i] - xc(i - 1)) / (xc(i) - xc(i - 1));
            out(i, j) = (1.0 - t) * f.V(i - 1, j) + t * f.V(i, j);
        }
        const double h = g.x[N - 1] - xc(N - 2);
        if (f.outflow == Outflow::neumann) {
            const double g_out = f.bc.out_dvdx.empty() ? 0.0 : f.bc.out_dvdx[j];
            out(N - 1, j) = f.V(N - 2, j) + g_out * h;
        } else {
            const double t = h / (xc(N - 2) - xc(N - 3));
            out(N - 1, j) = (1.0 + t) * f.V(N - 2, j) - t * f.V(N - 3, j);
        }
    }
    return out;
}

struct Manufactured {
    double eps;
    static double F(double y) { return y - 1.0 + std::exp(-y); }
    static double F1(double y) { return 1.0 - std::exp(-y); }
    static double F2(double y) { return std::exp(-y); }
    static double F3(double y) { return -std::exp(-y); }
    static double G(double x) { return 1.0 + 0.5 * std::sin(2.0 * x); }
    static double G1(double x) { return std::cos(2.0 * x); }
    static double G2(double x) { return -2.0 * std::sin(2.0 * x); }
    static double G3(double x) { return -4.0 * std::cos(2.0 * x); }

    static double u(double x, double y) { return F1(y) * G(x); }
    static double v(double x, double y) { return -F(y) * G1(x); }
    static double p(double x, double y) { return 0.05 * std::cos(3.0 * x) * std::cos(2.0 * y); }

    double fu(double x, double y) const {
        const double ux = F1(y) * G1(x), uy = F2(y) * G(x);
        const double uxx = F1(y) * G2(x), uyy = F3(y) * G(x);
        const double px = -0.15 * std::sin(3.0 * x) * std::cos(2.0 * y);
        return u(x, y) * ux + v(x, y) * uy + px - uyy - eps * uxx;
    }
    double fv(double x, double y) const {
        const double vx = -F(y) * G2(x), vy = -F1(y) * G1(x);
        const double vxx = -F(y) * G3(x), vyy = -F2(y) * G1(x);
        const double py = -0.1 * std::cos(3.0 * x) * std::sin(2.0 * y);
        return u(x, y) * vx + v(x, y) * vy + py / eps - vyy - eps * vxx;
    }
};

}  // namespace

NSBoundary inflow_from_profiles(const Grid2D& g, const std::function<double(double)>& u_of_y,
                                const std::function<double(double)>& v_of_y) {
    NSBoundary bc;
    for (std::size_t j = 0; j + 1 < g.ny(); ++j) bc.inflow_u.push_back(u_of_y(0.5 * (g.y[j] + g.y[j + 1])));
    for (std::size_t j = 0; j < g.ny(); ++j) bc.inflow_v.push_back(v_of_y(g.y[j]));
    return bc;
}

NSBoundary boundary_from_bundle(const ExpansionBundle& b, const Grid2D& g) {
    const Grid2D pg = u_point_grid(g);
    if (!same_nodes(b.grid.x, pg.x) || !same_nodes(b.grid.y, pg.y))
        throw ShapeError("boundary_from_bundle: bundle grid is not the U-point grid");
    const std::size_t N = g.nx(), M = g.ny();
    NSBoundary bc;
    for (std::size_t k = 1; k < M; ++k) bc.inflow_u.push_back(b.ubar(0, k));
    std::vector<double> v0(pg.ny());
    for (std::size_t k = 0; k < pg.ny(); ++k) v0[k] = b.vbar(0, k);
    for (std::size_t j = 0; j < M; ++j) bc.inflow_v.push_back(interp_linear(pg.y, v0, g.y[j]));
    for (std::size_t i = 0; i < N; ++i) bc.top_u.push_back(b.ubar(i, M));
    // The bundle's eps V_y on top is below its truncation order and is left out.
    for (std::size_t i = 0; i + 1 < N; ++i) bc.top_p.push_back(0.5 * (b.pbar(i, M) + b.pbar(i + 1, M)));
    return bc;
}

namespace {

std::string stall_message(const char* what, double eps, double res, double last) {
    char msg[200];
    if (last > 0.0)
        std::snprintf(msg, sizeof msg, "solve_steady_ns: %s at eps = %.3e (residual %.3e); last converged eps = %.3e",
                      what, eps, res, last);
    else
        std::snprintf(msg, sizeof msg, "solve_steady_ns: %s at eps = %.3e (residual %.3e); no stage converged", what,
                      eps, res);
    return msg;
}

}  // namespace

NSField solve_steady_ns(const NSBoundary& bc, const NSConfig& cfg, const Grid2D& g, const NSField* initial) {
    if (!(cfg.eps > 0.0)) throw ConfigError("solve_steady_ns: eps must be positive");
    if (cfg.max_iter < 1 || !(cfg.tol > 0.0)) throw ConfigError("solve_steady_ns: bad iteration limits");
    std::vector<double> stages = cfg.schedule;
    for (std::size_t k = 0; k < stages.size(); ++k) {
        if (!(stages[k] > 0.0)) throw ConfigError("solve_steady_ns: schedule entries must be positive");
        if (k > 0 && !(stages[k] < stages[k - 1]))
            throw ConfigError("solve_steady_ns: schedule must be strictly decreasing");
    }
    if (stages.empty() || stages.back() > cfg.eps) stages.push_back(cfg.eps);
    if (stages.back() < cfg.eps) throw ConfigError("solve_steady_ns: schedule goes below the target eps");

    NSField field;
    field.grid = g;
    field.outflow = cfg.outflow;
    std::vector<double> s;
    double last_converged = 0.0;

    for (double eps : stages) {
        const System sys(g, bc, cfg.outflow, eps);
        field.bc = sys.bc();
        if (s.empty()) {
            if (initial) {
                if (!same_nodes(initial->grid.x, g.x) || !same_nodes(initial->grid.y, g.y))
                    throw ShapeError("solve_steady_ns: initial field lives on another grid");
                s = pack(sys, *initial);
            } else {
                s.assign(sys.size(), 0.0);
                const int N = sys.nx(), M = sys.ny();
                for (int i = 1; i < N; ++i)
                    for (int j = 0; j + 1 < M; ++j) s[sys.iu(i, j)] = bc.inflow_u[j];
                for (int i = 0; i + 1 < N; ++i)
                    for (int j = 1; j < M; ++j) s[sys.iv(i, j)] = bc.inflow_v[j];
                for (int i = 0; i + 1 < N; ++i)
                    for (int j = 0; j + 1 < M; ++j) s[sys.ip(i, j)] = sys.bc().top_p[i];
            }
        }
        std::vector<double> r, r_try;
        std::vector<Eigen::Triplet<double>> trip;
        sys.eval(s, r, nullptr, false);
        double res = rms(r);
        int it = 0;
        while (res > cfg.tol) {
            if (it == cfg.max_iter) {
                throw SolverError(stall_message("stalled", eps, res, last_converged));
            }
            ++it;
            const bool newton = res < cfg.picard_switch;
            sys.eval(s, r, &trip, newton, eps);
            std::vector<double> rhs(r.size());
            for (std::size_t k = 0; k < r.size(); ++k)
                rhs[k] = sys.kind(static_cast<int>(k)) == RowKind::v_momentum ? -eps * r[k] : -r[k];
            const auto d = solve_linear(sys, trip, rhs);
            // Backtrack on the residual; a step that never helps is taken whole.
            double lambda = 1.0;
            std::vector<double> trial(s.size());
            double res_try = 0.0;
            for (int b = 0; b < 6; ++b) {
                for (std::size_t k = 0; k < s.size(); ++k) trial[k] = s[k] + lambda * d[k];
                sys.eval(trial, r_try, nullptr, false);
                res_try = rms(r_try);
                if (res_try < res) break;
                lambda *= 0.5;
            }
            if (!(res_try < res)) {
                for (std::size_t k = 0; k < s.size(); ++k) trial[k] = s[k] + d[k];
                sys.eval(trial, r_try, nullptr, false);
                res_try = rms(r_try);
            }
            if (!std::isfinite(res_try)) {
                throw SolverError(stall_message("diverged", eps, res_try, last_converged));
            }
            s.swap(trial);
            res = res_try;
            if (cfg.verbose) std::fprintf(stderr, "ns eps=%.3e it=%d %s res=%.3e\n", eps, it, newton ? "newton" : "picard", res);
        }
        field.history.push_back({eps, it, res});
        last_converged = eps;
        field.eps = eps;
        unpack(sys, s, field);
        sys.eval(s, r, nullptr, false);
        double cmax = 0.0;
        for (int k = 2 * (sys.size() / 3); k < sys.size(); ++k) cmax = std::max(cmax, std::abs(r[k]));
        field.max_continuity = cmax;
    }
    return field;
}

NSResidual ns_residual(const NSField& f) {
    const System sys(f.grid, f.bc, f.outflow, f.eps);
    std::vector<double> r;
    sys.eval(pack(sys, f), r, nullptr, false);
    double sx = 0, sy = 0, sc = 0, si = 0, st = 0;
    int nx = 0, ny = 0, nc = 0, ni = 0;
    for (int k = 0; k < sys.size(); ++k) {
        const double q = r[k] * r[k];
        st += q;
        switch (sys.kind(k)) {
            case RowKind::u_momentum:
                sx += q;
                ++nx;
                if (sys.u_interior(k)) {
                    si += q;
                    ++ni;
                }
                break;
            case RowKind::v_momentum:
                sy += q;
                ++ny;
                break;
            case RowKind::continuity:
                sc += q;
                ++nc;
                break;
            default:
                break;
        }
    }
    const auto root = [](double s, int n) { return n ? std::sqrt(s / n) : 0.0; };
    NSResidual out;
    out.momentum_x = root(sx, nx);
    out.momentum_y = root(sy, ny);
    out.continuity = root(sc, nc);
    out.momentum_x_interior = root(si, ni);
    out.total = root(st, sys.size());
    return out;
}

double ns_jacobian_norm(const NSField& f) {
    const System sys(f.grid, f.bc, f.outflow, f.eps);
    std::vector<double> r;
    std::vector<Eigen::Triplet<double>> trip;
    sys.eval(pack(sys, f), r, &trip, true);
    std::vector<double> rowsum(sys.size(), 0.0);
    // Duplicate entries are summed first, as the assembled matrix would.
    Eigen::SparseMatrix<double, Eigen::RowMajor> A(sys.size(), sys.size());
    A.setFromTriplets(trip.begin(), trip.end());
    double best = 0.0;
    for (int k = 0; k < A.outerSize(); ++k) {
        double s = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, k); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

MMSResult manufactured_test(const std::vector<Grid2D>& grids, double eps) {
    if (grids.size() < 3) throw ConfigError("manufactured_test: needs at least 3 grids");
    if (!(eps > 0.0)) throw ConfigError("manufactured_test: eps must be positive");
    for (std::size_t k = 1; k < grids.size(); ++k) {
        if (!contains_nodes(grids[k - 1].x, grids[k].x) || !contains_nodes(grids[k - 1].y, grids[k].y) ||
            grids[k].nx() <= grids[k - 1].nx() || grids[k].ny() <= grids[k - 1].ny())
            throw ConfigError("manufactured_test: grids are not nested refinements");
    }
    const Manufactured mf{eps};
    MMSResult out;
    for (const auto& g : grids) {
        const std::size_t N = g.nx(), M = g.ny();
        const double X = g.x_max(), Y = g.y_max();
        NSBoundary bc = inflow_from_profiles(
            g, [](double y) { return Manufactured::u(0.0, y); }, [](double y) { return Manufactured::v(0.0, y); });
        std::vector<double> xc(N - 1), yc(M - 1);
        for (std::size_t i = 0; i + 1 < N; ++i) xc[i] = 0.5 * (g.x[i] + g.x[i + 1]);
        for (std::size_t j = 0; j + 1 < M; ++j) yc[j] = 0.5 * (g.y[j] + g.y[j + 1]);
        for (std::size_t i = 0; i < N; ++i) bc.top_u.push_back(Manufactured::u(g.x[i], Y));
        for (std::size_t i = 0; i + 1 < N; ++i)
            bc.top_p.push_back(Manufactured::p(xc[i], Y) + eps * Manufactured::F1(Y) * Manufactured::G1(xc[i]));
        for (std::size_t j = 0; j + 1 < M; ++j) bc.out_dudx.push_back(Manufactured::F1(yc[j]) * Manufactured::G1(X));
        for (std::size_t j = 0; j < M; ++j) bc.out_dvdx.push_back(-Manufactured::F(g.y[j]) * Manufactured::G2(X));
        bc.force_u = [mf](double x, double y) { return mf.fu(x, y); };
        bc.force_v = [mf](double x, double y) { return mf.fv(x, y); };

        NSConfig cfg;
        cfg.eps = eps;
        cfg.tol = 1e-10;
        cfg.picard_switch = 1e30;
        const NSField f = solve_steady_ns(bc, cfg, g);

        double eu = 0.0, ev = 0.0;
        std::size_t cu = 0, cv = 0;
        for (std::size_t i = 1; i < N; ++i)
            for (std::size_t j = 0; j + 1 < M; ++j, ++cu) eu += std::pow(f.U(i, j) - Manufactured::u(g.x[i], yc[j]), 2);
        for (std::size_t i = 0; i + 1 < N; ++i)
            for (std::size_t j = 1; j < M; ++j, ++cv) ev += std::pow(f.V(i, j) - Manufactured::v(xc[i], g.y[j]), 2);
        double h = 0.0;
        for (std::size_t i = 0; i + 1 < N; ++i) h = std::max(h, g.x[i + 1] - g.x[i]);
        out.h.push_back(h);
        out.error_u.push_back(std::sqrt(eu / cu));
        out.error_v.push_back(std::sqrt(ev / cv));
    }
    out.observed_order = 1e300;
    for (std::size_t k = 1; k < grids.size(); ++k) {
        const double lh = std::log(out.h[k - 1] / out.h[k]);
        const double ou = std::log(out.error_u[k - 1] / out.error_u[k]) / lh;
        const double ov = std::log(out.error_v[k - 1] / out.error_v[k]) / lh;
        out.orders.push_back(std::min(ou, ov));
        out.observed_order = std::min(out.observed_order, out.orders.back());
    }
    return out;
}

Grid2D u_point_grid(const Grid2D& g) {
    std::vector<double> y{0.0};
    for (std::size_t j = 0; j + 1 < g.ny(); ++j) y.push_back(0.5 * (g.y[j] + g.y[j + 1]));
    y.push_back(g.y_max());
    Grid2D out = grid_from_nodes(g.x, y);
    out.wall_ratio = g.wall_ratio;
    out.x_ramp = g.x_ramp;
    return out;
}

Field2D ns_u_on_points(const NSField& f) {
    const std::size_t N = f.grid.nx(), M = f.grid.ny();
    Field2D out(N, M + 1);
    for (std::size_t i = 0; i < N; ++i) {
        out(i, 0) = 0.0;
        for (std::size_t k = 1; k < M; ++k) out(i, k) = f.U(i, k - 1);
        out(i, M) = f.bc.top_u.empty() ? 1.0 : f.bc.top_u[i];
    }
    return out;
}

Field2D ns_v_on_points(const NSField& f) {
    const std::size_t N = f.grid.nx(), M = f.grid.ny();
    const Field2D vx = v_on_x_nodes(f);
    Field2D out(N, M + 1);
    for (std::size_t i = 0; i < N; ++i) {
        out(i, 0) = vx(i, 0);
        for (std::size_t k = 1; k < M; ++k) out(i, k) = 0.5 * (vx(i, k - 1) + vx(i, k));
        out(i, M) = vx(i, M - 1);
    }
    return out;
}

Remainder extract_remainder(const NSField& f, const ExpansionBundle& b) {
    const Grid2D pg = u_point_grid(f.grid);
    if (!same_nodes(b.grid.x, pg.x) || !same_nodes(b.grid.y, pg.y))
        throw ShapeError("extract_remainder: bundle grid is not the U-point grid of the field");
    if (std::abs(b.eps - f.eps) > 1e-12 * f.eps) throw ShapeError("extract_remainder: eps differs");
    if (b.ubar.nx != pg.nx() || b.ubar.ny != pg.ny() || b.vbar.nx != pg.nx() || b.vbar.ny != pg.ny())
        throw ShapeError("extract_remainder: bundle fields have the wrong shape");
    Remainder out;
    out.grid = pg;
    out.du = ns_u_on_points(f);
    out.dv = ns_v_on_points(f);
    out.x = pg.x;
    for (std::size_t i = 0; i < pg.nx(); ++i) {
        double su = 0.0, sv = 0.0;
        for (std::size_t k = 0; k < pg.ny(); ++k) {
            out.du(i, k) -= b.ubar(i, k);
            out.dv(i, k) -= b.vbar(i, k);
            su = std::max(su, std::abs(out.du(i, k)));
            sv = std::max(sv, std::abs(out.dv(i, k)));
        }
        out.sup_du.push_back(su);
        out.sup_dv.push_back(sv);
    }
    return out;
}

std::string ns_history_csv(const NSField& f) {
    std::ostringstream os;
    os << "eps,iterations,residual\n";
    char line[96];
    for (const auto& s : f.history) {
        std::snprintf(line, sizeof line, "%.9e,%d,%.9e\n", s.eps, s.iterations, s.residual);
        os << line;
    }
    return os.str();
}

void write_ns_snapshot(const NSField& f, const std::string& path) {
    char extra[160];
    std::snprintf(extra, sizeof extra, "{\"eps\": %.17g, \"x_max\": %.17g, \"y_max\": %.17g, \"layout\": \"mac\"}",
                  f.eps, f.grid.x_max(), f.grid.y_max());
    write_snapshot_with_manifest(path, {{"U", &f.U}, {"V", &f.V}, {"P", &f.P}}, extra);
}

}  // namespace plab

#include "pinn/refsolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

extern "C" {
void dgbtrf_(const int* m, const int* n, const int* kl, const int* ku, double* ab,
             const int* ldab, int* ipiv, int* info);
void dgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const double* ab, const int* ldab, const int* ipiv, double* b, const int* ldb,
             int* info, std::size_t trans_len);
}

namespace pinn {

namespace {

// LAPACK general-band LU; storage includes kl extra superdiagonals for fill
struct BandedLU {
    int n = 0, kl = 0, ku = 0, ldab = 0;
    std::vector<double> ab;
    std::vector<int> ipiv;

    void init(int n_, int kl_, int ku_) {
        n = n_;
        kl = kl_;
        ku = ku_;
        ldab = 2 * kl + ku + 1;
        ab.assign(static_cast<std::size_t>(ldab) * n, 0.0);
        ipiv.assign(n, 0);
    }
    void zero() { std::fill(ab.begin(), ab.end(), 0.0); }
    // accumulate into A(i, j); caller guarantees |i - j| within band
    void add(int i, int j, double v) {
        ab[static_cast<std::size_t>(j) * ldab + (kl + ku + i - j)] += v;
    }
    bool factor() {
        int info = 0;
        dgbtrf_(&n, &n, &kl, &ku, ab.data(), &ldab, ipiv.data(), &info);
        return info == 0;
    }
    bool solve(double* b, int nrhs) const {
        int info = 0;
        const char trans = 'N';
        dgbtrs_(&trans, &n, &kl, &ku, &nrhs, ab.data(), &ldab, ipiv.data(), b, &n, &info, 1);
        return info == 0;
    }
};

// solve of the 4x4 system K z = q with partial pivoting
bool solve4(double K[4][4], double q[4]) {
    int perm[4] = {0, 1, 2, 3};
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(K[perm[r]][c]) > std::abs(K[perm[piv]][c])) piv = r;
        std::swap(perm[c], perm[piv]);
        const double d = K[perm[c]][c];
        if (d == 0.0 || !std::isfinite(d)) return false;
        for (int r = c + 1; r < 4; ++r) {
            const double f = K[perm[r]][c] / d;
            K[perm[r]][c] = 0.0;
            for (int cc = c + 1; cc < 4; ++cc) K[perm[r]][cc] -= f * K[perm[c]][cc];
            q[perm[r]] -= f * q[perm[c]];
        }
    }
    double z[4];
    for (int c = 3; c >= 0; --c) {
        double s = q[perm[c]];
        for (int cc = c + 1; cc < 4; ++cc) s -= K[perm[c]][cc] * z[cc];
        z[c] = s / K[perm[c]][c];
    }
    std::copy(z, z + 4, q);
    return true;
}

// Newton matrix M = I - beta_h J, banded plus an optional rank-4 periodic
// corner block solved by the Woodbury identity.
struct NewtonMatrix {
    BandedLU lu;
    bool cyclic = false;
    int rows[4] = {0, 0, 0, 0};
    double S[4][4] = {};          // corner block of M
    std::vector<double> Z;        // B^{-1} U, n x 4 column-major
    double K[4][4] = {};          // I + S (V^T Z), factored on demand per solve

    bool prepare(const SemiDiscrete& sys, std::span<const double> u, double beta_h) {
        const int n = sys.n;
        if (lu.n != n) lu.init(n, sys.kl, sys.ku);
        lu.zero();
        double corner[4][4] = {};
        auto band_add = [&](int i, int j, double v) { lu.add(i, j, -beta_h * v); };
        sys.jac(u, band_add, corner);
        for (int i = 0; i < n; ++i) lu.add(i, i, 1.0);
        if (!lu.factor()) return false;
        cyclic = sys.cyclic;
        if (!cyclic) return true;
        rows[0] = 0;
        rows[1] = 1;
        rows[2] = n - 2;
        rows[3] = n - 1;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) S[a][b] = -beta_h * corner[a][b];
        Z.assign(static_cast<std::size_t>(n) * 4, 0.0);
        for (int a = 0; a < 4; ++a) Z[static_cast<std::size_t>(a) * n + rows[a]] = 1.0;
        if (!lu.solve(Z.data(), 4)) return false;
        double T[4][4];
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) T[a][b] = Z[static_cast<std::size_t>(b) * lu.n + rows[a]];
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                double s = (a == b) ? 1.0 : 0.0;
                for (int c = 0; c < 4; ++c) s += S[a][c] * T[c][b];
                K[a][b] = s;
            }
        return true;
    }

    bool solve(std::span<double> b) const {
        if (!lu.solve(b.data(), 1)) return false;
        if (!cyclic) return true;
        double q[4];
        for (int a = 0; a < 4; ++a) {
            double s = 0.0;
            for (int c = 0; c < 4; ++c) s += S[a][c] * b[rows[c]];
            q[a] = s;
        }
        double Kc[4][4];
        std::memcpy(Kc, K, sizeof Kc);
        if (!solve4(Kc, q)) return false;
        for (int j = 0; j < lu.n; ++j) {
            double corr = 0.0;
            for (int a = 0; a < 4; ++a) corr += Z[static_cast<std::size_t>(a) * lu.n + j] * q[a];
            b[j] -= corr;
        }
        return true;
    }
};

double wrms(std::span<const double> v, std::span<const double> ref, double rtol, double atol) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double w = atol + rtol * std::abs(ref[i]);
        const double q = v[i] / w;
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

SemiDiscrete semidiscretize(const PDEProblem& p, int nx) {
    if (nx < 64) throw ConfigError("semidiscretize needs nx >= 64");
    SemiDiscrete sys;
    sys.n = nx;
    switch (p.id) {
        case Equation::AC: {
            const double dx = 2.0 / (nx - 1);
            sys.kl = sys.ku = 1;
            sys.x.resize(nx);
            for (int i = 0; i < nx; ++i) sys.x[i] = -1.0 + i * dx;
            const double d = p.ac_diff, g = p.ac_gain, ih2 = 1.0 / (dx * dx);
            sys.rhs = [nx, d, g, ih2](double, std::span<const double> u, std::span<double> du) {
                du[0] = du[nx - 1] = 0.0;
                for (int i = 1; i + 1 < nx; ++i)
                    du[i] = d * (u[i - 1] - 2.0 * u[i] + u[i + 1]) * ih2 -
                            g * (u[i] * u[i] * u[i] - u[i]);
            };
            sys.jac = [nx, d, g, ih2](std::span<const double> u,
                                      const std::function<void(int, int, double)>& add,
                                      double[4][4]) {
                for (int i = 1; i + 1 < nx; ++i) {
                    add(i, i - 1, d * ih2);
                    add(i, i, -2.0 * d * ih2 - g * (3.0 * u[i] * u[i] - 1.0));
                    add(i, i + 1, d * ih2);
                }
            };
            break;
        }
        case Equation::Burgers: {
            const double dx = 2.0 / (nx - 1);
            sys.kl = sys.ku = 1;
            sys.x.resize(nx);
            for (int i = 0; i < nx; ++i) sys.x[i] = -1.0 + i * dx;
            const double nu = p.visc, i2h = 1.0 / (2.0 * dx), ih2 = 1.0 / (dx * dx);
            sys.rhs = [nx, nu, i2h, ih2](double, std::span<const double> u, std::span<double> du) {
                du[0] = du[nx - 1] = 0.0;
                for (int i = 1; i + 1 < nx; ++i)
                    du[i] = -u[i] * (u[i + 1] - u[i - 1]) * i2h +
                            nu * (u[i - 1] - 2.0 * u[i] + u[i + 1]) * ih2;
            };
            sys.jac = [nx, nu, i2h, ih2](std::span<const double> u,
                                         const std::function<void(int, int, double)>& add,
                                         double[4][4]) {
                for (int i = 1; i + 1 < nx; ++i) {
                    add(i, i - 1, u[i] * i2h + nu * ih2);
                    add(i, i, -(u[i + 1] - u[i - 1]) * i2h - 2.0 * nu * ih2);
                    add(i, i + 1, -u[i] * i2h + nu * ih2);
                }
            };
            break;
        }
        case Equation::KdV: {
            const double dx = 2.0 / nx;  // periodic: one shared endpoint
            sys.kl = sys.ku = 2;
            sys.cyclic = true;
            sys.x.resize(nx);
            for (int i = 0; i < nx; ++i) sys.x[i] = -1.0 + i * dx;
            const double mu = p.kdv_disp, i2h = 1.0 / (2.0 * dx), i2h3 = 1.0 / (2.0 * dx * dx * dx);
            sys.rhs = [nx, mu, i2h, i2h3](double, std::span<const double> u, std::span<double> du) {
                for (int i = 0; i < nx; ++i) {
                    const int im1 = (i + nx - 1) % nx, im2 = (i + nx - 2) % nx;
                    const int ip1 = (i + 1) % nx, ip2 = (i + 2) % nx;
                    const double uxxx = (u[ip2] - 2.0 * u[ip1] + 2.0 * u[im1] - u[im2]) * i2h3;
                    du[i] = -u[i] * (u[ip1] - u[im1]) * i2h - mu * uxxx;
                }
            };
            const int slot_of[4] = {0, 1, nx - 2, nx - 1};
            sys.jac = [nx, mu, i2h, i2h3, slot_of](std::span<const double> u,
                                                   const std::function<void(int, int, double)>& add,
                                                   double corner[4][4]) {
                auto slot = [&](int idx) {
                    for (int a = 0; a < 4; ++a)
                        if (slot_of[a] == idx) return a;
                    return -1;
                };
                auto put = [&](int i, int j, double v) {
                    if (std::abs(i - j) <= 2) {
                        add(i, j, v);
                    } else {
                        corner[slot(i)][slot(j)] += v;  // wraparound entry
                    }
                };
                for (int i = 0; i < nx; ++i) {
                    const int im1 = (i + nx - 1) % nx, im2 = (i + nx - 2) % nx;
                    const int ip1 = (i + 1) % nx, ip2 = (i + 2) % nx;
                    put(i, im2, mu * i2h3);
                    put(i, im1, u[i] * i2h - 2.0 * mu * i2h3);
                    put(i, i, -(u[ip1] - u[im1]) * i2h);
                    put(i, ip1, -u[i] * i2h + 2.0 * mu * i2h3);
                    put(i, ip2, -mu * i2h3);
                }
            };
            break;
        }
    }
    return sys;
}

std::vector<double> initial_state(const PDEProblem& p, const SemiDiscrete& sys) {
    std::vector<double> u0(sys.x.size());
    for (std::size_t i = 0; i < sys.x.size(); ++i) u0[i] = ansatz_A(p.id, sys.x[i]).val();
    return u0;
}

IntegrateResult integrate(const SemiDiscrete& sys, std::span<const double> u0,
                          std::span<const double> output_times, double rtol, double atol) {
    const int n = sys.n;
    if (static_cast<int>(u0.size()) != n) throw ConfigError("state length mismatch");
    if (output_times.empty()) throw ConfigError("no output times");
    if (!(rtol > 0 && atol > 0)) throw ConfigError("tolerances must be positive");
    for (std::size_t i = 0; i < output_times.size(); ++i) {
        if (!std::isfinite(output_times[i]) || output_times[i] < 0.0)
            throw ConfigError("output times must be finite and >= 0");
        if (i > 0 && output_times[i] <= output_times[i - 1])
            throw ConfigError("output times must be strictly increasing");
    }
    if (!all_finite(u0)) throw NumericError("initial state non-finite");

    IntegrateResult res;
    res.t.assign(output_times.begin(), output_times.end());
    res.u.resize(output_times.size() * static_cast<std::size_t>(n));

    std::vector<double> u(u0.begin(), u0.end());
    std::vector<double> u_nm1, u_nm2;  // history for BDF2 and its predictor
    double h_prev = 0.0;
    double h_prev2_ = 0.0;  // gap between the two history states
    double t = 0.0;
    std::size_t out_idx = 0;
    if (output_times[0] == 0.0) {
        std::copy(u.begin(), u.end(), res.u.begin());
        out_idx = 1;
    }

    NewtonMatrix M;
    std::vector<double> fu(n), psi(n), upred(n), unew(n), gvec(n), est(n);
    const double hmin = 1e-14;
    double h = std::min(1e-6, output_times.back());

    auto fail_at = [&](const char* why) {
        std::ostringstream os;
        os << why << " at t=" << t;
        throw NumericError(os.str());
    };

    while (out_idx < output_times.size()) {
        const double T = output_times[out_idx];
        while (t < T) {
            bool capped = false;
            double h_try = h;
            if (t + h_try >= T) {
                h_try = T - t;
                capped = true;
            }
            const int k = u_nm1.empty() ? 1 : 2;
            double beta_h;
            if (k == 1) {
                beta_h = h_try;
                std::copy(u.begin(), u.end(), psi.begin());
                sys.rhs(t, u, fu);
                for (int i = 0; i < n; ++i) upred[i] = u[i] + h_try * fu[i];
            } else {
                const double r = h_try / h_prev;
                const double denom = 1.0 + 2.0 * r;
                beta_h = h_try * (1.0 + r) / denom;
                const double c0 = (1.0 + r) * (1.0 + r) / denom, c1 = r * r / denom;
                for (int i = 0; i < n; ++i) psi[i] = c0 * u[i] - c1 * u_nm1[i];
                if (!u_nm2.empty()) {
                    // quadratic extrapolation through the last three states
                    const double t0 = t, t1 = t - h_prev;
                    // u_nm2 sits at t - h_prev - h_prev2; recover its time
                    // from the stored gap
                    const double t2 = t1 - h_prev2_;
                    const double tq = t + h_try;
                    const double l0 = (tq - t1) * (tq - t2) / ((t0 - t1) * (t0 - t2));
                    const double l1 = (tq - t0) * (tq - t2) / ((t1 - t0) * (t1 - t2));
                    const double l2 = (tq - t0) * (tq - t1) / ((t2 - t0) * (t2 - t1));
                    for (int i = 0; i < n; ++i)
                        upred[i] = l0 * u[i] + l1 * u_nm1[i] + l2 * u_nm2[i];
                } else {
                    for (int i = 0; i < n; ++i) upred[i] = u[i] + r * (u[i] - u_nm1[i]);
                }
            }

            // Newton iteration on G(y) = y - beta_h f(y) - psi
            std::copy(upred.begin(), upred.end(), unew.begin());
            bool converged = false;
            if (all_finite(unew)) {
                for (int it = 0; it < 8; ++it) {
                    if (!M.prepare(sys, unew, beta_h)) break;
                    sys.rhs(t + h_try, unew, fu);
                    for (int i = 0; i < n; ++i) gvec[i] = -(unew[i] - beta_h * fu[i] - psi[i]);
                    if (!all_finite(gvec)) break;
                    if (!M.solve(gvec)) break;
                    for (int i = 0; i < n; ++i) unew[i] += gvec[i];
                    ++res.newton_iters;
                    if (wrms(gvec, u, rtol, atol) <= 0.1) {
                        converged = all_finite(unew);
                        break;
                    }
                }
            }
            if (!converged) {
                h = 0.5 * h_try;
                if (h < hmin) fail_at("newton iteration stalled below the step floor");
                continue;
            }

            for (int i = 0; i < n; ++i) est[i] = 0.5 * (unew[i] - upred[i]);
            const double err = wrms(est, u, rtol, atol);
            const double safety = 0.9 * std::pow(std::max(err, 1e-10), -1.0 / (k + 1));
            if (err > 1.0) {
                h = h_try * std::clamp(safety, 0.1, 0.5);
                if (h < hmin) fail_at("error control pushed the step below the floor");
                continue;
            }

            // accept; a step capped to land on T does not shrink later steps
            if (!u_nm1.empty()) {
                u_nm2 = u_nm1;
                h_prev2_ = h_prev;
            }
            u_nm1 = u;
            u.swap(unew);
            h_prev = h_try;
            t = capped ? T : t + h_try;
            ++res.steps;
            h = (capped ? h : h_try) * std::clamp(safety, 0.2, 5.0);
        }
        std::copy(u.begin(), u.end(), res.u.begin() + out_idx * static_cast<std::size_t>(n));
        ++out_idx;
    }
    if (!all_finite(res.u)) throw NumericError("integration produced non-finite values");
    return res;
}

void ReferenceGrid::validate() const {
    if (nx < 2 || nt < 2) throw InvariantError("grid too small");
    if (u.size() != static_cast<std::size_t>(nx) * nt) throw InvariantError("grid size mismatch");
    if (!all_finite(u)) throw InvariantError("grid has non-finite values");
    if (eq != Equation::KdV) {
        // held boundary rows can pick up LU-pivoting roundoff, nothing more
        for (int i = 0; i < nt; ++i) {
            if (std::abs(at(i, 0) - at(0, 0)) > 1e-10 ||
                std::abs(at(i, nx - 1) - at(0, nx - 1)) > 1e-10)
                throw InvariantError("boundary values drifted");
        }
    }
}

void default_grid_shape(Equation eq, int& nx, int& nt) {
    switch (eq) {
        case Equation::AC:
            nx = 400;
            nt = 201;
            return;
        case Equation::KdV:
            nx = 500;
            nt = 201;
            return;
        case Equation::Burgers:
            nx = 600;
            nt = 101;
            return;
    }
    throw InvariantError("unknown equation");
}

namespace {

// 4-point Lagrange interpolation on a uniform grid; exact at nodes
double cubic_sample(std::span<const double> ux, double x_lo, double dx, double xq, bool periodic) {
    const int n = static_cast<int>(ux.size());
    if (!periodic) {
        if (xq <= x_lo) return ux[0];
        if (xq >= x_lo + dx * (n - 1)) return ux[n - 1];
    }
    const double s = (xq - x_lo) / dx;
    long j = static_cast<long>(std::floor(s));
    if (!periodic) j = std::clamp(j, 1L, static_cast<long>(n) - 3);
    const double xi = s - static_cast<double>(j);
    const double lm1 = -xi * (xi - 1.0) * (xi - 2.0) / 6.0;
    const double l0 = (xi + 1.0) * (xi - 1.0) * (xi - 2.0) / 2.0;
    const double l1 = -(xi + 1.0) * xi * (xi - 2.0) / 2.0;
    const double l2 = (xi + 1.0) * xi * (xi - 1.0) / 6.0;
    auto at = [&](long idx) {
        if (periodic) {
            idx %= n;
            if (idx < 0) idx += n;
        }
        return ux[static_cast<std::size_t>(idx)];
    };
    return lm1 * at(j - 1) + l0 * at(j) + l1 * at(j + 1) + l2 * at(j + 2);
}

}  // namespace

ReferenceGrid generate_reference(const PDEProblem& p, int nx, int nt, int nx_internal,
                                 double rtol, double atol) {
    if (nx < 2 || nt < 2) throw ConfigError("output grid too small");
    if (nx_internal < nx / 2) throw ConfigError("internal grid coarser than output");
    SemiDiscrete sys = semidiscretize(p, nx_internal);
    std::vector<double> u0 = initial_state(p, sys);
    std::vector<double> times(nt);
    for (int i = 0; i < nt; ++i) times[i] = static_cast<double>(i) / (nt - 1);
    IntegrateResult r = integrate(sys, u0, times, rtol, atol);

    ReferenceGrid g;
    g.eq = p.id;
    g.nx = nx;
    g.nt = nt;
    g.rtol = rtol;
    g.atol = atol;
    g.nx_internal = nx_internal;
    g.u.resize(static_cast<std::size_t>(nx) * nt);
    const bool periodic = p.id == Equation::KdV;
    const double dx_int = periodic ? 2.0 / nx_internal : 2.0 / (nx_internal - 1);
    for (int j = 0; j < nx; ++j) g.u[j] = ansatz_A(p.id, g.x_at(j)).val();
    for (int i = 1; i < nt; ++i) {
        std::span<const double> row(r.u.data() + static_cast<std::size_t>(i) * nx_internal,
                                    nx_internal);
        for (int j = 0; j < nx; ++j)
            g.u[static_cast<std::size_t>(i) * nx + j] =
                cubic_sample(row, -1.0, dx_int, g.x_at(j), periodic);
    }
    g.validate();
    return g;
}

void save_grid(const std::string& path, const ReferenceGrid& g) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open grid file for writing: " + path);
    char head[256];
    std::snprintf(head, sizeof head,
                  "pinngrid 1\nequation %s\nnx %d\nnt %d\nxrange %.17g %.17g\n"
                  "trange %.17g %.17g\nrtol %.17g\natol %.17g\nscheme %s\nnx_internal %d\n"
                  "payload\n",
                  to_string(g.eq), g.nx, g.nt, g.x_lo, g.x_hi, g.t_lo, g.t_hi, g.rtol, g.atol,
                  g.scheme.c_str(), g.nx_internal);
    out << head;
    // payload is host little-endian 64-bit floats, row-major over (t, x)
    out.write(reinterpret_cast<const char*>(g.u.data()),
              static_cast<std::streamsize>(g.u.size() * sizeof(double)));
    if (!out.good()) throw NumericError("grid write failed: " + path);
}

ReferenceGrid load_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open grid file: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "pinngrid" || version != 1) throw ConfigError("not a grid file: " + path);
    ReferenceGrid g;
    std::string key;
    while (in >> key && key != "payload") {
        if (key == "equation") {
            std::string v;
            in >> v;
            g.eq = equation_from_string(v);
        } else if (key == "nx") {
            in >> g.nx;
        } else if (key == "nt") {
            in >> g.nt;
        } else if (key == "xrange") {
            in >> g.x_lo >> g.x_hi;
        } else if (key == "trange") {
            in >> g.t_lo >> g.t_hi;
        } else if (key == "rtol") {
            in >> g.rtol;
        } else if (key == "atol") {
            in >> g.atol;
        } else if (key == "scheme") {
            in >> g.scheme;
        } else if (key == "nx_internal") {
            in >> g.nx_internal;
        } else {
            throw ConfigError("unknown grid header field: " + key);
        }
    }
    if (key != "payload" || !in) throw ConfigError("truncated grid header: " + path);
    in.get();  // newline after the payload marker
    if (g.nx < 2 || g.nt < 2) throw ConfigError("grid header has bad dimensions");
    g.u.resize(static_cast<std::size_t>(g.nx) * g.nt);
    in.read(reinterpret_cast<char*>(g.u.data()),
            static_cast<std::streamsize>(g.u.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(g.u.size() * sizeof(double)))
        throw ConfigError("grid payload truncated: " + path);
    g.validate();
    return g;
}

void export_grid_csv(const std::string& path, const ReferenceGrid& g) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open csv file: " + path);
    out << "t,x,u\n";
    char buf[128];
    for (int i = 0; i < g.nt; ++i)
        for (int j = 0; j < g.nx; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.t_at(i), g.x_at(j), g.at(i, j));
            out << buf;
        }
    if (!out.good()) throw NumericError("csv write failed: " + path);
}

ConvergenceStudy convergence_study(const PDEProblem& p, int nx_out, int nt_out, int nx_internal,
                                   double rtol, double atol) {
    if (nx_internal % 4 != 0) throw ConfigError("convergence study needs nx divisible by 4");
    ReferenceGrid fine = generate_reference(p, nx_out, nt_out, nx_internal, rtol, atol);
    ReferenceGrid mid = generate_reference(p, nx_out, nt_out, nx_internal / 2, rtol, atol);
    ReferenceGrid coarse = generate_reference(p, nx_out, nt_out, nx_internal / 4, rtol, atol);
    auto final_row_diff = [&](const ReferenceGrid& a, const ReferenceGrid& b) {
        double num = 0.0, den = 0.0;
        const int i = a.nt - 1;
        for (int j = 0; j < a.nx; ++j) {
            const double d = a.at(i, j) - b.at(i, j);
            num += d * d;
            den += a.at(i, j) * a.at(i, j);
        }
        if (den == 0.0) throw NumericError("zero reference norm in convergence study");
        return std::sqrt(num / den);
    };
    ConvergenceStudy s;
    s.nx_internal = nx_internal;
    s.diff_fine = final_row_diff(fine, mid);
    s.diff_coarse = final_row_diff(mid, coarse);
    s.ratio = s.diff_coarse / std::max(s.diff_fine, 1e-300);
    return s;
}

}  // namespace pinn

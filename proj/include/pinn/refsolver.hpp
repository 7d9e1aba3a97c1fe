#pragma once

#include <functional>
#include <string>

#include "pinn/pde.hpp"

namespace pinn {

// Method-of-lines system du/dt = rhs(t, u) with a banded Jacobian.
// `cyclic` adds wraparound entries confined to the four corner unknowns
// (first two and last two), handled by a rank-4 correction at solve time.
struct SemiDiscrete {
    int n = 0;
    int kl = 1, ku = 1;
    bool cyclic = false;
    std::vector<double> x;  // node coordinates (informational)
    std::function<void(double t, std::span<const double> u, std::span<double> du)> rhs;
    // fill df/du: band(i, j) for |i - j| <= band width via the setter, and
    // when cyclic the 4x4 corner block over rows/cols {0, 1, n-2, n-1}
    std::function<void(std::span<const double> u, const std::function<void(int, int, double)>& band,
                       double corner[4][4])>
        jac;
};

// Uniform-grid discretizations. Dirichlet problems put all nx nodes of
// [-1, 1] in the state and hold the end rows fixed; the periodic problem
// uses nx nodes on [-1, 1) with one shared endpoint.
SemiDiscrete semidiscretize(const PDEProblem& p, int nx);

// initial condition sampled at the state nodes
std::vector<double> initial_state(const PDEProblem& p, const SemiDiscrete& sys);

struct IntegrateResult {
    std::vector<double> t;  // copy of output_times
    std::vector<double> u;  // len(t) x n, time-major
    long steps = 0;
    long newton_iters = 0;
};

// Adaptive BDF1/2 with analytic-Jacobian Newton solves; local error per
// step is held to WRMS(est; rtol, atol) <= 1 and every output time is an
// exact step endpoint. Deterministic for fixed inputs.
IntegrateResult integrate(const SemiDiscrete& sys, std::span<const double> u0,
                          std::span<const double> output_times, double rtol = 1e-6,
                          double atol = 1e-8);

struct ReferenceGrid {
    Equation eq = Equation::AC;
    int nx = 0, nt = 0;
    double x_lo = -1.0, x_hi = 1.0, t_lo = 0.0, t_hi = 1.0;
    double rtol = 1e-6, atol = 1e-8;
    std::string scheme = "bdf2";
    int nx_internal = 0;
    std::vector<double> u;  // nt x nx, time-major

    double x_at(int j) const { return x_lo + (x_hi - x_lo) * j / (nx - 1); }
    double t_at(int i) const { return t_lo + (t_hi - t_lo) * i / (nt - 1); }
    double at(int i, int j) const { return u[static_cast<std::size_t>(i) * nx + j]; }
    void validate() const;
};

// per-equation evaluation grid shape: AC 400 x 201, KdV 500 x 201,
// Burgers 600 x 101 (dt 0.005 / 0.005 / 0.01)
void default_grid_shape(Equation eq, int& nx, int& nt);

// Solve on a dense internal grid and downsample to the nx-point output
// grid by local cubic interpolation; the t = 0 row is the sampled initial
// condition.
ReferenceGrid generate_reference(const PDEProblem& p, int nx, int nt, int nx_internal = 1024,
                                 double rtol = 1e-6, double atol = 1e-8);

void save_grid(const std::string& path, const ReferenceGrid& g);
ReferenceGrid load_grid(const std::string& path);
void export_grid_csv(const std::string& path, const ReferenceGrid& g);

struct ConvergenceStudy {
    int nx_internal = 0;   // finest resolution
    double diff_fine = 0;  // || u(nx/2) - u(nx) ||_rel at the final time
    double diff_coarse = 0;  // || u(nx/4) - u(nx/2) ||_rel
    double ratio = 0;        // diff_coarse / diff_fine, ~4 for 2nd order
};

ConvergenceStudy convergence_study(const PDEProblem& p, int nx_out, int nt_out, int nx_internal,
                                   double rtol = 1e-6, double atol = 1e-8);

}  // namespace pinn

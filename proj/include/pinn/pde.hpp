#pragma once

#include <optional>
#include <utility>

#include "pinn/network.hpp"

namespace pinn {

struct PDEProblem {
    Equation id = Equation::AC;
    bool needs_boundary_loss = false;  // KdV: periodic BC kept as a soft term
    // equation coefficients; unused entries are zero for clarity
    double ac_diff = 0.0, ac_gain = 0.0;  // u_t - ac_diff u_xx + ac_gain (u^3 - u) = 0
    double kdv_disp = 0.0;                // u_t + u u_x + kdv_disp u_xxx = 0
    double visc = 0.0;                    // u_t + u u_x - visc u_xx = 0

    static PDEProblem make(Equation eq);
    int x_order() const { return id == Equation::KdV ? 3 : 2; }
};

struct CollocationSet {
    enum class Region { Train, Validation, Mixed };
    std::vector<double> t, x;  // parallel
    Region region = Region::Mixed;

    std::size_t size() const { return t.size(); }
    void validate() const;  // domain bounds and region-tag consistency
};

// n points uniform in [t_lo, t_hi] x [-1, 1]; deterministic in (seed, tag)
CollocationSet uniform_collocation(int n, double t_lo, double t_hi, std::uint64_t seed,
                                   const char* tag = "colloc");

// n boundary times uniform in [t_lo, t_hi]
std::vector<double> uniform_boundary_ts(int n, double t_lo, double t_hi, std::uint64_t seed);

// Residual of the untransformed equation from solution-jet components.
// Shared by the v-form path, the u-form oracle, and the reference tests.
double residual_from_u(const PDEProblem& p, const Jet& u);
// dr/d(u components)
void residual_u_seeds(const PDEProblem& p, const Jet& u, std::span<double> ubar);

// Primary path: residual written directly in v and its derivatives with the
// ansatz expansion inlined per equation (independent transcription from the
// jet-algebra route through ansatz_u).
double residual_v(const PDEProblem& p, const Jet& v, double t, double x);
// returns the residual and fills dr/d(v components)
double residual_v_seeds(const PDEProblem& p, const Jet& v, double t, double x,
                        std::span<double> vbar);

// End-to-end residual at a point through the network.
double residual(const PDEProblem& p, const Network& net, double t, double x, EvalWorkspace& ws);

// (v(t,-1) - v(t,1), v_x(t,-1) - v_x(t,1))
std::pair<double, double> boundary_residual_kdv(const Network& net, double t, EvalWorkspace& ws);

// Mean squared residual over the collocation set, plus (when the problem
// asks for it) the mean squared boundary-residual component over
// boundary_ts with weight 1. The residual-squared values are summed with a
// sorted pairwise reduction, so the loss is permutation-invariant over
// collocation ordering and reproducible across runs.
class PdeLoss {
public:
    PdeLoss(PDEProblem p, CollocationSet colloc, std::vector<double> boundary_ts, int workers = 1);

    double value(const Network& net);
    // writes the full-layout gradient (overwrites grad_full) and returns
    // the loss; deterministic for any worker count
    double value_and_grad(const Network& net, std::span<double> grad_full);

    const CollocationSet& colloc() const { return colloc_; }
    const std::vector<double>& boundary_ts() const { return boundary_ts_; }
    const PDEProblem& problem() const { return prob_; }

private:
    static constexpr int kStripes = 64;
    double run(const Network& net, std::span<double> grad_full, bool want_grad);

    PDEProblem prob_;
    CollocationSet colloc_;
    std::vector<double> boundary_ts_;
    int workers_;
    std::vector<double> r2_;                        // per collocation point
    std::vector<double> b2_;                        // per boundary component
    std::vector<std::vector<double>> stripe_grad_;  // per stripe, full layout
};

}  // namespace pinn

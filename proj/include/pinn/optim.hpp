#pragma once

#include <functional>
#include <string>

#include "pinn/common.hpp"

namespace pinn {

// Objective in trainable coordinates. Must write the gradient (same length
// as x) and return the loss. Callers freeze parameters by excluding them
// from the coordinate vector, so an optimizer can never touch them.
using LossFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

// Called after each accepted step; return false to request a stop.
using IterCallback =
    std::function<bool(int iter, double loss, double grad_norm, std::span<const double> x)>;

struct LBFGSConfig {
    int memory = 50;
    double c1 = 1e-4;           // sufficient decrease
    double c2 = 0.9;            // curvature
    double grad_tol = 1e-9;     // stop when ||g||_2 falls below
    int max_iters = 5000;
    int max_line_evals = 60;
    // refine each accepted step with secant iteration on the directional
    // derivative; exact on quadratics, used by convergence tests
    bool exact_line_search = false;
};

enum class StopReason { GradTol, MaxIters, LineSearchFail, CallbackStop };
const char* to_string(StopReason r);

struct LBFGSResult {
    std::vector<double> x;  // best accepted point
    double loss = 0.0;
    double grad_norm = 0.0;
    int iters = 0;
    long evals = 0;  // objective evaluations
    StopReason reason = StopReason::MaxIters;
};

// Accepted losses are non-increasing; a step is taken only if it does not
// increase the objective. Non-finite trial values shrink the step.
LBFGSResult lbfgs_minimize(const LossFn& f, std::vector<double> x0, const LBFGSConfig& cfg,
                           const IterCallback& cb = nullptr);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    long t = 0;
    std::vector<double> m, v;  // first/second moment, trainable coords

    explicit AdamState(AdamConfig c, std::size_t dim) : cfg(c), m(dim, 0.0), v(dim, 0.0) {}
};

// One bias-corrected update of x in place.
void adam_step(AdamState& st, std::span<double> x, std::span<const double> grad);

struct EarlyStopState {
    int patience = 15;   // consecutive non-improving checks tolerated
    double best = 0.0;
    int best_epoch = -1; // -1 until the first check
    int bad_checks = 0;
    bool stopped = false;
    std::vector<double> best_params;  // bitwise snapshot at the best check
};

// Record a validation check; snapshots params on improvement and returns
// true once patience is exhausted (sticky).
bool early_stop_update(EarlyStopState& st, int epoch, double val_metric,
                       std::span<const double> params);

// One optimizer trace line; val_l2 and wall_s may be NaN when not sampled.
struct TraceRow {
    int iter = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double val_l2 = 0.0;
    double wall_s = 0.0;
};

void write_trace_csv(const std::string& path, std::span<const TraceRow> rows);

double l2_norm(std::span<const double> v);

}  // namespace pinn

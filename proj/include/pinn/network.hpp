#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pinn/activations.hpp"
#include "pinn/common.hpp"
#include "pinn/jet.hpp"

namespace pinn {

enum class Equation : std::uint8_t { AC, KdV, Burgers };
const char* to_string(Equation e);
Equation equation_from_string(const std::string& s);

struct NetConfig {
    // widths[0] = 2 inputs (t, x), widths.back() = 1 output
    std::vector<int> widths = {2, 32, 32, 32, 32, 32, 32, 1};
    // final hidden layer activation; all earlier hidden layers are tanh
    ActFamily family = ActFamily::Tanh;
    int af_n = 1;
    std::vector<Candidate> candidates;  // ABU only

    int n_linear() const { return static_cast<int>(widths.size()) - 1; }
    ActivationSpec af_template() const;  // coeffs zero-filled, structure only
    void validate() const;
};

// Flat parameter addressing: per linear layer, row-major weights then
// biases, in layer order; the activation-coefficient segment is last.
struct ParamLayout {
    struct Layer {
        int in, out, w_off, b_off;
    };
    std::vector<Layer> layers;
    int af_off = 0, af_count = 0, total = 0;

    static ParamLayout make(const NetConfig& cfg);
};

struct ParamVector {
    std::vector<double> values;
    std::vector<std::uint8_t> mask;  // 1 = trainable

    int trainable_count() const;
    std::vector<double> gather_trainable() const;
    void scatter_trainable(std::span<const double> x);
    // compact a full-length gradient to trainable entries, ParamVector order
    std::vector<double> compact(std::span<const double> full) const;
};

struct Network {
    NetConfig cfg;
    ParamLayout layout;
    ParamVector params;

    // materialize the activation spec with current coefficient values
    ActivationSpec af_spec() const;
};

// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
// activation coefficients from init_activation; all-trainable mask.
ParamVector init_xavier(const NetConfig& cfg, std::uint64_t seed);
Network make_network(const NetConfig& cfg, std::uint64_t seed);

// Derivative carrier for one evaluation. Components of j beyond the
// requested orders are zero and guarded by the accessors.
struct DerivBundle {
    Jet j{};
    int t_order = 0, x_order = 0;

    double u() const { return j.c[0]; }
    double ut() const {
        if (t_order < 1) throw InvariantError("du_dt not requested");
        return j.c[1];
    }
    double ux() const {
        if (x_order < 1) throw InvariantError("du_dx not requested");
        return j.c[2];
    }
    double uxx() const {
        if (x_order < 2) throw InvariantError("d2u_dx2 not requested");
        return j.c[3];
    }
    double uxxx() const {
        if (x_order < 3) throw InvariantError("d3u_dx3 not requested");
        return j.c[4];
    }
};

// Reusable tape and scratch for forward/backward passes. resize() is
// idempotent for a fixed (cfg, nc, tape) triple.
struct EvalWorkspace {
    int nc = 0;
    bool tape = false;
    std::vector<int> sized_widths;          // shape this workspace was sized for
    std::vector<double> h0;                 // input jets
    std::vector<std::vector<double>> z;     // per layer pre-activation jets, comp-major
    std::vector<std::vector<double>> h;     // per hidden layer activated jets
    std::vector<std::vector<double>> sd;    // per hidden layer sigma derivs, 5 per neuron
    std::vector<double> zbar, hbar, af_scratch;
    ActivationSpec af_cache;                // coeffs refreshed per forward

    void resize(const NetConfig& cfg, int nc_, bool tape_);
};

// v(t, x) and requested partials, exact to roundoff. With tape=true the
// workspace retains everything backward_v needs.
DerivBundle forward_v(const Network& net, double t, double x, int t_order, int x_order,
                      EvalWorkspace& ws, bool tape = false);

// Accumulate d(sum_m vbar[m] * v.j.c[m])/d(theta) into grad_full (layout
// order, full length). Must follow a forward_v with tape=true on ws.
void backward_v(const Network& net, EvalWorkspace& ws, std::span<const double> vbar,
                std::span<double> grad_full);

// Hard-constraint transforms u = A(x) + B(t,x) v.
//   AC:      A = x^2 cos(pi x), B = t (1 - x^2)
//   Burgers: A = -sin(pi x),    B = t (1 - x^2)
//   KdV:     A = cos(pi x),     B = t
Jet ansatz_A(Equation eq, double x);             // [A, 0, A', A'', A''']
Jet ansatz_B(Equation eq, double t, double x);   // value and partials
DerivBundle ansatz_u(Equation eq, const DerivBundle& v, double t, double x);
// adjoint: ubar (5 comps) -> vbar (5 comps, accumulated)
void ansatz_vbar(Equation eq, double t, double x, std::span<const double> ubar,
                 std::span<double> vbar);

// Checkpoint: text header, then count little-endian f64 values.
void save_checkpoint(const std::string& path, const Network& net, Equation eq,
                     std::uint64_t seed);
struct Checkpoint {
    Network net;
    Equation eq;
    std::uint64_t seed;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pinn

#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "pinn/common.hpp"

namespace pinn {

// Truncated derivative carrier for scalar fields f(t, x). Components:
//   [0] value, [1] df/dt, [2] df/dx, [3] d2f/dx2, [4] d3f/dx3.
// This set is closed under +, *, and smooth unary composition: no rule
// below ever needs a mixed t-x derivative, so none are carried.
struct Jet {
    std::array<double, 5> c{};

    double val() const { return c[0]; }
    double dt() const { return c[1]; }
    double dx() const { return c[2]; }
    double dxx() const { return c[3]; }
    double dxxx() const { return c[4]; }

    static Jet constant(double v) { return Jet{{v, 0, 0, 0, 0}}; }
    // seed jets for the two independent variables
    static Jet var_t(double t) { return Jet{{t, 1, 0, 0, 0}}; }
    static Jet var_x(double x) { return Jet{{x, 0, 1, 0, 0}}; }
};

inline Jet operator+(const Jet& a, const Jet& b) {
    Jet r;
    for (int i = 0; i < 5; ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
    Jet r;
    for (int i = 0; i < 5; ++i) r.c[i] = a.c[i] - b.c[i];
    return r;
}

inline Jet operator-(const Jet& a) {
    Jet r;
    for (int i = 0; i < 5; ++i) r.c[i] = -a.c[i];
    return r;
}

inline Jet operator*(double s, const Jet& a) {
    Jet r;
    for (int i = 0; i < 5; ++i) r.c[i] = s * a.c[i];
    return r;
}

inline Jet operator*(const Jet& a, double s) { return s * a; }

// Leibniz product restricted to the carried components.
inline Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.c[0] = a.c[0] * b.c[0];
    r.c[1] = a.c[1] * b.c[0] + a.c[0] * b.c[1];
    r.c[2] = a.c[2] * b.c[0] + a.c[0] * b.c[2];
    r.c[3] = a.c[3] * b.c[0] + 2.0 * a.c[2] * b.c[2] + a.c[0] * b.c[3];
    r.c[4] = a.c[4] * b.c[0] + 3.0 * a.c[3] * b.c[2] + 3.0 * a.c[2] * b.c[3] + a.c[0] * b.c[4];
    return r;
}

// f(u) for scalar f with derivatives fd[m] = f^(m)(u.val()), m = 0..3.
// Faa di Bruno on the carried components.
inline Jet compose(const Jet& u, std::span<const double> fd) {
    Jet r;
    r.c[0] = fd[0];
    r.c[1] = fd[1] * u.c[1];
    r.c[2] = fd[1] * u.c[2];
    r.c[3] = fd[2] * u.c[2] * u.c[2] + fd[1] * u.c[3];
    r.c[4] = fd[3] * u.c[2] * u.c[2] * u.c[2] + 3.0 * fd[2] * u.c[2] * u.c[3] + fd[1] * u.c[4];
    return r;
}

// Adjoint of compose: given rbar[m] = dL/dr.c[m], accumulate dL/du.c[m]
// into ubar and return dL/d(u.val()) routed through the f^(m) factors.
// Needs fd up to order 4 because r.c[4] carries f''' of the value.
inline double compose_backward(const Jet& u, std::span<const double> fd,
                               std::span<const double> rbar, std::span<double> ubar) {
    double u2 = u.c[2], u3 = u.c[3];
    ubar[1] += rbar[1] * fd[1];
    ubar[2] += rbar[2] * fd[1] + rbar[3] * 2.0 * fd[2] * u2 +
               rbar[4] * (3.0 * fd[3] * u2 * u2 + 3.0 * fd[2] * u3);
    ubar[3] += rbar[3] * fd[1] + rbar[4] * 3.0 * fd[2] * u2;
    ubar[4] += rbar[4] * fd[1];
    double v = rbar[0] * fd[1] + rbar[1] * fd[2] * u.c[1] + rbar[2] * fd[2] * u2 +
               rbar[3] * (fd[3] * u2 * u2 + fd[2] * u3) +
               rbar[4] * (fd[4] * u2 * u2 * u2 + 3.0 * fd[3] * u2 * u3 + fd[2] * u.c[4]);
    ubar[0] += v;
    return v;
}

// Adjoint of the product r = a * b with respect to b only (a held fixed).
// Used where a is a known coefficient field of (t, x).
inline void product_backward_rhs(const Jet& a, std::span<const double> rbar,
                                 std::span<double> bbar) {
    bbar[0] += rbar[0] * a.c[0] + rbar[1] * a.c[1] + rbar[2] * a.c[2] + rbar[3] * a.c[3] +
               rbar[4] * a.c[4];
    bbar[1] += rbar[1] * a.c[0];
    bbar[2] += rbar[2] * a.c[0] + rbar[3] * 2.0 * a.c[2] + rbar[4] * 3.0 * a.c[3];
    bbar[3] += rbar[3] * a.c[0] + rbar[4] * 3.0 * a.c[2];
    bbar[4] += rbar[4] * a.c[0];
}

}  // namespace pinn

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pinn/activations.hpp"

using namespace pinn;

namespace {

// Central finite differences on apply(); independent oracle for the
// analytic derivative chains.
double fd_deriv(const ActivationSpec& spec, double z, int order, double h) {
    switch (order) {
        case 1: return (apply(spec, z + h) - apply(spec, z - h)) / (2 * h);
        case 2: return (apply(spec, z + h) - 2 * apply(spec, z) + apply(spec, z - h)) / (h * h);
        case 3:
            return (apply(spec, z + 2 * h) - 2 * apply(spec, z + h) + 2 * apply(spec, z - h) -
                    apply(spec, z - 2 * h)) /
                   (2 * h * h * h);
        case 4:
            return (apply(spec, z + 2 * h) - 4 * apply(spec, z + h) + 6 * apply(spec, z) -
                    4 * apply(spec, z - h) + apply(spec, z - 2 * h)) /
                   (h * h * h * h);
    }
    return 0.0;
}

ActivationSpec abu_tgs() {
    ActivationSpec s;
    s.family = ActFamily::ABU;
    s.n = 3;
    s.candidates = {Candidate::TanhC, Candidate::GELU, Candidate::Sigmoid};
    s.coeffs = {0.0, 0.0, 0.0, 1.0, 1.0, 1.0};
    return s;
}

}  // namespace

TEST_CASE("gate_weights basic properties") {
    // [TRIVIAL] uniform logits give the uniform gate
    auto g = gate_weights(std::vector<double>{0.0, 0.0, 0.0});
    CHECK(g[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(g[2] == doctest::Approx(1.0 / 3).epsilon(1e-15));

    // [DERIVED] long-double softmax oracle on an extreme spread; the
    // max-subtraction path must not overflow
    {
        std::vector<double> alpha = {1000.0, 0.0, 0.0};
        auto gw = gate_weights(alpha);
        long double e1 = expl(-1000.0L);
        long double denom = 1.0L + 2.0L * e1;
        CHECK(gw[0] == doctest::Approx(static_cast<double>(1.0L / denom)).epsilon(1e-15));
        CHECK(gw[1] == doctest::Approx(static_cast<double>(e1 / denom)).epsilon(1e-12));
        CHECK(std::isfinite(gw[1]));
    }

    // sum-to-one invariant across random-ish logits
    std::vector<double> alpha = {0.3, -2.5, 1.7, 0.0, 4.1};
    auto gw = gate_weights(alpha);
    double sum = 0.0;
    for (double x : gw) {
        CHECK(x > 0.0);
        sum += x;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-12);
}

TEST_CASE("gate_weights permutation equivariance") {
    std::vector<double> alpha = {0.8, -1.2, 2.4, 0.1};
    auto g = gate_weights(alpha);
    std::vector<int> perm = {2, 0, 3, 1};
    std::vector<double> alpha_p(4);
    for (int i = 0; i < 4; ++i) alpha_p[i] = alpha[perm[i]];
    auto g_p = gate_weights(alpha_p);
    for (int i = 0; i < 4; ++i) CHECK(g_p[i] == doctest::Approx(g[perm[i]]).epsilon(1e-15));
}

TEST_CASE("candidate values at anchor points") {
    // [DERIVED] closed-form values
    CHECK(candidate_derivs(Candidate::TanhC, 0.0)[0] == 0.0);
    CHECK(candidate_derivs(Candidate::TanhC, 0.0)[1] == 1.0);
    CHECK(candidate_derivs(Candidate::Sigmoid, 0.0)[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(candidate_derivs(Candidate::Sin, 0.0)[1] == 1.0);
    CHECK(candidate_derivs(Candidate::Exp, 1.0)[3] ==
          doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    // GELU(0) = 0, GELU'(0) = 1/2, GELU''(0) = 2 phi(0) = sqrt(2/pi)
    auto g0 = candidate_derivs(Candidate::GELU, 0.0);
    CHECK(g0[0] == 0.0);
    CHECK(g0[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g0[2] == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
    // softplus(0) = ln 2, softplus'(z) = sigmoid(z)
    auto sp = candidate_derivs(Candidate::Softplus, 0.0);
    CHECK(sp[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(sp[1] == doctest::Approx(0.5).epsilon(1e-15));
    // swish(1) = sigmoid(1)
    CHECK(candidate_derivs(Candidate::Swish, 1.0)[0] ==
          doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
    // ELU continuity at 0 from both sides
    CHECK(candidate_derivs(Candidate::ELU, 1e-300)[0] == doctest::Approx(0.0));
    CHECK(candidate_derivs(Candidate::ELU, -1e-12)[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("candidate derivative chains vs finite differences") {
    const Candidate cands[] = {Candidate::GELU,  Candidate::ELU, Candidate::Sigmoid,
                               Candidate::TanhC, Candidate::Sin, Candidate::Exp,
                               Candidate::Softplus, Candidate::Swish};
    const double zs[] = {-1.7, -0.6, 0.25, 1.3};
    for (Candidate c : cands) {
        for (double z : zs) {
            auto d = candidate_derivs(c, z);
            auto f = [&](double y) { return candidate_derivs(c, y)[0]; };
            double h1 = 1e-6, h2 = 1e-5, h3 = 1e-3, h4 = 5e-3;
            double fd1 = (f(z + h1) - f(z - h1)) / (2 * h1);
            double fd2 = (f(z + h2) - 2 * f(z) + f(z - h2)) / (h2 * h2);
            double fd3 =
                (f(z + 2 * h3) - 2 * f(z + h3) + 2 * f(z - h3) - f(z - 2 * h3)) / (2 * h3 * h3 * h3);
            double fd4 = (f(z + 2 * h4) - 4 * f(z + h4) + 6 * f(z) - 4 * f(z - h4) +
                          f(z - 2 * h4)) /
                         (h4 * h4 * h4 * h4);
            CHECK(std::fabs(d[1] - fd1) < 1e-6);
            CHECK(std::fabs(d[2] - fd2) < 1e-5);
            CHECK(std::fabs(d[3] - fd3) < 1e-4);
            CHECK(std::fabs(d[4] - fd4) < 5e-3);
        }
    }
}

TEST_CASE("x plus sin^2 values and derivatives") {
    ActivationSpec s;
    s.family = ActFamily::XPlusSinSq;
    // [TRIVIAL] f(0) = 0; [DERIVED] f(pi/2) = pi/2 + 1, f'(pi/4) = 2
    CHECK(apply(s, 0.0) == 0.0);
    CHECK(apply(s, std::numbers::pi / 2) ==
          doctest::Approx(std::numbers::pi / 2 + 1.0).epsilon(1e-15));
    double d[5];
    apply_derivs(s, std::numbers::pi / 4, 4, d);
    CHECK(d[1] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(d[2] == doctest::Approx(0.0));
    for (double z : {-1.1, 0.4, 2.3}) {
        apply_derivs(s, z, 4, d);
        for (int m = 1; m <= 3; ++m)
            CHECK(std::fabs(d[m] - fd_deriv(s, z, m, m == 3 ? 1e-3 : 1e-5)) < 1e-4);
    }
}

TEST_CASE("lctanh with one unit term reproduces tanh") {
    // [DERIVED] w=1, a=1, b=0 collapses to the parent on a dense grid
    ActivationSpec s;
    s.family = ActFamily::LCTanh;
    s.n = 1;
    s.coeffs = {1.0, 1.0, 0.0};
    for (int i = 0; i <= 1000; ++i) {
        double z = -5.0 + 0.01 * i;
        CHECK(std::fabs(apply(s, z) - std::tanh(z)) < 1e-15);
    }
    double d[5], dt[5];
    ActivationSpec t;
    apply_derivs(s, 0.7, 4, d);
    apply_derivs(t, 0.7, 4, dt);
    for (int m = 0; m <= 4; ++m) CHECK(d[m] == doctest::Approx(dt[m]).epsilon(1e-15));
}

TEST_CASE("lcsin evaluates the sine combination") {
    ActivationSpec s;
    s.family = ActFamily::LCSin;
    s.n = 2;
    s.coeffs = {0.5, 0.25, 1.0, 2.0, 0.0, 0.1};
    double z = 0.9;
    double expect = 0.5 * std::sin(z) + 0.25 * std::sin(2 * z + 0.1);
    CHECK(apply(s, z) == doctest::Approx(expect).epsilon(1e-15));
    double d[5];
    apply_derivs(s, z, 3, d);
    CHECK(d[1] == doctest::Approx(0.5 * std::cos(z) + 0.5 * std::cos(2 * z + 0.1)).epsilon(1e-14));
}

TEST_CASE("abu with uniform gate averages its candidates") {
    // [DERIVED] alpha = 0, beta = 1: plain mean of tanh, gelu, sigmoid
    ActivationSpec s = abu_tgs();
    double z = 0.5;
    double mean = (candidate_derivs(Candidate::TanhC, z)[0] +
                   candidate_derivs(Candidate::GELU, z)[0] +
                   candidate_derivs(Candidate::Sigmoid, z)[0]) /
                  3.0;
    CHECK(apply(s, z) == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("family derivatives vs finite differences") {
    std::vector<ActivationSpec> specs;
    specs.push_back(abu_tgs());
    {
        ActivationSpec s = abu_tgs();
        s.coeffs = {0.4, -0.3, 0.9, 1.2, 0.7, -0.5};  // skewed gate, mixed slopes
        specs.push_back(s);
    }
    {
        ActivationSpec s;
        s.family = ActFamily::LCTanh;
        s.n = 3;
        s.coeffs = {0.5, -0.2, 0.4, 1.1, 0.6, -0.9, 0.05, -0.3, 0.2};
        specs.push_back(s);
    }
    {
        ActivationSpec s;
        s.family = ActFamily::LCSin;
        s.n = 3;
        s.coeffs = {0.4, 0.3, -0.1, 1.0, 2.2, 0.7, 0.0, -0.4, 0.9};
        specs.push_back(s);
    }
    {
        ActivationSpec s;
        s.family = ActFamily::LCXSinSq;
        s.n = 2;
        s.coeffs = {0.6, 0.2, 0.5, 0.8, 1.3, 0.9, -0.2, 0.35};
        specs.push_back(s);
    }
    for (const auto& s : specs) {
        s.validate();
        for (double z : {-1.4, -0.3, 0.55, 1.8}) {
            double d[5];
            apply_derivs(s, z, 4, d);
            CHECK(std::fabs(d[1] - fd_deriv(s, z, 1, 1e-6)) < 1e-6);
            CHECK(std::fabs(d[2] - fd_deriv(s, z, 2, 1e-5)) < 1e-5);
            CHECK(std::fabs(d[3] - fd_deriv(s, z, 3, 1e-3)) < 1e-4);
            CHECK(std::fabs(d[4] - fd_deriv(s, z, 4, 5e-3)) < 5e-3);
        }
    }
}

TEST_CASE("coefficient partials vs finite differences") {
    std::vector<ActivationSpec> specs;
    {
        ActivationSpec s = abu_tgs();
        s.coeffs = {0.4, -0.3, 0.9, 1.2, 0.7, -0.5};
        specs.push_back(s);
    }
    {
        ActivationSpec s;
        s.family = ActFamily::LCTanh;
        s.n = 2;
        s.coeffs = {0.5, -0.2, 1.1, 0.6, 0.05, -0.3};
        specs.push_back(s);
    }
    {
        ActivationSpec s;
        s.family = ActFamily::LCSin;
        s.n = 2;
        s.coeffs = {0.4, 0.3, 1.0, 2.2, 0.0, -0.4};
        specs.push_back(s);
    }
    {
        ActivationSpec s;
        s.family = ActFamily::LCXSinSq;
        s.n = 2;
        s.coeffs = {0.6, 0.2, 0.5, 0.8, 1.3, 0.9, -0.2, 0.35};
        specs.push_back(s);
    }
    const int order = 3;
    for (const auto& s : specs) {
        const int nc = s.coeff_count();
        for (double z : {-0.8, 0.45, 1.6}) {
            std::vector<double> part(nc * (order + 1));
            apply_coeff_derivs(s, z, order, part);
            for (int j = 0; j < nc; ++j) {
                const double h = 1e-6;
                ActivationSpec sp = s, sm = s;
                sp.coeffs[j] += h;
                sm.coeffs[j] -= h;
                double dp[4], dm[4];
                apply_derivs(sp, z, order, dp);
                apply_derivs(sm, z, order, dm);
                for (int m = 0; m <= order; ++m) {
                    double fd = (dp[m] - dm[m]) / (2 * h);
                    CHECK(std::fabs(part[j * (order + 1) + m] - fd) < 2e-5);
                }
            }
        }
    }
}

TEST_CASE("parent families have no coefficient partials") {
    ActivationSpec s;
    s.family = ActFamily::Tanh;
    CHECK(s.coeff_count() == 0);
    s.family = ActFamily::XPlusSinSq;
    CHECK(s.coeff_count() == 0);
}

TEST_CASE("validate rejects malformed specs") {
    ActivationSpec s;
    s.family = ActFamily::ABU;
    s.n = 2;  // below the 3-candidate minimum
    s.coeffs.assign(4, 0.0);
    s.candidates = {Candidate::TanhC, Candidate::GELU};
    CHECK_THROWS_AS(s.validate(), ConfigError);

    s.n = 3;
    s.coeffs.assign(6, 0.0);
    s.candidates = {Candidate::TanhC, Candidate::GELU, Candidate::TanhC};  // duplicate
    CHECK_THROWS_AS(s.validate(), ConfigError);

    ActivationSpec lc;
    lc.family = ActFamily::LCTanh;
    lc.n = 3;
    lc.coeffs.assign(8, 0.1);  // should be 9
    CHECK_THROWS_AS(lc.validate(), ConfigError);
}

TEST_CASE("initialization starts near the parent function") {
    // ABU: uniform gate, unit slopes
    auto abu = init_activation(ActFamily::ABU, 3, 42,
                               {Candidate::TanhC, Candidate::GELU, Candidate::Sigmoid});
    for (int i = 0; i < 3; ++i) {
        CHECK(abu.coeffs[i] == 0.0);
        CHECK(abu.coeffs[3 + i] == 1.0);
    }

    // LCSin n=3: close to sin across a sweep
    auto lcs = init_activation(ActFamily::LCSin, 3, 7);
    for (int i = 0; i <= 100; ++i) {
        double z = -2.0 + 0.04 * i;
        CHECK(std::fabs(apply(lcs, z) - std::sin(z)) < 0.05);
    }

    // LCTanh n=3: close to tanh
    auto lct = init_activation(ActFamily::LCTanh, 3, 11);
    for (int i = 0; i <= 100; ++i) {
        double z = -2.0 + 0.04 * i;
        CHECK(std::fabs(apply(lct, z) - std::tanh(z)) < 0.05);
    }

    // LCXSinSq n=2: close to the x + sin^2 parent
    auto lcx = init_activation(ActFamily::LCXSinSq, 2, 3);
    ActivationSpec parent;
    parent.family = ActFamily::XPlusSinSq;
    for (int i = 0; i <= 100; ++i) {
        double z = -2.0 + 0.04 * i;
        CHECK(std::fabs(apply(lcx, z) - apply(parent, z)) < 0.1);
    }

    // determinism: same seed, same coefficients
    auto again = init_activation(ActFamily::LCSin, 3, 7);
    CHECK(again.coeffs == lcs.coeffs);
    auto other = init_activation(ActFamily::LCSin, 3, 8);
    CHECK(other.coeffs != lcs.coeffs);
}

TEST_CASE("string round trips") {
    for (ActFamily f : {ActFamily::Tanh, ActFamily::XPlusSinSq, ActFamily::ABU, ActFamily::LCTanh,
                        ActFamily::LCSin, ActFamily::LCXSinSq})
        CHECK(act_family_from_string(to_string(f)) == f);
    for (Candidate c : {Candidate::GELU, Candidate::ELU, Candidate::Sigmoid, Candidate::TanhC,
                        Candidate::Sin, Candidate::Exp, Candidate::Softplus, Candidate::Swish})
        CHECK(candidate_from_string(to_string(c)) == c);
    CHECK_THROWS_AS(act_family_from_string("relu"), ConfigError);
}

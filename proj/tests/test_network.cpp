#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "pinn/network.hpp"

using namespace pinn;

namespace {

NetConfig config_for(ActFamily fam) {
    NetConfig cfg;
    cfg.family = fam;
    switch (fam) {
        case ActFamily::Tanh:
        case ActFamily::XPlusSinSq: cfg.af_n = 1; break;
        case ActFamily::ABU:
            cfg.af_n = 3;
            cfg.candidates = {Candidate::TanhC, Candidate::GELU, Candidate::Sigmoid};
            break;
        case ActFamily::LCTanh:
        case ActFamily::LCSin: cfg.af_n = 3; break;
        case ActFamily::LCXSinSq: cfg.af_n = 2; break;
    }
    return cfg;
}

// randomize the activation-coefficient segment so oracles exercise
// non-initial coefficient values
void jitter_af(Network& net, Rng& rng) {
    for (int i = 0; i < net.layout.af_count; ++i)
        net.params.values[net.layout.af_off + i] += rng.uniform(-0.3, 0.3);
}

double value_at(const Network& net, double t, double x, EvalWorkspace& ws) {
    return forward_v(net, t, x, 0, 0, ws).u();
}

// 4th-order central first derivative
template <typename F>
double fd1(F f, double x0, double h) {
    return (-f(x0 + 2 * h) + 8 * f(x0 + h) - 8 * f(x0 - h) + f(x0 - 2 * h)) / (12 * h);
}

// 4th-order central second derivative
template <typename F>
double fd2(F f, double x0, double h) {
    return (-f(x0 + 2 * h) + 16 * f(x0 + h) - 30 * f(x0) + 16 * f(x0 - h) - f(x0 - 2 * h)) /
           (12 * h * h);
}

const ActFamily kFamilies[] = {ActFamily::Tanh,   ActFamily::XPlusSinSq, ActFamily::ABU,
                               ActFamily::LCTanh, ActFamily::LCSin,      ActFamily::LCXSinSq};

}  // namespace

TEST_CASE("layout covers the vector exactly once") {
    NetConfig cfg = config_for(ActFamily::LCTanh);
    ParamLayout L = ParamLayout::make(cfg);
    // expected: (2*32+32) + 5*(32*32+32) + (32*1+1) = 5409 weights+biases
    CHECK(L.af_off == 5409);
    CHECK(L.af_count == 9);
    CHECK(L.total == 5418);
    int off = 0;
    for (const auto& lay : L.layers) {
        CHECK(lay.w_off == off);
        off += lay.in * lay.out;
        CHECK(lay.b_off == off);
        off += lay.out;
    }
    CHECK(off == L.af_off);
}

TEST_CASE("xavier initialization is deterministic and bounded") {
    NetConfig cfg = config_for(ActFamily::Tanh);
    ParamVector a = init_xavier(cfg, 42);
    ParamVector b = init_xavier(cfg, 42);
    CHECK(a.values == b.values);
    ParamVector c = init_xavier(cfg, 43);
    CHECK(a.values != c.values);

    ParamLayout L = ParamLayout::make(cfg);
    double bound1 = std::sqrt(6.0 / (2 + 32));
    for (int i = 0; i < 64; ++i) {
        CHECK(std::fabs(a.values[L.layers[0].w_off + i]) <= bound1);
    }
    for (const auto& lay : L.layers)
        for (int i = 0; i < lay.out; ++i) CHECK(a.values[lay.b_off + i] == 0.0);

    // [DERIVED] moment check: variance of uniform(-b, b) is b^2/3
    double sum = 0, sum2 = 0;
    int n = 0;
    for (std::uint64_t seed = 0; seed < 160; ++seed) {
        ParamVector p = init_xavier(cfg, seed);
        for (int i = 0; i < 64; ++i) {
            double w = p.values[L.layers[0].w_off + i];
            sum += w;
            sum2 += w * w;
            ++n;
        }
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    CHECK(std::fabs(var - bound1 * bound1 / 3.0) < 0.1 * bound1 * bound1 / 3.0);
}

TEST_CASE("zero network evaluates to zero with zero derivatives") {
    Network net = make_network(config_for(ActFamily::Tanh), 1);
    std::fill(net.params.values.begin(), net.params.values.end(), 0.0);
    EvalWorkspace ws;
    DerivBundle v = forward_v(net, 0.3, -0.4, 1, 3, ws);
    for (double c : v.j.c) CHECK(c == 0.0);
}

TEST_CASE("single linear layer has constant jacobian") {
    NetConfig cfg;
    cfg.widths = {2, 1};
    Network net = make_network(cfg, 5);
    net.params.values[0] = 0.7;   // weight on t
    net.params.values[1] = -1.3;  // weight on x
    net.params.values[2] = 0.25;  // bias
    EvalWorkspace ws;
    DerivBundle v = forward_v(net, 0.3, 0.5, 1, 1, ws);
    CHECK(v.u() == doctest::Approx(0.7 * 0.3 - 1.3 * 0.5 + 0.25).epsilon(1e-15));
    CHECK(v.ut() == 0.7);
    CHECK(v.ux() == -1.3);
}

TEST_CASE("derivative orders match finite differences across families") {
    EvalWorkspace ws, ws2;
    for (ActFamily fam : kFamilies) {
        Rng rng = Rng::child(99, to_string(fam));
        for (int trial = 0; trial < 100; ++trial) {
            Network net = make_network(config_for(fam), 1000 + trial);
            jitter_af(net, rng);
            double t = rng.uniform(0.05, 0.95);
            double x = rng.uniform(-0.9, 0.9);
            DerivBundle v = forward_v(net, t, x, 1, 3, ws);

            auto f_of_t = [&](double tt) { return value_at(net, tt, x, ws2); };
            auto f_of_x = [&](double xx) { return value_at(net, t, xx, ws2); };
            double dt_fd = fd1(f_of_t, t, 1e-4);
            double dx_fd = fd1(f_of_x, x, 1e-4);
            double dxx_fd = fd2(f_of_x, x, 1e-3);
            auto uxx_of_x = [&](double xx) { return forward_v(net, t, xx, 0, 2, ws2).uxx(); };
            double dxxx_fd = fd1(uxx_of_x, x, 1e-3);

            CHECK(rel_diff(v.ut(), dt_fd, 1e-3) < 1e-6);
            CHECK(rel_diff(v.ux(), dx_fd, 1e-3) < 1e-6);
            CHECK(rel_diff(v.uxx(), dxx_fd, 1e-2) < 1e-5);
            CHECK(rel_diff(v.uxxx(), dxxx_fd, 1e-1) < 1e-4);
        }
    }
}

TEST_CASE("forward is bit-deterministic") {
    Network net = make_network(config_for(ActFamily::LCSin), 7);
    EvalWorkspace ws1, ws2;
    DerivBundle a = forward_v(net, 0.42, -0.17, 1, 3, ws1);
    DerivBundle b = forward_v(net, 0.42, -0.17, 1, 3, ws2);
    for (int i = 0; i < 5; ++i) CHECK(a.j.c[i] == b.j.c[i]);
}

TEST_CASE("bundle accessors guard missing orders") {
    Network net = make_network(config_for(ActFamily::Tanh), 3);
    EvalWorkspace ws;
    DerivBundle v = forward_v(net, 0.2, 0.1, 0, 1, ws);
    CHECK_NOTHROW(v.u());
    CHECK_NOTHROW(v.ux());
    CHECK_THROWS_AS(v.ut(), InvariantError);
    CHECK_THROWS_AS(v.uxx(), InvariantError);
    CHECK_THROWS_AS(v.uxxx(), InvariantError);
}

TEST_CASE("parameter gradients match finite differences for every family") {
    for (ActFamily fam : kFamilies) {
        Rng rng = Rng::child(55, to_string(fam));
        Network net = make_network(config_for(fam), 17);
        jitter_af(net, rng);
        const double t = 0.63, x = -0.28;
        std::array<double, 5> vbar;
        for (auto& s : vbar) s = rng.uniform(-1.0, 1.0);

        EvalWorkspace ws;
        forward_v(net, t, x, 1, 3, ws, true);
        std::vector<double> grad(net.layout.total, 0.0);
        backward_v(net, ws, vbar, grad);

        auto loss = [&](Network& nn) {
            EvalWorkspace w2;
            DerivBundle v = forward_v(nn, t, x, 1, 3, w2);
            double L = 0;
            for (int m = 0; m < 5; ++m) L += vbar[m] * v.j.c[m];
            return L;
        };
        // stratified parameter subset: spread through the layers plus the
        // whole activation segment
        std::vector<int> idx;
        for (const auto& lay : net.layout.layers) {
            idx.push_back(lay.w_off);
            idx.push_back(lay.w_off + lay.in * lay.out / 2);
            idx.push_back(lay.b_off);
            idx.push_back(lay.b_off + lay.out - 1);
        }
        for (int i = 0; i < net.layout.af_count; ++i) idx.push_back(net.layout.af_off + i);
        for (int k : idx) {
            const double h = 1e-5;
            Network np = net, nm = net;
            np.params.values[k] += h;
            nm.params.values[k] -= h;
            double fd = (loss(np) - loss(nm)) / (2 * h);
            CHECK(rel_diff(grad[k], fd, 1e-4) < 1e-4);
        }
    }
}

TEST_CASE("backward is linear in the seed vector") {
    Network net = make_network(config_for(ActFamily::ABU), 23);
    EvalWorkspace ws;
    forward_v(net, 0.4, 0.2, 1, 3, ws, true);
    std::array<double, 5> s1 = {1.0, -0.5, 0.25, 2.0, -1.5};
    std::array<double, 5> s2 = {-0.3, 0.8, 1.1, -0.2, 0.6};
    std::array<double, 5> mix;
    const double a = 0.7, b = -1.9;
    for (int i = 0; i < 5; ++i) mix[i] = a * s1[i] + b * s2[i];
    std::vector<double> g1(net.layout.total, 0.0), g2(net.layout.total, 0.0),
        gm(net.layout.total, 0.0);
    backward_v(net, ws, s1, g1);
    backward_v(net, ws, s2, g2);
    backward_v(net, ws, mix, gm);
    for (int k = 0; k < net.layout.total; k += 97)
        CHECK(rel_diff(gm[k], a * g1[k] + b * g2[k], 1e-10) < 1e-12);
}

TEST_CASE("trainable mask gather scatter compact roundtrip") {
    Network net = make_network(config_for(ActFamily::LCTanh), 9);
    auto& p = net.params;
    // freeze everything but the last linear layer and the af segment
    std::fill(p.mask.begin(), p.mask.end(), 0);
    const auto& last = net.layout.layers.back();
    for (int i = last.w_off; i < last.b_off + last.out; ++i) p.mask[i] = 1;
    for (int i = 0; i < net.layout.af_count; ++i) p.mask[net.layout.af_off + i] = 1;
    CHECK(p.trainable_count() == 33 + 9);

    auto x = p.gather_trainable();
    CHECK(static_cast<int>(x.size()) == 42);
    for (auto& xi : x) xi += 1.0;
    auto before = p.values;
    p.scatter_trainable(x);
    int changed = 0;
    for (std::size_t i = 0; i < p.values.size(); ++i)
        if (p.values[i] != before[i]) ++changed;
    CHECK(changed == 42);

    std::vector<double> full(p.values.size());
    for (std::size_t i = 0; i < full.size(); ++i) full[i] = static_cast<double>(i);
    auto comp = p.compact(full);
    CHECK(comp.size() == 42u);
    CHECK(comp[0] == static_cast<double>(last.w_off));
}

TEST_CASE("ansatz honors initial and boundary conditions exactly") {
    // [TRIVIAL] B vanishes at t=0 for all equations, and at x = +-1 for
    // the Dirichlet equations, so u reduces to A there.
    EvalWorkspace ws;
    for (Equation eq : {Equation::AC, Equation::Burgers, Equation::KdV}) {
        Rng rng = Rng::child(31, to_string(eq));
        for (int trial = 0; trial < 1000; ++trial) {
            Network net = make_network(config_for(ActFamily::LCTanh), 5000 + trial);
            double t = rng.uniform(0.0, 1.0);
            double x = rng.uniform(-1.0, 1.0);
            // initial condition at t = 0
            DerivBundle v0 = forward_v(net, 0.0, x, 0, 0, ws);
            DerivBundle u0 = ansatz_u(eq, v0, 0.0, x);
            double ic = eq == Equation::AC    ? x * x * std::cos(std::numbers::pi * x)
                        : eq == Equation::KdV ? std::cos(std::numbers::pi * x)
                                              : -std::sin(std::numbers::pi * x);
            CHECK(std::fabs(u0.u() - ic) < 1e-12);
            if (eq != Equation::KdV) {
                for (double xb : {-1.0, 1.0}) {
                    DerivBundle vb = forward_v(net, t, xb, 0, 0, ws);
                    DerivBundle ub = ansatz_u(eq, vb, t, xb);
                    double bc = eq == Equation::AC ? -1.0 : 0.0;
                    CHECK(std::fabs(ub.u() - bc) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("ansatz with constant v matches the closed form") {
    // v identically 1: u = A(x) + B(t,x), all derivatives analytic
    DerivBundle v;
    v.t_order = 1;
    v.x_order = 2;
    v.j = Jet::constant(1.0);
    const double t = 0.5, x = 0.3, pi = std::numbers::pi;
    DerivBundle u = ansatz_u(Equation::AC, v, t, x);
    double A = x * x * std::cos(pi * x);
    double Axx = 2 * std::cos(pi * x) - 4 * pi * x * std::sin(pi * x) -
                 pi * pi * x * x * std::cos(pi * x);
    CHECK(u.u() == doctest::Approx(A + t * (1 - x * x)).epsilon(1e-15));
    CHECK(u.ut() == doctest::Approx(1 - x * x).epsilon(1e-15));
    CHECK(u.uxx() == doctest::Approx(Axx - 2 * t).epsilon(1e-14));
}

TEST_CASE("ansatz derivatives match finite differences of composed u") {
    EvalWorkspace ws, ws2;
    for (Equation eq : {Equation::AC, Equation::Burgers, Equation::KdV}) {
        Network net = make_network(config_for(ActFamily::XPlusSinSq), 77);
        auto u_val = [&](double tt, double xx) {
            DerivBundle v = forward_v(net, tt, xx, 0, 0, ws2);
            return ansatz_u(eq, v, tt, xx).u();
        };
        const double t = 0.44, x = 0.12;
        DerivBundle v = forward_v(net, t, x, 1, 3, ws);
        DerivBundle u = ansatz_u(eq, v, t, x);
        auto f_of_t = [&](double tt) { return u_val(tt, x); };
        auto f_of_x = [&](double xx) { return u_val(t, xx); };
        CHECK(rel_diff(u.ut(), fd1(f_of_t, t, 1e-4), 1e-3) < 1e-6);
        CHECK(rel_diff(u.ux(), fd1(f_of_x, x, 1e-4), 1e-3) < 1e-6);
        CHECK(rel_diff(u.uxx(), fd2(f_of_x, x, 1e-3), 1e-2) < 1e-5);
        auto uxx_of_x = [&](double xx) {
            DerivBundle vv = forward_v(net, t, xx, 0, 2, ws2);
            return ansatz_u(eq, vv, t, xx).uxx();
        };
        CHECK(rel_diff(u.uxxx(), fd1(uxx_of_x, x, 1e-3), 1e-1) < 1e-4);
    }
}

TEST_CASE("ansatz_vbar is the adjoint of the v to u map") {
    Rng rng(12345);
    for (Equation eq : {Equation::AC, Equation::Burgers, Equation::KdV}) {
        const double t = 0.37, x = -0.61;
        std::array<double, 5> ubar;
        for (auto& s : ubar) s = rng.uniform(-1.0, 1.0);
        std::array<double, 5> vbar{};
        ansatz_vbar(eq, t, x, ubar, vbar);
        // directional check: <ubar, d(u)/d(v_k)> == vbar[k]; u is linear
        // in v so a wide central step is exact
        for (int k = 0; k < 5; ++k) {
            DerivBundle vp, vm;
            vp.t_order = vm.t_order = 1;
            vp.x_order = vm.x_order = 3;
            const double h = 0.5;
            vp.j.c[k] = h;
            vm.j.c[k] = -h;
            Jet up = ansatz_u(eq, vp, t, x).j;
            Jet um = ansatz_u(eq, vm, t, x).j;
            double dir = 0;
            for (int m = 0; m < 5; ++m) dir += ubar[m] * (up.c[m] - um.c[m]) / (2 * h);
            CHECK(rel_diff(vbar[k], dir, 1e-8) < 1e-9);
        }
    }
}

TEST_CASE("checkpoint roundtrip preserves every bit") {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "pinn_ckpt_test.bin";
    Network net = make_network(config_for(ActFamily::ABU), 321);
    save_checkpoint(p.string(), net, Equation::KdV, 321);
    Checkpoint ck = load_checkpoint(p.string());
    CHECK(ck.eq == Equation::KdV);
    CHECK(ck.seed == 321);
    CHECK(ck.net.cfg.widths == net.cfg.widths);
    CHECK(ck.net.cfg.family == ActFamily::ABU);
    CHECK(ck.net.cfg.candidates == net.cfg.candidates);
    CHECK(ck.net.params.values == net.params.values);
    fs::remove(p);

    CHECK_THROWS_AS(load_checkpoint((fs::temp_directory_path() / "missing_ckpt").string()),
                    ConfigError);
    // corrupted magic
    fs::path bad = fs::temp_directory_path() / "pinn_ckpt_bad.bin";
    {
        std::FILE* f = std::fopen(bad.string().c_str(), "wb");
        std::fputs("not a checkpoint\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_checkpoint(bad.string()), ConfigError);
    fs::remove(bad);
}

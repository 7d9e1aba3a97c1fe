#include "pinn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace pinn {

const char* to_string(Equation e) {
    switch (e) {
        case Equation::AC: return "ac";
        case Equation::KdV: return "kdv";
        case Equation::Burgers: return "burgers";
    }
    return "?";
}

Equation equation_from_string(const std::string& s) {
    if (s == "ac" || s == "allen-cahn") return Equation::AC;
    if (s == "kdv") return Equation::KdV;
    if (s == "burgers") return Equation::Burgers;
    throw ConfigError("unknown equation: " + s);
}

ActivationSpec NetConfig::af_template() const {
    ActivationSpec s;
    s.family = family;
    s.n = af_n;
    s.candidates = candidates;
    s.coeffs.assign(s.coeff_count(), 0.0);
    return s;
}

void NetConfig::validate() const {
    if (widths.size() < 2) throw ConfigError("network needs at least one linear layer");
    if (widths.front() != 2) throw ConfigError("network input width must be 2 (t, x)");
    if (widths.back() != 1) throw ConfigError("network output width must be 1");
    for (int w : widths)
        if (w < 1) throw ConfigError("layer width must be positive");
    af_template().validate();
}

ParamLayout ParamLayout::make(const NetConfig& cfg) {
    ParamLayout L;
    int off = 0;
    for (int l = 0; l + 1 < static_cast<int>(cfg.widths.size()); ++l) {
        Layer lay;
        lay.in = cfg.widths[l];
        lay.out = cfg.widths[l + 1];
        lay.w_off = off;
        off += lay.in * lay.out;
        lay.b_off = off;
        off += lay.out;
        L.layers.push_back(lay);
    }
    L.af_off = off;
    L.af_count = cfg.af_template().coeff_count();
    L.total = off + L.af_count;
    return L;
}

int ParamVector::trainable_count() const {
    int n = 0;
    for (auto m : mask) n += m;
    return n;
}

std::vector<double> ParamVector::gather_trainable() const {
    std::vector<double> x;
    x.reserve(trainable_count());
    for (std::size_t i = 0; i < values.size(); ++i)
        if (mask[i]) x.push_back(values[i]);
    return x;
}

void ParamVector::scatter_trainable(std::span<const double> x) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (mask[i]) values[i] = x[k++];
    if (k != x.size()) throw InvariantError("scatter_trainable: length mismatch");
}

std::vector<double> ParamVector::compact(std::span<const double> full) const {
    if (full.size() != values.size()) throw InvariantError("compact: length mismatch");
    std::vector<double> g;
    g.reserve(trainable_count());
    for (std::size_t i = 0; i < full.size(); ++i)
        if (mask[i]) g.push_back(full[i]);
    return g;
}

ActivationSpec Network::af_spec() const {
    ActivationSpec s = cfg.af_template();
    for (int i = 0; i < layout.af_count; ++i) s.coeffs[i] = params.values[layout.af_off + i];
    return s;
}

ParamVector init_xavier(const NetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ParamLayout L = ParamLayout::make(cfg);
    ParamVector p;
    p.values.assign(L.total, 0.0);
    p.mask.assign(L.total, 1);
    Rng rng = Rng::child(seed, "xavier");
    for (const auto& lay : L.layers) {
        double bound = std::sqrt(6.0 / (lay.in + lay.out));
        for (int i = 0; i < lay.in * lay.out; ++i)
            p.values[lay.w_off + i] = rng.uniform(-bound, bound);
        // biases stay zero
    }
    ActivationSpec af = init_activation(cfg.family, cfg.af_n, seed, cfg.candidates);
    for (int i = 0; i < L.af_count; ++i) p.values[L.af_off + i] = af.coeffs[i];
    return p;
}

Network make_network(const NetConfig& cfg, std::uint64_t seed) {
    Network net;
    net.cfg = cfg;
    net.layout = ParamLayout::make(cfg);
    net.params = init_xavier(cfg, seed);
    return net;
}

void EvalWorkspace::resize(const NetConfig& cfg, int nc_, bool tape_) {
    const int L = cfg.n_linear();
    nc = nc_;
    tape = tape_;
    sized_widths = cfg.widths;
    h0.assign(static_cast<std::size_t>(nc) * 2, 0.0);
    z.resize(L);
    h.resize(L);
    sd.resize(L);
    int maxw = 0;
    for (int l = 0; l < L; ++l) {
        int wo = cfg.widths[l + 1];
        maxw = std::max(maxw, std::max(wo, cfg.widths[l]));
        z[l].assign(static_cast<std::size_t>(nc) * wo, 0.0);
        if (l + 1 < L) {
            h[l].assign(static_cast<std::size_t>(nc) * wo, 0.0);
            sd[l].assign(static_cast<std::size_t>(5) * wo, 0.0);
        }
    }
    if (tape) {
        zbar.assign(static_cast<std::size_t>(nc) * maxw, 0.0);
        hbar.assign(static_cast<std::size_t>(nc) * maxw, 0.0);
    }
    af_cache = cfg.af_template();
    af_scratch.assign(static_cast<std::size_t>(std::max(1, af_cache.coeff_count())) * 4, 0.0);
}

namespace {

const ActivationSpec& tanh_spec() {
    static const ActivationSpec s;  // defaults to Tanh, n = 1
    return s;
}

// jets through the activation: inputs z (nc comps), sigma derivs sdv
// (orders 0..4), outputs h (nc comps). Strides are the layer width.
inline void compose_neuron(const double* zc, double* hc, const double* sdv, int nc, int w) {
    hc[0] = sdv[0];
    if (nc > 1) hc[w] = sdv[1] * zc[w];
    if (nc > 2) hc[2 * w] = sdv[1] * zc[2 * w];
    if (nc > 3) {
        double zx = zc[2 * w];
        hc[3 * w] = sdv[2] * zx * zx + sdv[1] * zc[3 * w];
        if (nc > 4)
            hc[4 * w] = sdv[3] * zx * zx * zx + 3.0 * sdv[2] * zx * zc[3 * w] + sdv[1] * zc[4 * w];
    }
}

}  // namespace

DerivBundle forward_v(const Network& net, double t, double x, int t_order, int x_order,
                      EvalWorkspace& ws, bool tape) {
    if (t_order < 0 || t_order > 1 || x_order < 0 || x_order > 3)
        throw ConfigError("forward_v: unsupported derivative order");
    if (!std::isfinite(t) || !std::isfinite(x)) throw NumericError("forward_v: non-finite input");
    const NetConfig& cfg = net.cfg;
    const int L = cfg.n_linear();
    const int nc = x_order == 0 ? (t_order ? 2 : 1) : 2 + x_order;
    if (ws.nc != nc || ws.tape != tape || ws.sized_widths != cfg.widths ||
        ws.af_cache.family != cfg.family || ws.af_cache.n != cfg.af_n ||
        ws.af_cache.candidates != cfg.candidates)
        ws.resize(cfg, nc, tape);

    // input jets: component-major, width 2
    ws.h0[0] = t;
    ws.h0[1] = x;
    if (nc > 1) {
        ws.h0[2] = 1.0;  // dt of t
        ws.h0[3] = 0.0;
    }
    if (nc > 2) {
        ws.h0[4] = 0.0;
        ws.h0[5] = 1.0;  // dx of x
    }
    for (int c = 3; c < nc; ++c) {
        ws.h0[2 * c] = 0.0;
        ws.h0[2 * c + 1] = 0.0;
    }

    // refresh activation coefficients from the parameter vector
    for (int i = 0; i < net.layout.af_count; ++i)
        ws.af_cache.coeffs[i] = net.params.values[net.layout.af_off + i];

    const int sig_order = std::min(tape ? nc : nc - 1, kMaxDerivOrder);
    const double* vals = net.params.values.data();
    const double* hp = ws.h0.data();
    for (int l = 0; l < L; ++l) {
        const auto& lay = net.layout.layers[l];
        const double* W = vals + lay.w_off;
        const double* b = vals + lay.b_off;
        double* zl = ws.z[l].data();
        // z = W h (+ b on the value component)
        for (int c = 0; c < nc; ++c) {
            const double* hc = hp + static_cast<std::size_t>(c) * lay.in;
            double* zc = zl + static_cast<std::size_t>(c) * lay.out;
            for (int i = 0; i < lay.out; ++i) {
                const double* wrow = W + static_cast<std::size_t>(i) * lay.in;
                double acc = c == 0 ? b[i] : 0.0;
                for (int j = 0; j < lay.in; ++j) acc += wrow[j] * hc[j];
                zc[i] = acc;
            }
        }
        if (l + 1 == L) break;  // output layer is linear
        const ActivationSpec& act = (l == L - 2) ? ws.af_cache : tanh_spec();
        double* hl = ws.h[l].data();
        double* sdl = ws.sd[l].data();
        for (int i = 0; i < lay.out; ++i) {
            double* sdv = sdl + static_cast<std::size_t>(5) * i;
            apply_derivs(act, zl[i], sig_order, std::span<double>(sdv, 5));
            if (!std::isfinite(sdv[0]))
                throw NumericError("forward_v: non-finite activation at layer " +
                                   std::to_string(l));
            compose_neuron(zl + i, hl + i, sdv, nc, lay.out);
        }
        hp = hl;
    }

    DerivBundle out;
    out.t_order = t_order;
    out.x_order = x_order;
    const double* zo = ws.z[L - 1].data();
    out.j.c[0] = zo[0];
    if (nc > 1 && t_order >= 1) out.j.c[1] = zo[1];
    for (int k = 1; k <= x_order; ++k) out.j.c[1 + k] = zo[1 + k];
    if (!all_finite(out.j.c)) throw NumericError("forward_v: non-finite output");
    return out;
}

void backward_v(const Network& net, EvalWorkspace& ws, std::span<const double> vbar,
                std::span<double> grad_full) {
    if (!ws.tape) throw InvariantError("backward_v: workspace has no tape");
    const NetConfig& cfg = net.cfg;
    const int L = cfg.n_linear();
    const int nc = ws.nc;
    const double* vals = net.params.values.data();

    // seed adjoint of the output layer (single neuron)
    double* zb = ws.zbar.data();
    double* hb = ws.hbar.data();
    for (int c = 0; c < nc; ++c) zb[c] = vbar[c];

    for (int l = L - 1; l >= 0; --l) {
        const auto& lay = net.layout.layers[l];
        const double* W = vals + lay.w_off;
        const double* hprev = l == 0 ? ws.h0.data() : ws.h[l - 1].data();
        // parameter gradients of this layer
        for (int i = 0; i < lay.out; ++i) {
            double* wg = grad_full.data() + lay.w_off + static_cast<std::size_t>(i) * lay.in;
            for (int c = 0; c < nc; ++c) {
                double zbc = zb[static_cast<std::size_t>(c) * lay.out + i];
                if (zbc == 0.0) continue;
                const double* hc = hprev + static_cast<std::size_t>(c) * lay.in;
                for (int j = 0; j < lay.in; ++j) wg[j] += zbc * hc[j];
            }
            grad_full[lay.b_off + i] += zb[i];  // value component only
        }
        if (l == 0) break;
        // propagate to previous activations: hbar = W^T zbar, per component
        const int win = lay.in;
        for (int c = 0; c < nc; ++c) {
            double* hbc = hb + static_cast<std::size_t>(c) * win;
            for (int j = 0; j < win; ++j) hbc[j] = 0.0;
            const double* zbc = zb + static_cast<std::size_t>(c) * lay.out;
            for (int i = 0; i < lay.out; ++i) {
                double coef = zbc[i];
                if (coef == 0.0) continue;
                const double* wrow = W + static_cast<std::size_t>(i) * lay.in;
                for (int j = 0; j < win; ++j) hbc[j] += coef * wrow[j];
            }
        }
        // through the activation of hidden layer l-1
        const int hl = l - 1;
        const int w = cfg.widths[hl + 1];
        const double* zl = ws.z[hl].data();
        const double* sdl = ws.sd[hl].data();
        const bool af_layer = (hl == L - 2) && net.layout.af_count > 0;
        for (int i = 0; i < w; ++i) {
            const double* sdv = sdl + static_cast<std::size_t>(5) * i;
            const double* zc = zl + i;
            double z1 = nc > 1 ? zc[w] : 0.0;
            double z2 = nc > 2 ? zc[2 * w] : 0.0;
            double z3 = nc > 3 ? zc[3 * w] : 0.0;
            double z4 = nc > 4 ? zc[4 * w] : 0.0;
            double b0 = hb[i];
            double b1 = nc > 1 ? hb[w + i] : 0.0;
            double b2 = nc > 2 ? hb[2 * w + i] : 0.0;
            double b3 = nc > 3 ? hb[3 * w + i] : 0.0;
            double b4 = nc > 4 ? hb[4 * w + i] : 0.0;

            double out0 = b0 * sdv[1] + b1 * sdv[2] * z1 + b2 * sdv[2] * z2 +
                          b3 * (sdv[3] * z2 * z2 + sdv[2] * z3) +
                          b4 * (sdv[4] * z2 * z2 * z2 + 3.0 * sdv[3] * z2 * z3 + sdv[2] * z4);
            zb[i] = out0;
            if (nc > 1) zb[w + i] = b1 * sdv[1];
            if (nc > 2)
                zb[2 * w + i] =
                    b2 * sdv[1] + b3 * 2.0 * sdv[2] * z2 + b4 * (3.0 * sdv[3] * z2 * z2 + 3.0 * sdv[2] * z3);
            if (nc > 3) zb[3 * w + i] = b3 * sdv[1] + b4 * 3.0 * sdv[2] * z2;
            if (nc > 4) zb[4 * w + i] = b4 * sdv[1];

            if (af_layer) {
                const int ncoef = net.layout.af_count;
                const int stride = 4;  // coefficient partial orders 0..3
                double* P = ws.af_scratch.data();
                apply_coeff_derivs(ws.af_cache, zc[0], 3,
                                   std::span<double>(P, static_cast<std::size_t>(ncoef) * stride));
                for (int jc = 0; jc < ncoef; ++jc) {
                    const double* Pj = P + static_cast<std::size_t>(jc) * stride;
                    double g = b0 * Pj[0] + b1 * Pj[1] * z1 + b2 * Pj[1] * z2 +
                               b3 * (Pj[2] * z2 * z2 + Pj[1] * z3) +
                               b4 * (Pj[3] * z2 * z2 * z2 + 3.0 * Pj[2] * z2 * z3 + Pj[1] * z4);
                    grad_full[net.layout.af_off + jc] += g;
                }
            }
        }
    }
}

Jet ansatz_A(Equation eq, double x) {
    const double pi = std::numbers::pi;
    double s = std::sin(pi * x), c = std::cos(pi * x);
    Jet a;
    switch (eq) {
        case Equation::AC:
            a.c[0] = x * x * c;
            a.c[2] = 2.0 * x * c - pi * x * x * s;
            a.c[3] = 2.0 * c - 4.0 * pi * x * s - pi * pi * x * x * c;
            a.c[4] = -6.0 * pi * s - 6.0 * pi * pi * x * c + pi * pi * pi * x * x * s;
            break;
        case Equation::Burgers:
            a.c[0] = -s;
            a.c[2] = -pi * c;
            a.c[3] = pi * pi * s;
            a.c[4] = pi * pi * pi * c;
            break;
        case Equation::KdV:
            a.c[0] = c;
            a.c[2] = -pi * s;
            a.c[3] = -pi * pi * c;
            a.c[4] = pi * pi * pi * s;
            break;
    }
    return a;
}

Jet ansatz_B(Equation eq, double t, double x) {
    Jet b;
    if (eq == Equation::KdV) {
        b.c[0] = t;
        b.c[1] = 1.0;
    } else {
        b.c[0] = t * (1.0 - x * x);
        b.c[1] = 1.0 - x * x;
        b.c[2] = -2.0 * t * x;
        b.c[3] = -2.0 * t;
    }
    return b;
}

DerivBundle ansatz_u(Equation eq, const DerivBundle& v, double t, double x) {
    DerivBundle u;
    u.t_order = v.t_order;
    u.x_order = v.x_order;
    u.j = ansatz_A(eq, x) + ansatz_B(eq, t, x) * v.j;
    // components beyond the carried orders are meaningless; zero them
    if (v.t_order < 1) u.j.c[1] = 0.0;
    for (int k = v.x_order; k < 3; ++k) u.j.c[2 + k] = 0.0;
    return u;
}

void ansatz_vbar(Equation eq, double t, double x, std::span<const double> ubar,
                 std::span<double> vbar) {
    product_backward_rhs(ansatz_B(eq, t, x), ubar, vbar);
}

namespace {

void write_f64_le(std::ostream& os, std::span<const double> v) {
    // this artifact targets little-endian hosts; the payload is raw
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, const Network& net, Equation eq,
                     std::uint64_t seed) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
    os << "pinnckpt 1\n";
    os << "equation " << to_string(eq) << "\n";
    os << "widths " << net.cfg.widths.size();
    for (int w : net.cfg.widths) os << " " << w;
    os << "\n";
    os << "family " << to_string(net.cfg.family) << " " << net.cfg.af_n << "\n";
    if (net.cfg.family == ActFamily::ABU) {
        os << "candidates";
        for (Candidate c : net.cfg.candidates) os << " " << to_string(c);
        os << "\n";
    }
    os << "seed " << seed << "\n";
    os << "count " << net.params.values.size() << "\n";
    os << "payload\n";
    write_f64_le(os, net.params.values);
    if (!os) throw ConfigError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint: " + path);
    std::string line, key;
    std::getline(is, line);
    if (line != "pinnckpt 1") throw ConfigError("bad checkpoint magic in " + path);
    Checkpoint ck;
    NetConfig cfg;
    cfg.widths.clear();
    std::uint64_t count = 0;
    bool have_eq = false, have_count = false;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        ls >> key;
        if (key == "equation") {
            std::string e;
            ls >> e;
            ck.eq = equation_from_string(e);
            have_eq = true;
        } else if (key == "widths") {
            std::size_t k;
            ls >> k;
            for (std::size_t i = 0; i < k; ++i) {
                int w;
                if (!(ls >> w)) throw ConfigError("truncated widths in " + path);
                cfg.widths.push_back(w);
            }
        } else if (key == "family") {
            std::string f;
            ls >> f >> cfg.af_n;
            cfg.family = act_family_from_string(f);
        } else if (key == "candidates") {
            std::string c;
            while (ls >> c) cfg.candidates.push_back(candidate_from_string(c));
        } else if (key == "seed") {
            ls >> ck.seed;
        } else if (key == "count") {
            ls >> count;
            have_count = true;
        } else if (key == "payload") {
            break;
        } else {
            throw ConfigError("unknown checkpoint field '" + key + "' in " + path);
        }
    }
    if (!have_eq || !have_count || cfg.widths.empty())
        throw ConfigError("incomplete checkpoint header in " + path);
    ck.net.cfg = cfg;
    ck.net.layout = ParamLayout::make(cfg);
    if (static_cast<std::uint64_t>(ck.net.layout.total) != count)
        throw ConfigError("checkpoint count does not match layout in " + path);
    ck.net.params.values.assign(count, 0.0);
    ck.net.params.mask.assign(count, 1);
    is.read(reinterpret_cast<char*>(ck.net.params.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::uint64_t>(is.gcount()) != count * sizeof(double))
        throw ConfigError("truncated checkpoint payload in " + path);
    if (!all_finite(ck.net.params.values)) throw NumericError("non-finite checkpoint payload");
    return ck;
}

}  // namespace pinn

#include "pinn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>

namespace pinn {

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::GradTol: return "grad_tol";
        case StopReason::MaxIters: return "max_iters";
        case StopReason::LineSearchFail: return "line_search_fail";
        case StopReason::CallbackStop: return "callback_stop";
    }
    return "unknown";
}

double l2_norm(std::span<const double> v) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
    return std::sqrt(pairwise_sum(sq));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    std::vector<double> prod(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
    return pairwise_sum(prod);
}

// minimizer of the cubic through (a, fa, da), (b, fb, db); NaN when the
// model has no interior minimum
double cubic_min(double a, double fa, double da, double b, double fb, double db) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    return b - (b - a) * ((db + d2 - d1) / (db - da + 2.0 * d2));
}

struct LineSearch {
    const LossFn& f;
    std::span<const double> x, d;
    std::vector<double>& xt;      // trial point buffer
    std::vector<double>& gt;      // gradient at trial point
    long& evals;
    double phi0, dphi0, c1, c2;
    int budget;

    double phi = 0.0, dphi = 0.0;  // at the last evaluated alpha

    bool eval(double a) {
        if (budget-- <= 0) return false;
        eval_force(a);
        return true;
    }
    // restore a known-good point regardless of remaining budget
    void eval_force(double a) {
        for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + a * d[i];
        phi = f(xt, gt);
        ++evals;
        dphi = dot(gt, d);
    }
};

}  // namespace

LBFGSResult lbfgs_minimize(const LossFn& f, std::vector<double> x0, const LBFGSConfig& cfg,
                           const IterCallback& cb) {
    if (cfg.memory < 1) throw ConfigError("lbfgs memory must be >= 1");
    if (!(cfg.c1 > 0 && cfg.c1 < cfg.c2 && cfg.c2 < 1)) throw ConfigError("need 0 < c1 < c2 < 1");
    if (cfg.max_iters < 0) throw ConfigError("max_iters must be >= 0");
    const std::size_t n = x0.size();
    if (n == 0) throw ConfigError("empty parameter vector");

    LBFGSResult res;
    res.x = std::move(x0);
    std::vector<double> g(n), gt(n), xt(n), q(n), d(n);
    double fx = f(res.x, g);
    ++res.evals;
    if (!std::isfinite(fx)) throw NumericError("initial loss non-finite");

    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;
    std::vector<double> alpha_buf;
    bool fresh = true;  // no curvature pairs yet: first step scales by gradient

    for (;;) {
        res.loss = fx;
        res.grad_norm = l2_norm(g);
        if (res.grad_norm <= cfg.grad_tol) {
            res.reason = StopReason::GradTol;
            return res;
        }
        if (res.iters >= cfg.max_iters) {
            res.reason = StopReason::MaxIters;
            return res;
        }

        // two-loop recursion for d = -H g
        q.assign(g.begin(), g.end());
        const std::size_t k = S.size();
        alpha_buf.assign(k, 0.0);
        for (std::size_t i = k; i-- > 0;) {
            alpha_buf[i] = rho[i] * dot(S[i], q);
            for (std::size_t j = 0; j < n; ++j) q[j] -= alpha_buf[i] * Y[i][j];
        }
        if (k > 0) {
            const double gamma = dot(S[k - 1], Y[k - 1]) / dot(Y[k - 1], Y[k - 1]);
            for (double& qi : q) qi *= gamma;
        }
        for (std::size_t i = 0; i < k; ++i) {
            const double beta = rho[i] * dot(Y[i], q);
            for (std::size_t j = 0; j < n; ++j) q[j] += (alpha_buf[i] - beta) * S[i][j];
        }
        for (std::size_t j = 0; j < n; ++j) d[j] = -q[j];

        double dphi0 = dot(d, g);
        if (!(dphi0 < 0.0)) {  // not a descent direction: restart from steepest descent
            S.clear();
            Y.clear();
            rho.clear();
            fresh = true;
            for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
            dphi0 = -res.grad_norm * res.grad_norm;
        }

        LineSearch ls{f,  res.x, d,      xt,     gt, res.evals,
                      fx, dphi0, cfg.c1, cfg.c2, cfg.max_line_evals};
        double a = fresh ? std::min(1.0, 1.0 / std::max(1e-12, res.grad_norm)) : 1.0;

        // bracketing phase (strong Wolfe); non-finite trials shrink toward
        // the last good step
        double accepted = -1.0;
        double lo = 0.0, philo = fx, dphilo = dphi0;
        double hi = -1.0, phihi = 0.0, dphihi = 0.0;
        bool bracketed = false;
        double a_prev = 0.0, phi_prev = fx, dphi_prev = dphi0;
        for (int it = 0; it < cfg.max_line_evals && !bracketed; ++it) {
            if (!ls.eval(a)) break;
            if (!std::isfinite(ls.phi) || !std::isfinite(ls.dphi)) {
                a = a_prev + 0.25 * (a - a_prev);
                if (a - a_prev < 1e-20) break;
                continue;
            }
            if (ls.phi > fx + cfg.c1 * a * dphi0 || (a_prev > 0.0 && ls.phi >= phi_prev)) {
                lo = a_prev; philo = phi_prev; dphilo = dphi_prev;
                hi = a; phihi = ls.phi; dphihi = ls.dphi;
                bracketed = true;
                break;
            }
            if (std::abs(ls.dphi) <= -cfg.c2 * dphi0) {
                accepted = a;
                break;
            }
            if (ls.dphi >= 0.0) {
                lo = a; philo = ls.phi; dphilo = ls.dphi;
                hi = a_prev; phihi = phi_prev; dphihi = dphi_prev;
                bracketed = true;
                break;
            }
            a_prev = a; phi_prev = ls.phi; dphi_prev = ls.dphi;
            a = std::min(2.0 * a, 1e10);
        }
        if (accepted < 0.0 && !bracketed && a_prev > 0.0 && phi_prev < fx) {
            // expansion ran out (non-finite wall or budget) after real
            // decrease; take the last good trial
            ls.eval_force(a_prev);
            accepted = a_prev;
        }

        // zoom phase
        if (accepted < 0.0 && bracketed) {
            for (int it = 0; it < cfg.max_line_evals; ++it) {
                const double width = std::abs(hi - lo);
                if (width <= 1e-16 * std::max(1.0, std::abs(lo))) break;
                double aj = cubic_min(lo, philo, dphilo, hi, phihi, dphihi);
                const double left = std::min(lo, hi), right = std::max(lo, hi);
                const double margin = 0.1 * width;
                if (!std::isfinite(aj) || aj < left + margin || aj > right - margin)
                    aj = 0.5 * (lo + hi);
                if (!ls.eval(aj)) break;
                if (!std::isfinite(ls.phi) || !std::isfinite(ls.dphi)) {
                    hi = aj;
                    phihi = std::numeric_limits<double>::max() / 4;
                    dphihi = 0.0;
                    continue;
                }
                if (ls.phi > fx + cfg.c1 * aj * dphi0 || ls.phi >= philo) {
                    hi = aj; phihi = ls.phi; dphihi = ls.dphi;
                } else {
                    if (std::abs(ls.dphi) <= -cfg.c2 * dphi0) {
                        accepted = aj;
                        break;
                    }
                    if (ls.dphi * (hi - lo) >= 0.0) {
                        hi = lo; phihi = philo; dphihi = dphilo;
                    }
                    lo = aj; philo = ls.phi; dphilo = ls.dphi;
                }
            }
            if (accepted < 0.0 && lo > 0.0 && philo < fx) {
                // no Wolfe point in budget; the bracket still made progress
                ls.eval_force(lo);
                accepted = lo;
            }
        }

        if (accepted < 0.0) {
            res.reason = StopReason::LineSearchFail;
            return res;
        }

        if (cfg.exact_line_search) {
            // secant on the directional derivative; one step is exact when
            // the objective is quadratic along d
            double sa = 0.0, sdphi = dphi0;
            double ca = accepted, cdphi = ls.dphi;
            bool at_ca = true;
            for (int it = 0; it < 25 && std::abs(cdphi) > 1e-14 * std::max(1.0, -dphi0); ++it) {
                const double denom = cdphi - sdphi;
                if (denom == 0.0) break;
                const double an = ca - cdphi * (ca - sa) / denom;
                if (!std::isfinite(an) || an <= 0.0 || an > 1e12) break;
                if (!ls.eval(an)) break;
                at_ca = false;
                if (!std::isfinite(ls.phi) || !std::isfinite(ls.dphi) || ls.phi > fx) break;
                sa = ca;
                sdphi = cdphi;
                ca = an;
                cdphi = ls.dphi;
                at_ca = true;
            }
            accepted = ca;
            if (!at_ca) ls.eval_force(accepted);
        }

        // s = x_new - x, y = g_new - g
        std::vector<double> s(n), y(n);
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = xt[j] - res.x[j];
            y[j] = gt[j] - g[j];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * l2_norm(s) * l2_norm(y)) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > cfg.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        res.x.swap(xt);
        g.swap(gt);
        fx = ls.phi;
        fresh = false;
        ++res.iters;
        if (cb) {
            res.loss = fx;
            res.grad_norm = l2_norm(g);
            if (!cb(res.iters, fx, res.grad_norm, res.x)) {
                res.reason = StopReason::CallbackStop;
                return res;
            }
        }
    }
}

void adam_step(AdamState& st, std::span<double> x, std::span<const double> grad) {
    if (x.size() != st.m.size() || grad.size() != st.m.size())
        throw InvariantError("adam dimension mismatch");
    const AdamConfig& c = st.cfg;
    ++st.t;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < x.size(); ++i) {
        st.m[i] = c.beta1 * st.m[i] + (1.0 - c.beta1) * grad[i];
        st.v[i] = c.beta2 * st.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        x[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
}

bool early_stop_update(EarlyStopState& st, int epoch, double val_metric,
                       std::span<const double> params) {
    if (st.patience < 1) throw ConfigError("early-stop patience must be >= 1");
    if (st.stopped) return true;
    const bool improved =
        std::isfinite(val_metric) && (st.best_epoch < 0 || val_metric < st.best);
    if (improved) {
        st.best = val_metric;
        st.best_epoch = epoch;
        st.bad_checks = 0;
        st.best_params.assign(params.begin(), params.end());
    } else {
        ++st.bad_checks;
        if (st.bad_checks >= st.patience) st.stopped = true;
    }
    return st.stopped;
}

void write_trace_csv(const std::string& path, std::span<const TraceRow> rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open trace file: " + path);
    out << "iter,loss,grad_norm,val_l2,wall_s\n";
    char buf[256];
    for (const TraceRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.loss,
                      r.grad_norm, r.val_l2, r.wall_s);
        out << buf;
    }
    if (!out.good()) throw NumericError("trace write failed: " + path);
}

}  // namespace pinn

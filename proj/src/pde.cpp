#include "pinn/pde.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace pinn {

namespace {
constexpr double kPi = std::numbers::pi;

[[noreturn]] void bad_point(const char* what, double t, double x, double val) {
    std::ostringstream os;
    os << what << " non-finite at t=" << t << " x=" << x << " (value " << val << ")";
    throw NumericError(os.str());
}
}  // namespace

PDEProblem PDEProblem::make(Equation eq) {
    PDEProblem p;
    p.id = eq;
    switch (eq) {
        case Equation::AC:
            p.ac_diff = 1e-4;
            p.ac_gain = 5.0;
            break;
        case Equation::KdV:
            p.kdv_disp = 0.0025;
            p.needs_boundary_loss = true;
            break;
        case Equation::Burgers:
            p.visc = 0.01 / kPi;
            break;
    }
    return p;
}

void CollocationSet::validate() const {
    if (t.size() != x.size()) throw InvariantError("collocation t/x length mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] >= 0.0 && t[i] <= 1.0 && x[i] >= -1.0 && x[i] <= 1.0)) {
            std::ostringstream os;
            os << "collocation point outside domain: t=" << t[i] << " x=" << x[i];
            throw InvariantError(os.str());
        }
        bool ok = true;
        if (region == Region::Train) ok = t[i] <= 0.5;
        if (region == Region::Validation) ok = t[i] > 0.5 && t[i] <= 0.8;
        if (!ok) {
            std::ostringstream os;
            os << "collocation t=" << t[i] << " violates region tag";
            throw InvariantError(os.str());
        }
    }
}

CollocationSet uniform_collocation(int n, double t_lo, double t_hi, std::uint64_t seed,
                                   const char* tag) {
    if (n <= 0) throw ConfigError("collocation count must be positive");
    if (!(t_lo >= 0.0 && t_hi <= 1.0 && t_lo < t_hi))
        throw ConfigError("collocation t range invalid");
    CollocationSet c;
    c.t.resize(n);
    c.x.resize(n);
    Rng rng = Rng::child(seed, tag);
    for (int i = 0; i < n; ++i) {
        c.t[i] = rng.uniform(t_lo, t_hi);
        c.x[i] = rng.uniform(-1.0, 1.0);
    }
    if (t_hi <= 0.5)
        c.region = CollocationSet::Region::Train;
    else if (t_lo >= 0.5)
        c.region = CollocationSet::Region::Validation;
    else
        c.region = CollocationSet::Region::Mixed;
    return c;
}

std::vector<double> uniform_boundary_ts(int n, double t_lo, double t_hi, std::uint64_t seed) {
    if (n <= 0) throw ConfigError("boundary time count must be positive");
    std::vector<double> ts(n);
    Rng rng = Rng::child(seed, "boundary-ts");
    for (int i = 0; i < n; ++i) ts[i] = rng.uniform(t_lo, t_hi);
    return ts;
}

double residual_from_u(const PDEProblem& p, const Jet& u) {
    switch (p.id) {
        case Equation::AC:
            return u.dt() - p.ac_diff * u.dxx() + p.ac_gain * (u.val() * u.val() * u.val() - u.val());
        case Equation::KdV:
            return u.dt() + u.val() * u.dx() + p.kdv_disp * u.dxxx();
        case Equation::Burgers:
            return u.dt() + u.val() * u.dx() - p.visc * u.dxx();
    }
    throw InvariantError("unknown equation");
}

void residual_u_seeds(const PDEProblem& p, const Jet& u, std::span<double> ubar) {
    std::fill(ubar.begin(), ubar.begin() + 5, 0.0);
    switch (p.id) {
        case Equation::AC:
            ubar[0] = p.ac_gain * (3.0 * u.val() * u.val() - 1.0);
            ubar[1] = 1.0;
            ubar[3] = -p.ac_diff;
            return;
        case Equation::KdV:
            ubar[0] = u.dx();
            ubar[1] = 1.0;
            ubar[2] = u.val();
            ubar[4] = p.kdv_disp;
            return;
        case Equation::Burgers:
            ubar[0] = u.dx();
            ubar[1] = 1.0;
            ubar[2] = u.val();
            ubar[3] = -p.visc;
            return;
    }
    throw InvariantError("unknown equation");
}

// The expansions below substitute u = A(x) + B(t,x) v into each equation
// and differentiate by hand. They share no code with ansatz_u/ansatz_B on
// purpose; the jet-algebra route is the cross-check.
double residual_v(const PDEProblem& p, const Jet& v, double t, double x) {
    const double s = std::sin(kPi * x), c = std::cos(kPi * x);
    switch (p.id) {
        case Equation::AC: {
            const double B = t * (1.0 - x * x);
            const double u = x * x * c + B * v.val();
            const double ut = (1.0 - x * x) * v.val() + B * v.dt();
            const double Axx = 2.0 * c - 4.0 * kPi * x * s - kPi * kPi * x * x * c;
            const double uxx = Axx - 2.0 * t * v.val() - 4.0 * t * x * v.dx() + B * v.dxx();
            return ut - p.ac_diff * uxx + p.ac_gain * (u * u * u - u);
        }
        case Equation::KdV: {
            const double u = c + t * v.val();
            const double ut = v.val() + t * v.dt();
            const double ux = -kPi * s + t * v.dx();
            const double uxxx = kPi * kPi * kPi * s + t * v.dxxx();
            return ut + u * ux + p.kdv_disp * uxxx;
        }
        case Equation::Burgers: {
            const double B = t * (1.0 - x * x);
            const double u = -s + B * v.val();
            const double ut = (1.0 - x * x) * v.val() + B * v.dt();
            const double ux = -kPi * c - 2.0 * t * x * v.val() + B * v.dx();
            const double uxx = kPi * kPi * s - 2.0 * t * v.val() - 4.0 * t * x * v.dx() + B * v.dxx();
            return ut + u * ux - p.visc * uxx;
        }
    }
    throw InvariantError("unknown equation");
}

double residual_v_seeds(const PDEProblem& p, const Jet& v, double t, double x,
                        std::span<double> vbar) {
    const double s = std::sin(kPi * x), c = std::cos(kPi * x);
    std::fill(vbar.begin(), vbar.begin() + 5, 0.0);
    switch (p.id) {
        case Equation::AC: {
            const double B = t * (1.0 - x * x);
            const double u = x * x * c + B * v.val();
            vbar[0] = (1.0 - x * x) + 2.0 * p.ac_diff * t +
                      p.ac_gain * (3.0 * u * u - 1.0) * B;
            vbar[1] = B;
            vbar[2] = 4.0 * p.ac_diff * t * x;
            vbar[3] = -p.ac_diff * B;
            return residual_v(p, v, t, x);
        }
        case Equation::KdV: {
            const double u = c + t * v.val();
            const double ux = -kPi * s + t * v.dx();
            vbar[0] = 1.0 + t * ux;
            vbar[1] = t;
            vbar[2] = t * u;
            vbar[4] = p.kdv_disp * t;
            return residual_v(p, v, t, x);
        }
        case Equation::Burgers: {
            const double B = t * (1.0 - x * x);
            const double u = -s + B * v.val();
            const double ux = -kPi * c - 2.0 * t * x * v.val() + B * v.dx();
            vbar[0] = (1.0 - x * x) + ux * B - 2.0 * t * x * u + 2.0 * p.visc * t;
            vbar[1] = B;
            vbar[2] = u * B + 4.0 * p.visc * t * x;
            vbar[3] = -p.visc * B;
            return residual_v(p, v, t, x);
        }
    }
    throw InvariantError("unknown equation");
}

double residual(const PDEProblem& p, const Network& net, double t, double x, EvalWorkspace& ws) {
    DerivBundle v = forward_v(net, t, x, 1, p.x_order(), ws);
    return residual_v(p, v.j, t, x);
}

std::pair<double, double> boundary_residual_kdv(const Network& net, double t, EvalWorkspace& ws) {
    DerivBundle lo = forward_v(net, t, -1.0, 0, 1, ws);
    const double v_lo = lo.u(), vx_lo = lo.ux();
    DerivBundle hi = forward_v(net, t, 1.0, 0, 1, ws);
    return {v_lo - hi.u(), vx_lo - hi.ux()};
}

PdeLoss::PdeLoss(PDEProblem p, CollocationSet colloc, std::vector<double> boundary_ts, int workers)
    : prob_(p), colloc_(std::move(colloc)), boundary_ts_(std::move(boundary_ts)),
      workers_(workers) {
    if (colloc_.size() == 0) throw ConfigError("empty collocation set");
    if (workers_ < 1) throw ConfigError("worker count must be positive");
    colloc_.validate();
    if (prob_.needs_boundary_loss && boundary_ts_.empty())
        throw ConfigError("boundary times required for this problem");
    r2_.resize(colloc_.size());
    b2_.resize(prob_.needs_boundary_loss ? 2 * boundary_ts_.size() : 0);
}

double PdeLoss::value(const Network& net) { return run(net, {}, false); }

double PdeLoss::value_and_grad(const Network& net, std::span<double> grad_full) {
    if (grad_full.size() != static_cast<std::size_t>(net.layout.total))
        throw InvariantError("gradient buffer length mismatch");
    return run(net, grad_full, true);
}

double PdeLoss::run(const Network& net, std::span<double> grad_full, bool want_grad) {
    const std::size_t n = colloc_.size();
    const int total = net.layout.total;
    if (want_grad) {
        stripe_grad_.resize(kStripes);
        for (auto& g : stripe_grad_) {
            g.assign(total, 0.0);
        }
    }

    // Contiguous stripes keep the per-stripe accumulation order fixed, so
    // the merged gradient is identical for any worker count.
    auto stripe_range = [&](int s) {
        return std::pair<std::size_t, std::size_t>{n * s / kStripes, n * (s + 1) / kStripes};
    };
    auto run_stripe = [&](int s, EvalWorkspace& ws, std::vector<double>& vbuf) {
        auto [lo, hi] = stripe_range(s);
        std::array<double, 5> vbar{};
        for (std::size_t i = lo; i < hi; ++i) {
            const double t = colloc_.t[i], x = colloc_.x[i];
            DerivBundle v = forward_v(net, t, x, 1, prob_.x_order(), ws, want_grad);
            double r;
            if (want_grad) {
                r = residual_v_seeds(prob_, v.j, t, x, vbar);
                if (!std::isfinite(r)) bad_point("residual", t, x, r);
                const double scale = 2.0 * r / static_cast<double>(n);
                for (double& b : vbar) b *= scale;
                backward_v(net, ws, vbar, vbuf);
            } else {
                r = residual_v(prob_, v.j, t, x);
                if (!std::isfinite(r)) bad_point("residual", t, x, r);
            }
            r2_[i] = r * r;
        }
    };

    const int workers = std::min<int>(workers_, kStripes);
    if (workers == 1) {
        EvalWorkspace ws;
        std::vector<double> dummy;
        for (int s = 0; s < kStripes; ++s)
            run_stripe(s, ws, want_grad ? stripe_grad_[s] : dummy);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        std::exception_ptr err;
        std::mutex err_mu;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                EvalWorkspace ws;
                std::vector<double> dummy;
                try {
                    for (int s = w; s < kStripes; s += workers)
                        run_stripe(s, ws, want_grad ? stripe_grad_[s] : dummy);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (err) std::rethrow_exception(err);
    }

    // Sorted reduction makes the loss permutation-invariant over the
    // collocation ordering, not merely reproducible for one ordering.
    std::vector<double> sorted(r2_);
    std::sort(sorted.begin(), sorted.end());
    double loss = pairwise_sum(sorted) / static_cast<double>(n);

    if (want_grad) {
        std::fill(grad_full.begin(), grad_full.end(), 0.0);
        for (int s = 0; s < kStripes; ++s) {
            const auto& g = stripe_grad_[s];
            for (int k = 0; k < total; ++k) grad_full[k] += g[k];
        }
    }

    if (prob_.needs_boundary_loss) {
        EvalWorkspace ws;
        const std::size_t nb = boundary_ts_.size();
        const double inv = 1.0 / static_cast<double>(2 * nb);
        std::array<double, 3> vbar{};
        for (std::size_t k = 0; k < nb; ++k) {
            const double t = boundary_ts_[k];
            if (!want_grad) {
                auto [r1, r2] = boundary_residual_kdv(net, t, ws);
                if (!std::isfinite(r1) || !std::isfinite(r2)) bad_point("boundary residual", t, 1.0, r1);
                b2_[2 * k] = r1 * r1;
                b2_[2 * k + 1] = r2 * r2;
                continue;
            }
            DerivBundle lo = forward_v(net, t, -1.0, 0, 1, ws, true);
            const double v_lo = lo.u(), vx_lo = lo.ux();
            // second tape overwrites the first, so finish x=-1 seeds after
            // both residuals are known via a re-tape below
            DerivBundle hi = forward_v(net, t, 1.0, 0, 1, ws, true);
            const double r1 = v_lo - hi.u(), r2 = vx_lo - hi.ux();
            if (!std::isfinite(r1) || !std::isfinite(r2)) bad_point("boundary residual", t, 1.0, r1);
            b2_[2 * k] = r1 * r1;
            b2_[2 * k + 1] = r2 * r2;
            const double w1 = 2.0 * r1 * inv, w2 = 2.0 * r2 * inv;
            vbar = {-w1, 0.0, -w2};
            backward_v(net, ws, vbar, grad_full);
            forward_v(net, t, -1.0, 0, 1, ws, true);
            vbar = {w1, 0.0, w2};
            backward_v(net, ws, vbar, grad_full);
        }
        loss += pairwise_sum(b2_) * inv;
    }
    if (!std::isfinite(loss)) throw NumericError("loss non-finite");
    return loss;
}

}  // namespace pinn

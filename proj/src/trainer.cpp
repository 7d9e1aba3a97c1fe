#include "pinn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace pinn {

void SplitSpec::validate() const {
    if (!(0.0 < t_train && t_train < t_val && t_val < t_test))
        throw ConfigError("split must satisfy 0 < t_train < t_val < t_test");
}

const char* to_string(TLMethod m) {
    switch (m) {
        case TLMethod::Vanilla: return "vanilla";
        case TLMethod::L2: return "l2";
        case TLMethod::EWC: return "ewc";
    }
    return "?";
}

TLMethod tl_method_from_string(const std::string& s) {
    if (s == "vanilla") return TLMethod::Vanilla;
    if (s == "l2") return TLMethod::L2;
    if (s == "ewc") return TLMethod::EWC;
    throw ConfigError("unknown fine-tuning method: " + s);
}

void TLConfig::validate() const {
    if (epochs < 1) throw ConfigError("fine-tuning epochs must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
    if (k < 1 || pool_size < 1) throw ConfigError("k and pool size must be >= 1");
    if (k > pool_size) throw ConfigError("k exceeds the selection pool");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(mix_train_fraction >= 0.0 && mix_train_fraction <= 1.0))
        throw ConfigError("mix fraction must lie in [0, 1]");
    if (method == TLMethod::EWC && fisher_points < 1)
        throw ConfigError("ewc needs at least one anchor point");
    if (anchor_points < 0) throw ConfigError("anchor_points must be >= 0");
}

TLConfig default_tl_config(Equation eq, TLMethod m) {
    TLConfig cfg;
    cfg.method = m;
    cfg.lr = eq == Equation::AC ? 5e-3 : 5e-2;
    if (m == TLMethod::L2) cfg.lambda = 0.01;
    if (m == TLMethod::EWC) cfg.lambda = 0.001;
    if (eq == Equation::KdV) cfg.boundary_points = 100;
    return cfg;
}

void TrainConfig::validate() const {
    split.validate();
    if (n_colloc < 1) throw ConfigError("need at least one collocation point");
    if (val_check_every < 1) throw ConfigError("validation check interval must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (min_iters < 0) throw ConfigError("min_iters must be >= 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
}

namespace {

// objective over trainable coordinates; buffers shared across calls
struct Objective {
    Network* net;
    PdeLoss* loss;
    std::vector<double> full;

    double operator()(std::span<const double> x, std::span<double> grad) {
        net->params.scatter_trainable(x);
        const double L = loss->value_and_grad(*net, full);
        const std::vector<double> cg = net->params.compact(full);
        std::copy(cg.begin(), cg.end(), grad.begin());
        return L;
    }
};

}  // namespace

TrainResult train_initial(const PDEProblem& p, const NetConfig& ncfg, const TrainConfig& tc,
                          const ReferenceGrid& ref, std::uint64_t seed) {
    tc.validate();
    if (ref.eq != p.id) throw ConfigError("reference grid is for a different equation");

    TrainResult out;
    out.net = make_network(ncfg, seed);
    CollocationSet colloc = uniform_collocation(tc.n_colloc, 0.0, tc.split.t_train, seed);
    std::vector<double> bts;
    // periodic-BC penalty times cover train + validation, wider than the
    // residual band on purpose
    if (p.needs_boundary_loss)
        bts = uniform_boundary_ts(tc.n_boundary, 0.0, tc.split.t_val, seed);
    PdeLoss loss(p, std::move(colloc), std::move(bts), tc.workers);

    Objective obj{&out.net, &loss, std::vector<double>(out.net.layout.total)};
    EarlyStopState es;
    es.patience = tc.patience;
    const auto t0 = std::chrono::steady_clock::now();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto cb = [&](int iter, double fx, double gnorm, std::span<const double> x) {
        TraceRow row;
        row.iter = iter;
        row.loss = fx;
        row.grad_norm = gnorm;
        row.val_l2 = nan;
        row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool keep_going = true;
        if (iter % tc.val_check_every == 0) {
            out.net.params.scatter_trainable(x);
            row.val_l2 = rel_l2(make_sampler(out.net, p.id), ref, EvalRegion::Validation);
            keep_going = !early_stop_update(es, iter, row.val_l2, x);
            // the metric is noisy while the loss is still falling fast, so
            // misses inside the warmup window keep the snapshot but never
            // count toward stopping
            if (iter < tc.min_iters) {
                es.bad_checks = 0;
                es.stopped = false;
                keep_going = true;
            }
        }
        out.trace.push_back(row);
        return keep_going;
    };

    LBFGSResult res;
    try {
        res = lbfgs_minimize(std::ref(obj), out.net.params.gather_trainable(), tc.lbfgs, cb);
    } catch (const NumericError&) {
        out.diverged = true;
        out.best_val_l2 = nan;
        return out;
    }
    out.stop = res.reason;
    out.iters = res.iters;

    // hand back the best-validation snapshot; fall back to the optimizer's
    // best point if no check ever ran
    if (es.best_epoch >= 0) {
        out.net.params.scatter_trainable(es.best_params);
        out.best_val_l2 = es.best;
    } else {
        out.net.params.scatter_trainable(res.x);
        out.best_val_l2 = nan;
    }
    FieldSampler s = make_sampler(out.net, p.id);
    out.train_report = region_report(s, ref, EvalRegion::Train);
    out.val_report = region_report(s, ref, EvalRegion::Validation);
    out.extrap_report = region_report(s, ref, EvalRegion::Extrapolation);
    return out;
}

SelectedPoints select_high_loss_points(const Network& net, const PDEProblem& p, int pool_size,
                                       int k, const SplitSpec& split, double mix_train_fraction,
                                       std::uint64_t seed) {
    split.validate();
    if (k < 1 || pool_size < 1 || k > pool_size)
        throw ConfigError("selection needs 1 <= k <= pool size");
    if (!(mix_train_fraction >= 0.0 && mix_train_fraction <= 1.0))
        throw ConfigError("mix fraction must lie in [0, 1]");

    const int n_train = static_cast<int>(std::lround(pool_size * mix_train_fraction));
    const int n_val = pool_size - n_train;
    CollocationSet pool = uniform_collocation(n_val, split.t_train, split.t_val, seed, "tl-pool");
    if (n_train > 0) {
        CollocationSet extra =
            uniform_collocation(n_train, 0.0, split.t_train, seed, "tl-pool-train");
        pool.t.insert(pool.t.end(), extra.t.begin(), extra.t.end());
        pool.x.insert(pool.x.end(), extra.x.begin(), extra.x.end());
    }
    const bool pure_val = n_train == 0 && split.t_train == 0.5 && split.t_val == 0.8;
    pool.region = pure_val ? CollocationSet::Region::Validation : CollocationSet::Region::Mixed;

    EvalWorkspace ws;
    std::vector<double> r2(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double r = residual(p, net, pool.t[i], pool.x[i], ws);
        r2[i] = r * r;
    }
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return r2[a] > r2[b]; });

    SelectedPoints sel;
    sel.points.region = pool.region;
    sel.points.t.reserve(k);
    sel.points.x.reserve(k);
    sel.r2.reserve(k);
    for (int i = 0; i < k; ++i) {
        const std::size_t j = order[static_cast<std::size_t>(i)];
        sel.points.t.push_back(pool.t[j]);
        sel.points.x.push_back(pool.x[j]);
        sel.r2.push_back(r2[j]);
    }
    sel.points.validate();
    return sel;
}

void write_selected_csv(const std::string& path, const SelectedPoints& sel) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open selected-points csv: " + path);
    out << "t,x,r2\n";
    char buf[128];
    for (std::size_t i = 0; i < sel.points.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", sel.points.t[i], sel.points.x[i],
                      sel.r2[i]);
        out << buf;
    }
    if (!out.good()) throw NumericError("selected-points csv write failed: " + path);
}

FisherDiag fisher_diag(const Network& net, const PDEProblem& p, const CollocationSet& old_points) {
    if (old_points.size() == 0) throw ConfigError("fisher estimate needs points");
    const int nt = net.params.trainable_count();
    FisherDiag fd;
    fd.f.assign(static_cast<std::size_t>(nt), 0.0);
    EvalWorkspace ws;
    std::vector<double> full(net.layout.total);
    double vbar[5];
    for (std::size_t i = 0; i < old_points.size(); ++i) {
        const double t = old_points.t[i], x = old_points.x[i];
        DerivBundle v = forward_v(net, t, x, 1, p.x_order(), ws, true);
        const double r = residual_v_seeds(p, v.j, t, x, vbar);
        for (double& c : vbar) c *= 2.0 * r;  // d(r^2)/dv components
        std::fill(full.begin(), full.end(), 0.0);
        backward_v(net, ws, vbar, full);
        const std::vector<double> g = net.params.compact(full);
        for (int j = 0; j < nt; ++j) fd.f[static_cast<std::size_t>(j)] += g[j] * g[j];
    }
    const double inv = 1.0 / static_cast<double>(old_points.size());
    for (double& v : fd.f) v *= inv;
    return fd;
}

void set_transfer_mask(Network& net) {
    std::fill(net.params.mask.begin(), net.params.mask.end(), std::uint8_t{0});
    const auto& last = net.layout.layers.back();
    for (int i = 0; i < last.in * last.out; ++i)
        net.params.mask[static_cast<std::size_t>(last.w_off + i)] = 1;
    for (int i = 0; i < last.out; ++i)
        net.params.mask[static_cast<std::size_t>(last.b_off + i)] = 1;
    for (int i = 0; i < net.layout.af_count; ++i)
        net.params.mask[static_cast<std::size_t>(net.layout.af_off + i)] = 1;
}

TransferResult transfer_train(const Network& model, const PDEProblem& p,
                              const CollocationSet& points, const TLConfig& cfg,
                              const SplitSpec& split, std::uint64_t seed) {
    cfg.validate();
    split.validate();
    if (points.size() == 0) throw ConfigError("fine-tuning needs selected points");

    TransferResult out;
    out.net = model;
    set_transfer_mask(out.net);
    const std::vector<double> theta0 = out.net.params.gather_trainable();

    if (cfg.method == TLMethod::EWC) {
        CollocationSet anchor =
            uniform_collocation(cfg.fisher_points, 0.0, split.t_train, seed, "fisher");
        out.fisher = fisher_diag(out.net, p, anchor);
    }
    std::vector<double> bts;
    if (p.needs_boundary_loss) {
        if (cfg.boundary_points < 1)
            throw ConfigError("this problem needs boundary_points during fine-tuning");
        bts = uniform_boundary_ts(cfg.boundary_points, 0.0, split.t_val, seed);
    }
    // Fine-tuning on the selected points alone lets any residual-free field
    // (u = -1 solves the reaction equation everywhere) absorb the head;
    // keeping the training draw in the loss pins the fit where it is right.
    CollocationSet pts = points;
    if (cfg.anchor_points > 0) {
        CollocationSet comb = uniform_collocation(cfg.anchor_points, 0.0, split.t_train, seed);
        comb.t.insert(comb.t.end(), points.t.begin(), points.t.end());
        comb.x.insert(comb.x.end(), points.x.begin(), points.x.end());
        comb.region = CollocationSet::Region::Mixed;
        pts = std::move(comb);
    }
    PdeLoss loss(p, pts, std::move(bts));

    AdamConfig acfg;
    acfg.lr = cfg.lr;
    AdamState adam(acfg, theta0.size());
    std::vector<double> x = theta0;
    std::vector<double> full(out.net.layout.total);
    std::vector<double> g(theta0.size());
    const auto t0 = std::chrono::steady_clock::now();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        out.net.params.scatter_trainable(x);
        double L;
        try {
            L = loss.value_and_grad(out.net, full);
        } catch (const NumericError&) {
            out.net = model;  // blow-up mid-run: hand back the input model
            out.aborted = true;
            return out;
        }
        const std::vector<double> cg = out.net.params.compact(full);
        std::copy(cg.begin(), cg.end(), g.begin());

        double reg = 0.0;
        if (cfg.method == TLMethod::L2) {
            if (cfg.l2_mode == L2Mode::Magnitude) {
                double s = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    s += x[i] * x[i];
                    g[i] += 2.0 * cfg.lambda * x[i];
                }
                reg = cfg.lambda * s;
            } else {
                double s = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = x[i] - theta0[i];
                    s += d * d;
                    g[i] += 2.0 * cfg.lambda * d;
                }
                reg = cfg.lambda * s;
            }
        } else if (cfg.method == TLMethod::EWC) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - theta0[i];
                s += out.fisher.f[i] * d * d;
                g[i] += cfg.lambda * out.fisher.f[i] * d;
            }
            reg = 0.5 * cfg.lambda * s;
        }
        const double total = L + reg;
        if (!std::isfinite(total) || !all_finite(g)) {
            out.net = model;  // hand the caller back the untouched model
            out.aborted = true;
            return out;
        }
        TraceRow row;
        row.iter = epoch;
        row.loss = total;
        row.grad_norm = l2_norm(g);
        row.val_l2 = nan;
        row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.trace.push_back(row);
        adam_step(adam, x, g);
    }
    out.net.params.scatter_trainable(x);
    return out;
}

}  // namespace pinn

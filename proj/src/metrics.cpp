#include "pinn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

namespace pinn {

const char* to_string(EvalRegion r) {
    switch (r) {
        case EvalRegion::Train: return "train";
        case EvalRegion::Validation: return "validation";
        case EvalRegion::Extrapolation: return "extrapolation";
        case EvalRegion::Mixed: return "mixed";
    }
    return "?";
}

FieldSampler make_sampler(const Network& net, Equation eq) {
    auto snap = std::make_shared<Network>(net);
    auto ws = std::make_shared<EvalWorkspace>();
    return [snap, ws, eq](double t, double x) {
        DerivBundle v = forward_v(*snap, t, x, 0, 0, *ws);
        return ansatz_u(eq, v, t, x).u();
    };
}

std::vector<int> region_rows(const ReferenceGrid& g, EvalRegion r) {
    std::vector<int> rows;
    for (int i = 0; i < g.nt; ++i) {
        const double t = g.t_at(i);
        bool in = false;
        switch (r) {
            case EvalRegion::Train: in = t <= 0.5; break;
            case EvalRegion::Validation: in = t > 0.5 && t <= 0.8; break;
            case EvalRegion::Extrapolation: in = t > 0.8; break;
            case EvalRegion::Mixed: in = t <= 0.8; break;
        }
        if (in) rows.push_back(i);
    }
    return rows;
}

RegionReport region_report(const FieldSampler& pred, const ReferenceGrid& ref,
                           EvalRegion region) {
    const std::vector<int> rows = region_rows(ref, region);
    if (rows.empty()) throw ConfigError("region has no time instants on this grid");
    const std::size_t m = rows.size() * static_cast<std::size_t>(ref.nx);
    std::vector<double> d2(m), ad(m), r2(m), ar(m);
    std::size_t k = 0;
    for (int i : rows) {
        const double t = ref.t_at(i);
        for (int j = 0; j < ref.nx; ++j, ++k) {
            const double u = ref.at(i, j);
            const double diff = pred(t, ref.x_at(j)) - u;
            d2[k] = diff * diff;
            ad[k] = std::abs(diff);
            r2[k] = u * u;
            ar[k] = std::abs(u);
        }
    }
    const double den2 = pairwise_sum(r2), den1 = pairwise_sum(ar);
    if (den2 == 0.0 || den1 == 0.0)
        throw NumericError("reference norm is zero over the region");
    RegionReport rep;
    rep.region = region;
    rep.rel_l2 = std::sqrt(pairwise_sum(d2)) / std::sqrt(den2);
    rep.rel_mae = pairwise_sum(ad) / den1;
    rep.points = static_cast<long>(m);
    if (!std::isfinite(rep.rel_l2) || !std::isfinite(rep.rel_mae))
        throw NumericError("non-finite metric value");
    return rep;
}

double rel_l2(const FieldSampler& pred, const ReferenceGrid& ref, EvalRegion region) {
    return region_report(pred, ref, region).rel_l2;
}

double rel_mae(const FieldSampler& pred, const ReferenceGrid& ref, EvalRegion region) {
    return region_report(pred, ref, region).rel_mae;
}

namespace {

double pct(double before, double after, double sign) {
    if (before == after) return 0.0;
    if (before == 0.0) throw NumericError("zero before-error in effect percentage");
    return 100.0 * sign * (before - after) / before;
}

}  // namespace

TLEffectReport tl_effect(const FieldSampler& before, const FieldSampler& after,
                         const ReferenceGrid& ref) {
    TLEffectReport rep;
    rep.before_mixed = region_report(before, ref, EvalRegion::Mixed);
    rep.after_mixed = region_report(after, ref, EvalRegion::Mixed);
    rep.before_extrap = region_report(before, ref, EvalRegion::Extrapolation);
    rep.after_extrap = region_report(after, ref, EvalRegion::Extrapolation);
    // forgetting: growth on the already-learned band
    rep.forgetting_l2_pct = pct(rep.before_mixed.rel_l2, rep.after_mixed.rel_l2, -1.0);
    rep.forgetting_mae_pct = pct(rep.before_mixed.rel_mae, rep.after_mixed.rel_mae, -1.0);
    // reduction: shrinkage on the extrapolation band
    rep.reduction_l2_pct = pct(rep.before_extrap.rel_l2, rep.after_extrap.rel_l2, 1.0);
    rep.reduction_mae_pct = pct(rep.before_extrap.rel_mae, rep.after_extrap.rel_mae, 1.0);
    return rep;
}

std::vector<LayerGradNorm> grad_norm_profile(const Network& net, PdeLoss& loss) {
    std::vector<double> grad(net.layout.total);
    loss.value_and_grad(net, grad);
    std::vector<LayerGradNorm> out;
    out.reserve(net.layout.layers.size());
    for (std::size_t l = 0; l < net.layout.layers.size(); ++l) {
        const auto& lay = net.layout.layers[l];
        const double wn = l2_norm(std::span<const double>(
            grad.data() + lay.w_off, static_cast<std::size_t>(lay.in) * lay.out));
        const double bn =
            l2_norm(std::span<const double>(grad.data() + lay.b_off, lay.out));
        LayerGradNorm e;
        e.layer = static_cast<int>(l);
        e.flagged = wn == 0.0 || bn == 0.0;
        e.value = e.flagged ? 0.0 : std::log(wn) + std::log(bn);
        out.push_back(e);
    }
    return out;
}

std::optional<long> epochs_to_threshold(std::span<const TraceRow> trace, double threshold) {
    if (trace.empty()) throw ConfigError("empty trace");
    for (const TraceRow& row : trace)
        if (std::isfinite(row.loss) && row.loss <= threshold) return row.iter;
    return std::nullopt;
}

std::optional<long> validation_upturn(std::span<const TraceRow> trace, int patience) {
    if (trace.empty()) throw ConfigError("empty trace");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    std::vector<long> iters;
    std::vector<double> vals;
    for (const TraceRow& row : trace) {
        if (std::isfinite(row.val_l2)) {
            iters.push_back(row.iter);
            vals.push_back(row.val_l2);
        }
    }
    int run = 0;
    for (std::size_t k = 1; k < vals.size(); ++k) {
        run = vals[k] > vals[k - 1] ? run + 1 : 0;
        if (run == patience) return iters[k - patience];
    }
    return std::nullopt;
}

void append_metrics_csv(const std::string& path, const std::string& run_id, Equation eq,
                        const std::string& af, const std::string& method,
                        std::span<const RegionReport> reports) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw ConfigError("cannot open metrics csv: " + path);
    if (fresh) out << "run,equation,af,method,region,rel_l2,rel_mae\n";
    char buf[160];
    for (const RegionReport& r : reports) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.rel_l2, r.rel_mae);
        out << run_id << ',' << to_string(eq) << ',' << af << ',' << method << ','
            << to_string(r.region) << ',' << buf << '\n';
    }
    if (!out.good()) throw NumericError("metrics csv write failed: " + path);
}

}  // namespace pinn

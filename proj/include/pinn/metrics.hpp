#pragma once

#include <functional>
#include <optional>
#include <string>

#include "pinn/optim.hpp"
#include "pinn/refsolver.hpp"

namespace pinn {

// Time bands of the evaluation grid. Train covers [0, 0.5], Validation
// (0.5, 0.8], Extrapolation (0.8, 1.0]; Mixed is the union [0, 0.8] used
// for forgetting measurements.
enum class EvalRegion { Train, Validation, Extrapolation, Mixed };
const char* to_string(EvalRegion r);

using FieldSampler = std::function<double(double t, double x)>;

// Value-only prediction u(t, x). Snapshots the network by copy, so the
// sampler stays valid after further training.
FieldSampler make_sampler(const Network& net, Equation eq);

// time-row indices of `g` that fall in the region
std::vector<int> region_rows(const ReferenceGrid& g, EvalRegion r);

struct RegionReport {
    EvalRegion region = EvalRegion::Train;
    double rel_l2 = 0.0;
    double rel_mae = 0.0;
    long points = 0;
};

// Both metrics over the region's slice of the reference grid:
// rel_l2 = sqrt(sum |p - u|^2) / sqrt(sum u^2), rel_mae = sum|p - u| / sum|u|.
// Throws NumericError when the reference norm over the region is zero.
RegionReport region_report(const FieldSampler& pred, const ReferenceGrid& ref, EvalRegion region);
double rel_l2(const FieldSampler& pred, const ReferenceGrid& ref, EvalRegion region);
double rel_mae(const FieldSampler& pred, const ReferenceGrid& ref, EvalRegion region);

// Effect of the fine-tuning phase: error reduction on the extrapolation
// band (positive = improvement) and error increase on [0, 0.8]
// (positive = forgetting), both as percentages of the before-model error.
struct TLEffectReport {
    RegionReport before_mixed, after_mixed;
    RegionReport before_extrap, after_extrap;
    double forgetting_l2_pct = 0.0, forgetting_mae_pct = 0.0;
    double reduction_l2_pct = 0.0, reduction_mae_pct = 0.0;
};
TLEffectReport tl_effect(const FieldSampler& before, const FieldSampler& after,
                         const ReferenceGrid& ref);

// log ||W grad||_2 + log ||b grad||_2 of the residual loss, one entry per
// layer in layer order. A zero norm has no logarithm; such layers come
// back flagged with value 0 instead of -inf.
struct LayerGradNorm {
    int layer = 0;
    double value = 0.0;
    bool flagged = false;
};
std::vector<LayerGradNorm> grad_norm_profile(const Network& net, PdeLoss& loss);

// first trace row with training loss <= threshold; absent if never
std::optional<long> epochs_to_threshold(std::span<const TraceRow> trace, double threshold);
// iteration after which the validation metric rose for `patience`
// consecutive finite checks; absent if it never did
std::optional<long> validation_upturn(std::span<const TraceRow> trace, int patience = 15);

// appends one row per report: run,equation,af,method,region,rel_l2,rel_mae
void append_metrics_csv(const std::string& path, const std::string& run_id, Equation eq,
                        const std::string& af, const std::string& method,
                        std::span<const RegionReport> reports);

}  // namespace pinn

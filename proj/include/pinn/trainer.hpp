#pragma once

#include "pinn/metrics.hpp"

namespace pinn {

struct SplitSpec {
    double t_train = 0.5, t_val = 0.8, t_test = 1.0;
    void validate() const;  // 0 < t_train < t_val < t_test
};

enum class TLMethod { Vanilla, L2, EWC };
const char* to_string(TLMethod m);
TLMethod tl_method_from_string(const std::string& s);

// magnitude: lambda * sum theta^2; deviation: lambda * sum (theta - theta*)^2
enum class L2Mode { Magnitude, Deviation };

struct TLConfig {
    TLMethod method = TLMethod::Vanilla;
    int epochs = 150;
    double lr = 5e-3;
    int k = 80;             // points kept for fine-tuning
    int pool_size = 4000;   // candidates scored per selection
    double mix_train_fraction = 0.0;  // share of the pool drawn from [0, t_train]
    double lambda = 0.0;
    L2Mode l2_mode = L2Mode::Magnitude;
    int fisher_points = 1000;  // anchor points for the ewc importance estimate
    int boundary_points = 0;   // periodic-BC time samples during fine-tuning
    // training-band collocation points kept in the fine-tuning loss alongside
    // the selected points (same draw as phase 1 when the seeds match); 0 keeps
    // only the selected points, which lets the trivial solution swallow the fit
    int anchor_points = 8000;
    void validate() const;
};

// equation defaults: lr 5e-3 (first equation) / 5e-2 (other two);
// lambda 0.01 for l2, 0.001 for ewc
TLConfig default_tl_config(Equation eq, TLMethod m);

struct TrainConfig {
    int n_colloc = 8000;
    int n_boundary = 200;  // periodic-BC time samples (used when required)
    LBFGSConfig lbfgs;
    int val_check_every = 10;  // optimizer iterations per validation check
    int patience = 15;         // non-improving checks tolerated
    int min_iters = 0;         // early stopping cannot fire before this
    int workers = 1;
    SplitSpec split;
    void validate() const;
};

struct TrainResult {
    Network net;  // restored best-validation snapshot
    std::vector<TraceRow> trace;
    StopReason stop = StopReason::MaxIters;
    int iters = 0;
    double best_val_l2 = 0.0;
    bool diverged = false;
    RegionReport train_report, val_report, extrap_report;
};

// Phase 1: full-parameter L-BFGS on uniformly sampled collocation points
// in [0, t_train] x [-1, 1], early-stopped on validation-band rel-L2
// against the reference grid. Divergence (non-finite loss) aborts with the
// partial trace and diverged = true instead of throwing.
TrainResult train_initial(const PDEProblem& p, const NetConfig& ncfg, const TrainConfig& tc,
                          const ReferenceGrid& ref, std::uint64_t seed);

struct SelectedPoints {
    CollocationSet points;   // ordered by squared residual, largest first
    std::vector<double> r2;  // matching order
};

// Scores pool_size uniform points (default: the validation band, with an
// optional train-band admixture) and keeps the k with the largest squared
// residual; ties broken toward the earlier sample index.
SelectedPoints select_high_loss_points(const Network& net, const PDEProblem& p, int pool_size,
                                       int k, const SplitSpec& split, double mix_train_fraction,
                                       std::uint64_t seed);

// csv columns: t,x,r2
void write_selected_csv(const std::string& path, const SelectedPoints& sel);

struct FisherDiag {
    std::vector<double> f;  // one nonnegative entry per trainable parameter
};

// F_i = mean over old_points of (d r^2 / d theta_i)^2, restricted to the
// trainable parameters of `net`.
FisherDiag fisher_diag(const Network& net, const PDEProblem& p, const CollocationSet& old_points);

// trainable = final linear layer weights/bias + activation coefficients
void set_transfer_mask(Network& net);

struct TransferResult {
    Network net;
    std::vector<TraceRow> trace;
    bool aborted = false;  // non-finite loss: net is the untouched input model
    FisherDiag fisher;     // populated for ewc
};

// Phase 2: Adam fine-tuning of the transfer-masked parameters for
// cfg.epochs full-batch epochs. The residual loss covers the selected
// points appended to a fresh draw of cfg.anchor_points training-band
// collocation points (the phase-1 set when seed and count match), and the
// method's penalty is added on top. Every parameter outside the mask is
// bit-identical to the input model afterwards.
TransferResult transfer_train(const Network& model, const PDEProblem& p,
                              const CollocationSet& points, const TLConfig& cfg,
                              const SplitSpec& split, std::uint64_t seed);

}  // namespace pinn

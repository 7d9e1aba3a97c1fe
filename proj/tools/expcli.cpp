// expcli: configuration-driven experiment runner. Subcommands cover the
// full pipeline: reference-grid generation, phase-1 training, phase-2
// fine-tuning, table/plot emission, and wall-clock timing reports.
//
// Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 invariant
// violation. PINN_WORKERS bounds the seed fan-out pool.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pinn/refsolver.hpp"
#include "pinn/trainer.hpp"

using nlohmann::json;
using namespace pinn;
namespace fs = std::filesystem;

namespace {

int env_workers() {
    const char* s = std::getenv("PINN_WORKERS");
    if (!s || !*s) return 1;
    char* end = nullptr;
    const long n = std::strtol(s, &end, 10);
    if (end == s || *end != '\0' || n < 1 || n > 256)
        throw ConfigError("PINN_WORKERS must be a positive integer (got '" + std::string(s) +
                          "')");
    return static_cast<int>(n);
}

// Unknown keys are typos until proven otherwise.
void require_keys(const json& j, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a json object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown config key '" + it.key() + "' in " + where);
    }
}

template <class T>
T jget(const json& j, const char* key, T dflt) {
    if (!j.contains(key)) return dflt;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("config parse failure in " + path + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << j.dump(1) << '\n';
}

std::vector<Candidate> default_candidates(Equation eq) {
    // per-equation blends that scored best in the experiments
    switch (eq) {
        case Equation::AC: return {Candidate::TanhC, Candidate::GELU, Candidate::Sigmoid};
        case Equation::KdV: return {Candidate::TanhC, Candidate::GELU, Candidate::Sin};
        case Equation::Burgers:
            return {Candidate::TanhC, Candidate::GELU, Candidate::Sigmoid, Candidate::Sin};
    }
    throw InvariantError("unknown equation");
}

int default_af_n(ActFamily f) {
    switch (f) {
        case ActFamily::LCTanh:
        case ActFamily::LCSin: return 3;
        case ActFamily::LCXSinSq: return 2;
        default: return 1;
    }
}

// Fully resolved experiment description; the persisted snapshot of this
// struct round-trips through parse_spec unchanged.
struct RunSpec {
    Equation eq = Equation::AC;
    ActFamily family = ActFamily::Tanh;
    int af_n = 1;
    std::vector<Candidate> candidates;
    std::vector<std::uint64_t> seeds;
    int hidden_layers = 6, width = 32;
    TrainConfig train;
    TLConfig tl;
    int ref_nx = 0, ref_nt = 0, ref_nx_internal = 1024;
    double ref_rtol = 1e-6, ref_atol = 1e-8;
    std::string ref_file;
    std::string out_dir;

    NetConfig net_config() const {
        NetConfig c;
        c.widths.assign(1, 2);
        c.widths.insert(c.widths.end(), static_cast<std::size_t>(hidden_layers), width);
        c.widths.push_back(1);
        c.family = family;
        c.af_n = af_n;
        if (family == ActFamily::ABU) c.candidates = candidates;
        c.validate();
        return c;
    }
};

RunSpec parse_spec(const json& root) {
    require_keys(root, "config", {"equation", "activation", "seeds", "network", "train", "split",
                                  "transfer", "reference", "out_dir"});
    RunSpec s;
    if (!root.contains("equation")) throw ConfigError("config needs an 'equation' key");
    s.eq = equation_from_string(root.at("equation").get<std::string>());

    const json act = root.value("activation", json::object());
    require_keys(act, "activation", {"family", "n", "candidates"});
    s.family = act_family_from_string(jget<std::string>(act, "family", "tanh"));
    if (s.family == ActFamily::ABU) {
        s.candidates.clear();
        if (act.contains("candidates"))
            for (const auto& c : act.at("candidates"))
                s.candidates.push_back(candidate_from_string(c.get<std::string>()));
        else
            s.candidates = default_candidates(s.eq);
        s.af_n = jget<int>(act, "n", static_cast<int>(s.candidates.size()));
        if (s.af_n != static_cast<int>(s.candidates.size()))
            throw ConfigError("activation.n must match the abu candidate count");
    } else {
        if (act.contains("candidates"))
            throw ConfigError("activation.candidates only applies to the abu family");
        s.af_n = jget<int>(act, "n", default_af_n(s.family));
    }

    if (root.contains("seeds")) {
        const json& sj = root.at("seeds");
        if (sj.is_number_integer()) {
            const long n = sj.get<long>();
            if (n < 1) throw ConfigError("seeds count must be positive");
            for (long i = 0; i < n; ++i) s.seeds.push_back(static_cast<std::uint64_t>(i));
        } else if (sj.is_array()) {
            for (const auto& v : sj) s.seeds.push_back(v.get<std::uint64_t>());
            if (s.seeds.empty()) throw ConfigError("seeds list must be non-empty");
        } else {
            throw ConfigError("seeds must be a count or a list");
        }
    } else {
        for (int i = 0; i < 10; ++i) s.seeds.push_back(static_cast<std::uint64_t>(i));
    }

    const json net = root.value("network", json::object());
    require_keys(net, "network", {"hidden_layers", "width"});
    s.hidden_layers = jget<int>(net, "hidden_layers", 6);
    s.width = jget<int>(net, "width", 32);
    if (s.hidden_layers < 1 || s.width < 1)
        throw ConfigError("network.hidden_layers and network.width must be positive");

    const json sp = root.value("split", json::object());
    require_keys(sp, "split", {"train", "validation", "test"});
    s.train.split.t_train = jget<double>(sp, "train", 0.5);
    s.train.split.t_val = jget<double>(sp, "validation", 0.8);
    s.train.split.t_test = jget<double>(sp, "test", 1.0);

    const json tr = root.value("train", json::object());
    require_keys(tr, "train", {"collocation_points", "boundary_points", "val_check_every",
                               "patience", "min_iters", "workers", "lbfgs"});
    s.train.n_colloc = jget<int>(tr, "collocation_points", 8000);
    s.train.n_boundary = jget<int>(tr, "boundary_points", 200);
    s.train.val_check_every = jget<int>(tr, "val_check_every", 10);
    s.train.patience = jget<int>(tr, "patience", 15);
    s.train.min_iters = jget<int>(tr, "min_iters", 0);
    s.train.workers = jget<int>(tr, "workers", 1);
    const json lb = tr.value("lbfgs", json::object());
    require_keys(lb, "train.lbfgs",
                 {"memory", "max_iters", "grad_tol", "c1", "c2", "max_line_evals"});
    s.train.lbfgs.memory = jget<int>(lb, "memory", s.train.lbfgs.memory);
    s.train.lbfgs.max_iters = jget<int>(lb, "max_iters", s.train.lbfgs.max_iters);
    s.train.lbfgs.grad_tol = jget<double>(lb, "grad_tol", s.train.lbfgs.grad_tol);
    s.train.lbfgs.c1 = jget<double>(lb, "c1", s.train.lbfgs.c1);
    s.train.lbfgs.c2 = jget<double>(lb, "c2", s.train.lbfgs.c2);
    s.train.lbfgs.max_line_evals = jget<int>(lb, "max_line_evals", s.train.lbfgs.max_line_evals);
    s.train.validate();

    const json tl = root.value("transfer", json::object());
    require_keys(tl, "transfer",
                 {"method", "epochs", "lr", "k", "pool", "mix_train_fraction", "lambda",
                  "l2_mode", "fisher_points", "boundary_points", "anchor_points"});
    const TLMethod method = tl_method_from_string(jget<std::string>(tl, "method", "l2"));
    s.tl = default_tl_config(s.eq, method);
    s.tl.epochs = jget<int>(tl, "epochs", s.tl.epochs);
    s.tl.lr = jget<double>(tl, "lr", s.tl.lr);
    s.tl.k = jget<int>(tl, "k", s.tl.k);
    s.tl.pool_size = jget<int>(tl, "pool", s.tl.pool_size);
    s.tl.mix_train_fraction = jget<double>(tl, "mix_train_fraction", s.tl.mix_train_fraction);
    s.tl.lambda = jget<double>(tl, "lambda", s.tl.lambda);
    const std::string mode = jget<std::string>(tl, "l2_mode", "magnitude");
    if (mode == "magnitude")
        s.tl.l2_mode = L2Mode::Magnitude;
    else if (mode == "deviation")
        s.tl.l2_mode = L2Mode::Deviation;
    else
        throw ConfigError("transfer.l2_mode must be 'magnitude' or 'deviation'");
    s.tl.fisher_points = jget<int>(tl, "fisher_points", s.tl.fisher_points);
    s.tl.boundary_points = jget<int>(tl, "boundary_points", s.tl.boundary_points);
    // unless pinned, the anchors mirror the phase-1 collocation budget
    s.tl.anchor_points = jget<int>(tl, "anchor_points", s.train.n_colloc);
    s.tl.validate();

    const json rf = root.value("reference", json::object());
    require_keys(rf, "reference", {"file", "nx", "nt", "nx_internal", "rtol", "atol"});
    int dnx = 0, dnt = 0;
    default_grid_shape(s.eq, dnx, dnt);
    s.ref_nx = jget<int>(rf, "nx", dnx);
    s.ref_nt = jget<int>(rf, "nt", dnt);
    s.ref_nx_internal = jget<int>(rf, "nx_internal", 1024);
    s.ref_rtol = jget<double>(rf, "rtol", 1e-6);
    s.ref_atol = jget<double>(rf, "atol", 1e-8);
    s.ref_file = jget<std::string>(rf, "file", "");

    s.out_dir = jget<std::string>(root, "out_dir",
                                  std::string("runs/") + to_string(s.eq) + "-" +
                                      to_string(s.family));
    s.net_config();  // validates widths/af shape
    return s;
}

json spec_to_json(const RunSpec& s) {
    json act = {{"family", to_string(s.family)}, {"n", s.af_n}};
    if (s.family == ActFamily::ABU) {
        json cands = json::array();
        for (Candidate c : s.candidates) cands.push_back(to_string(c));
        act["candidates"] = cands;
    }
    return json{
        {"equation", to_string(s.eq)},
        {"activation", act},
        {"seeds", s.seeds},
        {"network", {{"hidden_layers", s.hidden_layers}, {"width", s.width}}},
        {"split",
         {{"train", s.train.split.t_train},
          {"validation", s.train.split.t_val},
          {"test", s.train.split.t_test}}},
        {"train",
         {{"collocation_points", s.train.n_colloc},
          {"boundary_points", s.train.n_boundary},
          {"val_check_every", s.train.val_check_every},
          {"patience", s.train.patience},
          {"min_iters", s.train.min_iters},
          {"workers", s.train.workers},
          {"lbfgs",
           {{"memory", s.train.lbfgs.memory},
            {"max_iters", s.train.lbfgs.max_iters},
            {"grad_tol", s.train.lbfgs.grad_tol},
            {"c1", s.train.lbfgs.c1},
            {"c2", s.train.lbfgs.c2},
            {"max_line_evals", s.train.lbfgs.max_line_evals}}}}},
        {"transfer",
         {{"method", to_string(s.tl.method)},
          {"epochs", s.tl.epochs},
          {"lr", s.tl.lr},
          {"k", s.tl.k},
          {"pool", s.tl.pool_size},
          {"mix_train_fraction", s.tl.mix_train_fraction},
          {"lambda", s.tl.lambda},
          {"l2_mode", s.tl.l2_mode == L2Mode::Magnitude ? "magnitude" : "deviation"},
          {"fisher_points", s.tl.fisher_points},
          {"boundary_points", s.tl.boundary_points}}},
        {"reference",
         {{"file", s.ref_file},
          {"nx", s.ref_nx},
          {"nt", s.ref_nt},
          {"nx_internal", s.ref_nx_internal},
          {"rtol", s.ref_rtol},
          {"atol", s.ref_atol}}},
        {"out_dir", s.out_dir}};
}

RunSpec load_spec(const std::string& path) { return parse_spec(load_json(path)); }

// Work items fan out to a bounded pool; failures are rethrown in job order
// so reruns fail identically regardless of scheduling.
void run_jobs(int njobs, int workers, const std::function<void(int)>& body) {
    workers = std::min(workers, njobs);
    if (workers <= 1) {
        for (int i = 0; i < njobs; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(njobs));
    std::vector<std::thread> ts;
    ts.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        ts.emplace_back([&] {
            for (int i = next.fetch_add(1); i < njobs; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    errs[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    for (auto& t : ts) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

ReferenceGrid obtain_reference(const RunSpec& spec, const fs::path& out_dir,
                               const fs::path& model_dir = {}) {
    auto check = [&](ReferenceGrid g, const std::string& from) {
        if (g.eq != spec.eq)
            throw ConfigError("reference grid in " + from + " solves a different equation");
        return g;
    };
    if (!spec.ref_file.empty()) {
        if (!fs::exists(spec.ref_file))
            throw ConfigError("reference file not found: " + spec.ref_file);
        return check(load_grid(spec.ref_file), spec.ref_file);
    }
    for (const fs::path& d : {out_dir, model_dir}) {
        if (d.empty()) continue;
        const fs::path f = d / "reference.grid";
        if (fs::exists(f)) return check(load_grid(f.string()), f.string());
    }
    PDEProblem p = PDEProblem::make(spec.eq);
    ReferenceGrid g = generate_reference(p, spec.ref_nx, spec.ref_nt, spec.ref_nx_internal,
                                         spec.ref_rtol, spec.ref_atol);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        save_grid((out_dir / "reference.grid").string(), g);
    }
    return g;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw NumericError("mean over an empty set");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

double stdev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

json region_json(const RegionReport& r) {
    return json{{"l2", r.rel_l2}, {"mae", r.rel_mae}, {"points", r.points}};
}

std::string seed_dir_name(std::uint64_t s) { return "seed-" + std::to_string(s); }

// -------------------------------------------------------------- reference

int cmd_reference(const std::string& eq_name, int nx, int nt, int nx_internal, double rtol,
                  double atol, const std::string& out, const std::string& csv,
                  bool skip_convergence) {
    const Equation eq = equation_from_string(eq_name);
    PDEProblem p = PDEProblem::make(eq);
    int dnx = 0, dnt = 0;
    default_grid_shape(eq, dnx, dnt);
    if (nx == 0) nx = dnx;
    if (nt == 0) nt = dnt;
    ReferenceGrid g = generate_reference(p, nx, nt, nx_internal, rtol, atol);
    const fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    save_grid(out, g);
    if (!csv.empty()) export_grid_csv(csv, g);
    if (!skip_convergence) {
        const ConvergenceStudy cs = convergence_study(p, nx, nt, nx_internal, rtol, atol);
        write_json(out + ".convergence.json", json{{"equation", to_string(eq)},
                                                   {"nx_internal", cs.nx_internal},
                                                   {"diff_fine", cs.diff_fine},
                                                   {"diff_coarse", cs.diff_coarse},
                                                   {"ratio", cs.ratio}});
    }
    std::cout << "wrote " << out << " (" << to_string(eq) << ", " << nt << " x " << nx
              << ", internal " << nx_internal << ")\n";
    return 0;
}

// ------------------------------------------------------------------ train

int cmd_train(const std::string& config_path, const std::string& out_override) {
    RunSpec spec = load_spec(config_path);
    if (!out_override.empty()) spec.out_dir = out_override;
    const fs::path out(spec.out_dir);
    fs::create_directories(out);
    const ReferenceGrid ref = obtain_reference(spec, out);
    write_json(out / "config.json", spec_to_json(spec));

    PDEProblem p = PDEProblem::make(spec.eq);
    const NetConfig ncfg = spec.net_config();
    const std::string af = to_string(spec.family);
    const int n = static_cast<int>(spec.seeds.size());
    std::vector<TrainResult> results(static_cast<std::size_t>(n));

    run_jobs(n, env_workers(), [&](int i) {
        const std::uint64_t s = spec.seeds[static_cast<std::size_t>(i)];
        const fs::path sd = out / seed_dir_name(s);
        fs::create_directories(sd);
        TrainResult r = train_initial(p, ncfg, spec.train, ref, s);
        save_checkpoint((sd / "pre_tl.ckpt").string(), r.net, spec.eq, s);
        write_trace_csv((sd / "trace_train.csv").string(), r.trace);
        fs::remove(sd / "metrics.csv");
        const RegionReport reports[] = {r.train_report, r.val_report, r.extrap_report};
        append_metrics_csv((sd / "metrics.csv").string(), seed_dir_name(s), spec.eq, af, "none",
                           reports);
        write_json(sd / "report.json",
                   json{{"seed", s},
                        {"diverged", r.diverged},
                        {"stop", to_string(r.stop)},
                        {"iterations", r.iters},
                        {"best_val_l2", r.best_val_l2},
                        {"train", region_json(r.train_report)},
                        {"validation", region_json(r.val_report)},
                        {"extrapolation", region_json(r.extrap_report)}});
        results[static_cast<std::size_t>(i)] = std::move(r);
    });

    fs::remove(out / "metrics.csv");
    json per_seed = json::array();
    std::vector<double> tr_l2, tr_mae, va_l2, va_mae, ex_l2, ex_mae;
    json diverged_seeds = json::array();
    for (int i = 0; i < n; ++i) {
        const TrainResult& r = results[static_cast<std::size_t>(i)];
        const std::uint64_t s = spec.seeds[static_cast<std::size_t>(i)];
        const RegionReport reports[] = {r.train_report, r.val_report, r.extrap_report};
        append_metrics_csv((out / "metrics.csv").string(), seed_dir_name(s), spec.eq, af, "none",
                           reports);
        per_seed.push_back(json{{"seed", s},
                                {"diverged", r.diverged},
                                {"stop", to_string(r.stop)},
                                {"iterations", r.iters},
                                {"best_val_l2", r.best_val_l2},
                                {"train", region_json(r.train_report)},
                                {"validation", region_json(r.val_report)},
                                {"extrapolation", region_json(r.extrap_report)}});
        if (r.diverged) {
            diverged_seeds.push_back(s);
            continue;
        }
        tr_l2.push_back(r.train_report.rel_l2);
        tr_mae.push_back(r.train_report.rel_mae);
        va_l2.push_back(r.val_report.rel_l2);
        va_mae.push_back(r.val_report.rel_mae);
        ex_l2.push_back(r.extrap_report.rel_l2);
        ex_mae.push_back(r.extrap_report.rel_mae);
    }
    if (ex_l2.empty()) throw NumericError("every seed diverged; no metrics to aggregate");
    const json mean = {{"train_l2", mean_of(tr_l2)},   {"train_mae", mean_of(tr_mae)},
                       {"val_l2", mean_of(va_l2)},     {"val_mae", mean_of(va_mae)},
                       {"extrap_l2", mean_of(ex_l2)},  {"extrap_mae", mean_of(ex_mae)}};
    const json stdev = {{"train_l2", stdev_of(tr_l2)},  {"train_mae", stdev_of(tr_mae)},
                        {"val_l2", stdev_of(va_l2)},    {"val_mae", stdev_of(va_mae)},
                        {"extrap_l2", stdev_of(ex_l2)}, {"extrap_mae", stdev_of(ex_mae)}};
    write_json(out / "report.json", json{{"phase", "train"},
                                         {"equation", to_string(spec.eq)},
                                         {"activation", af},
                                         {"af_n", spec.af_n},
                                         {"tl_method", "none"},
                                         {"seeds", spec.seeds},
                                         {"diverged_seeds", diverged_seeds},
                                         {"per_seed", per_seed},
                                         {"mean", mean},
                                         {"stdev", stdev}});
    std::cout << to_string(spec.eq) << "/" << af << " train: extrapolation L2 "
              << mean.at("extrap_l2").get<double>() << " +/- "
              << stdev.at("extrap_l2").get<double>() << " over " << ex_l2.size() << " of " << n
              << " seeds -> " << spec.out_dir << '\n';
    return 0;
}

// --------------------------------------------------------------- transfer

struct SeedTransfer {
    bool aborted = false;
    TLEffectReport eff;
    RegionReport post_train, post_val, post_extrap;
};

int cmd_transfer(const std::string& config_path, const std::string& model_dir,
                 const std::string& out_override) {
    RunSpec spec = load_spec(config_path);
    const fs::path mdir(model_dir);
    if (!fs::exists(mdir)) throw ConfigError("model directory not found: " + model_dir);
    const fs::path out = out_override.empty() ? mdir : fs::path(out_override);
    fs::create_directories(out);
    const ReferenceGrid ref = obtain_reference(spec, out, mdir);
    write_json(out / "config_transfer.json", spec_to_json(spec));

    PDEProblem p = PDEProblem::make(spec.eq);
    const std::string af = to_string(spec.family);
    const std::string method = to_string(spec.tl.method);
    const int n = static_cast<int>(spec.seeds.size());
    std::vector<SeedTransfer> results(static_cast<std::size_t>(n));

    run_jobs(n, env_workers(), [&](int i) {
        const std::uint64_t s = spec.seeds[static_cast<std::size_t>(i)];
        const fs::path ck_path = mdir / seed_dir_name(s) / "pre_tl.ckpt";
        if (!fs::exists(ck_path))
            throw ConfigError("missing checkpoint: " + ck_path.string());
        Checkpoint ck = load_checkpoint(ck_path.string());
        if (ck.eq != spec.eq)
            throw ConfigError("checkpoint equation does not match config: " + ck_path.string());
        if (ck.net.cfg.family != spec.family)
            throw ConfigError("checkpoint activation family does not match config: " +
                              ck_path.string());
        const fs::path sd = out / seed_dir_name(s);
        fs::create_directories(sd);

        SelectedPoints sel = select_high_loss_points(ck.net, p, spec.tl.pool_size, spec.tl.k,
                                                     spec.train.split, spec.tl.mix_train_fraction,
                                                     s);
        write_selected_csv((sd / "selected_points.csv").string(), sel);
        TransferResult tr = transfer_train(ck.net, p, sel.points, spec.tl, spec.train.split, s);
        for (std::size_t j = 0; j < tr.net.params.values.size(); ++j)
            if (tr.net.params.mask[j] == 0 &&
                tr.net.params.values[j] != ck.net.params.values[j])
                throw InvariantError("freeze violation: frozen parameter moved in seed " +
                                     std::to_string(s));
        save_checkpoint((sd / "post_tl.ckpt").string(), tr.net, spec.eq, s);
        write_trace_csv((sd / "trace_tl.csv").string(), tr.trace);

        SeedTransfer st;
        st.aborted = tr.aborted;
        json rep{{"seed", s}, {"aborted", tr.aborted}, {"freeze_ok", true},
                 {"selected_points", static_cast<int>(sel.points.size())}};
        if (!tr.aborted) {
            const FieldSampler before = make_sampler(ck.net, spec.eq);
            const FieldSampler after = make_sampler(tr.net, spec.eq);
            st.eff = tl_effect(before, after, ref);
            st.post_train = region_report(after, ref, EvalRegion::Train);
            st.post_val = region_report(after, ref, EvalRegion::Validation);
            st.post_extrap = st.eff.after_extrap;
            fs::remove(sd / "metrics_tl.csv");
            const RegionReport reports[] = {st.post_train, st.post_val, st.post_extrap};
            append_metrics_csv((sd / "metrics_tl.csv").string(), seed_dir_name(s), spec.eq, af,
                               method, reports);
            rep["before"] = json{{"mixed", region_json(st.eff.before_mixed)},
                                 {"extrapolation", region_json(st.eff.before_extrap)}};
            rep["after"] = json{{"mixed", region_json(st.eff.after_mixed)},
                                {"extrapolation", region_json(st.eff.after_extrap)}};
            rep["post"] = json{{"train", region_json(st.post_train)},
                               {"validation", region_json(st.post_val)},
                               {"extrapolation", region_json(st.post_extrap)}};
            rep["forgetting_l2_pct"] = st.eff.forgetting_l2_pct;
            rep["forgetting_mae_pct"] = st.eff.forgetting_mae_pct;
            rep["reduction_l2_pct"] = st.eff.reduction_l2_pct;
            rep["reduction_mae_pct"] = st.eff.reduction_mae_pct;
        }
        write_json(sd / "report_tl.json", rep);
        results[static_cast<std::size_t>(i)] = st;
    });

    fs::remove(out / "metrics_tl.csv");
    json per_seed = json::array();
    std::vector<double> b_ex_l2, b_ex_mae, a_ex_l2, a_ex_mae, b_mx_l2, b_mx_mae, a_mx_l2,
        a_mx_mae, red_l2, red_mae, fgt_l2, fgt_mae;
    json aborted_seeds = json::array();
    for (int i = 0; i < n; ++i) {
        const SeedTransfer& st = results[static_cast<std::size_t>(i)];
        const std::uint64_t s = spec.seeds[static_cast<std::size_t>(i)];
        if (st.aborted) {
            aborted_seeds.push_back(s);
            per_seed.push_back(json{{"seed", s}, {"aborted", true}});
            continue;
        }
        const RegionReport reports[] = {st.post_train, st.post_val, st.post_extrap};
        append_metrics_csv((out / "metrics_tl.csv").string(), seed_dir_name(s), spec.eq, af,
                           method, reports);
        per_seed.push_back(json{{"seed", s},
                                {"aborted", false},
                                {"freeze_ok", true},
                                {"before_extrap", region_json(st.eff.before_extrap)},
                                {"after_extrap", region_json(st.eff.after_extrap)},
                                {"before_mixed", region_json(st.eff.before_mixed)},
                                {"after_mixed", region_json(st.eff.after_mixed)},
                                {"reduction_l2_pct", st.eff.reduction_l2_pct},
                                {"reduction_mae_pct", st.eff.reduction_mae_pct},
                                {"forgetting_l2_pct", st.eff.forgetting_l2_pct},
                                {"forgetting_mae_pct", st.eff.forgetting_mae_pct}});
        b_ex_l2.push_back(st.eff.before_extrap.rel_l2);
        b_ex_mae.push_back(st.eff.before_extrap.rel_mae);
        a_ex_l2.push_back(st.eff.after_extrap.rel_l2);
        a_ex_mae.push_back(st.eff.after_extrap.rel_mae);
        b_mx_l2.push_back(st.eff.before_mixed.rel_l2);
        b_mx_mae.push_back(st.eff.before_mixed.rel_mae);
        a_mx_l2.push_back(st.eff.after_mixed.rel_l2);
        a_mx_mae.push_back(st.eff.after_mixed.rel_mae);
        red_l2.push_back(st.eff.reduction_l2_pct);
        red_mae.push_back(st.eff.reduction_mae_pct);
        fgt_l2.push_back(st.eff.forgetting_l2_pct);
        fgt_mae.push_back(st.eff.forgetting_mae_pct);
    }
    if (a_ex_l2.empty()) throw NumericError("every seed aborted during fine-tuning");
    const json mean = {{"before_extrap_l2", mean_of(b_ex_l2)},
                       {"before_extrap_mae", mean_of(b_ex_mae)},
                       {"after_extrap_l2", mean_of(a_ex_l2)},
                       {"after_extrap_mae", mean_of(a_ex_mae)},
                       {"before_mixed_l2", mean_of(b_mx_l2)},
                       {"before_mixed_mae", mean_of(b_mx_mae)},
                       {"after_mixed_l2", mean_of(a_mx_l2)},
                       {"after_mixed_mae", mean_of(a_mx_mae)},
                       {"reduction_l2_pct", mean_of(red_l2)},
                       {"reduction_mae_pct", mean_of(red_mae)},
                       {"forgetting_l2_pct", mean_of(fgt_l2)},
                       {"forgetting_mae_pct", mean_of(fgt_mae)}};
    const json stdev = {{"after_extrap_l2", stdev_of(a_ex_l2)},
                        {"after_extrap_mae", stdev_of(a_ex_mae)},
                        {"reduction_l2_pct", stdev_of(red_l2)},
                        {"reduction_mae_pct", stdev_of(red_mae)},
                        {"forgetting_l2_pct", stdev_of(fgt_l2)},
                        {"forgetting_mae_pct", stdev_of(fgt_mae)}};
    // same percentages computed on seed-averaged errors, for comparison
    auto pct = [](double before, double after, double sign) {
        return sign * 100.0 * (before - after) / before;
    };
    const json on_means = {
        {"reduction_l2_pct", pct(mean_of(b_ex_l2), mean_of(a_ex_l2), 1.0)},
        {"reduction_mae_pct", pct(mean_of(b_ex_mae), mean_of(a_ex_mae), 1.0)},
        {"forgetting_l2_pct", pct(mean_of(b_mx_l2), mean_of(a_mx_l2), -1.0)},
        {"forgetting_mae_pct", pct(mean_of(b_mx_mae), mean_of(a_mx_mae), -1.0)}};
    write_json(out / "report_tl.json", json{{"phase", "transfer"},
                                            {"equation", to_string(spec.eq)},
                                            {"activation", af},
                                            {"af_n", spec.af_n},
                                            {"tl_method", method},
                                            {"seeds", spec.seeds},
                                            {"aborted_seeds", aborted_seeds},
                                            {"per_seed", per_seed},
                                            {"mean", mean},
                                            {"stdev", stdev},
                                            {"percent_of_mean_errors", on_means}});
    std::cout << to_string(spec.eq) << "/" << af << " " << method
              << " fine-tune: extrapolation L2 " << mean.at("before_extrap_l2").get<double>()
              << " -> " << mean.at("after_extrap_l2").get<double>() << " over "
              << a_ex_l2.size() << " of " << n << " seeds -> " << out.string() << '\n';
    return 0;
}

// ------------------------------------------------------------------ table

struct TableCell {
    std::optional<double> l2_wo, l2_w, mae_wo, mae_w;
};

struct TlMethodRow {
    double fgt_l2 = 0, fgt_mae = 0, red_l2 = 0, red_mae = 0;
};

std::string af_display(const std::string& af) {
    if (af == "xsinsq") return "x+sin^2(x)";
    if (af == "abu") return "ABU";
    if (af == "lcxsinsq") return "lc(x+sin^2(x))";
    return af;
}

std::string fmt_cell(const std::optional<double>& v, int prec = 2) {
    if (!v) return "-";
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << *v;
    return os.str();
}

void write_table_file(const fs::path& path, const std::string& title,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> w(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) w[c] = header[c].size();
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], r[c].size());
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << title << "\n\n";
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            os << (c ? " | " : "") << std::left << std::setw(static_cast<int>(w[c])) << cells[c];
        }
        os << '\n';
    };
    line(header);
    std::size_t total = 0;
    for (std::size_t c = 0; c < w.size(); ++c) total += w[c] + (c ? 3 : 0);
    os << std::string(total, '-') << '\n';
    for (const auto& r : rows) line(r);
}

int cmd_table(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty()) throw ConfigError("table needs at least one run directory");
    fs::create_directories(out_dir);

    // af-ordered main tables, comparison tables, and tl-method tables
    std::map<std::string, std::map<std::string, TableCell>> cells;  // eq -> af -> cell
    std::map<std::string, std::map<std::string, TlMethodRow>> tl_rows;

    for (const std::string& dir : run_dirs) {
        bool found = false;
        const fs::path train_rep = fs::path(dir) / "report.json";
        if (fs::exists(train_rep)) {
            found = true;
            const json r = load_json(train_rep.string());
            const std::string eq = r.at("equation"), af = r.at("activation");
            TableCell& c = cells[eq][af];
            c.l2_wo = r.at("mean").at("extrap_l2").get<double>();
            c.mae_wo = r.at("mean").at("extrap_mae").get<double>();
        }
        const fs::path tl_rep = fs::path(dir) / "report_tl.json";
        if (fs::exists(tl_rep)) {
            found = true;
            const json r = load_json(tl_rep.string());
            for (const auto& ps : r.at("per_seed"))
                if (!ps.value("aborted", false) && !ps.value("freeze_ok", true))
                    throw InvariantError("run " + dir + " reports a freeze violation");
            const std::string eq = r.at("equation"), af = r.at("activation");
            TableCell& c = cells[eq][af];
            if (!c.l2_wo) c.l2_wo = r.at("mean").at("before_extrap_l2").get<double>();
            if (!c.mae_wo) c.mae_wo = r.at("mean").at("before_extrap_mae").get<double>();
            c.l2_w = r.at("mean").at("after_extrap_l2").get<double>();
            c.mae_w = r.at("mean").at("after_extrap_mae").get<double>();
            TlMethodRow& m = tl_rows[eq][r.at("tl_method").get<std::string>()];
            m.fgt_l2 = r.at("mean").at("forgetting_l2_pct").get<double>();
            m.fgt_mae = r.at("mean").at("forgetting_mae_pct").get<double>();
            m.red_l2 = r.at("mean").at("reduction_l2_pct").get<double>();
            m.red_mae = r.at("mean").at("reduction_mae_pct").get<double>();
        }
        if (!found) throw ConfigError("no report.json or report_tl.json under " + dir);
    }

    const std::vector<std::string> af_order = {"tanh", "xsinsq", "abu",
                                               "lctanh", "lcsin", "lcxsinsq"};
    std::vector<std::string> written;
    for (const auto& [eq, by_af] : cells) {
        std::vector<std::vector<std::string>> rows;
        auto add_row = [&](const std::string& af, const TableCell& c) {
            rows.push_back({af_display(af), fmt_cell(c.l2_wo), fmt_cell(c.l2_w),
                            fmt_cell(c.mae_wo), fmt_cell(c.mae_w)});
        };
        for (const std::string& af : af_order) {
            auto it = by_af.find(af);
            if (it != by_af.end()) add_row(af, it->second);
        }
        for (const auto& [af, c] : by_af)
            if (std::find(af_order.begin(), af_order.end(), af) == af_order.end())
                add_row(af, c);
        const fs::path f = fs::path(out_dir) / ("table_" + eq + ".txt");
        write_table_file(f, "Extrapolation error by activation function (" + eq + ")",
                         {"AF", "L2 w/o TL", "L2 w/ TL", "MAE w/o TL", "MAE w/ TL"}, rows);
        written.push_back(f.string());

        // published single-number baselines for the same benchmark
        const std::string flag_af = eq == "kdv" ? "lcxsinsq" : "lctanh";
        std::vector<std::pair<std::string, double>> baselines;
        if (eq == "ac") baselines = {{"SA-PINN", 0.18}, {"w-s PINN", 0.14}, {"DPM", 0.18}};
        if (eq == "kdv") baselines = {{"s-d PINN", 0.14}};
        if (eq == "burgers") baselines = {{"SA-PINN", 0.08}, {"DPM", 0.09}};
        std::vector<std::vector<std::string>> crows;
        auto itf = by_af.find(flag_af);
        const TableCell fc = itf == by_af.end() ? TableCell{} : itf->second;
        crows.push_back({af_display(flag_af) + " w/o TL (ours)", fmt_cell(fc.l2_wo)});
        crows.push_back({af_display(flag_af) + " w/ TL (ours)", fmt_cell(fc.l2_w)});
        for (const auto& [name, value] : baselines)
            crows.push_back({name, fmt_cell(value)});
        const fs::path cf = fs::path(out_dir) / ("comparison_" + eq + ".txt");
        write_table_file(cf, "Extrapolation L2 against published baselines (" + eq + ")",
                         {"Method", "L2 extrapolation error"}, crows);
        written.push_back(cf.string());
    }

    for (const auto& [eq, by_m] : tl_rows) {
        std::vector<std::vector<std::string>> rows;
        for (const std::string& m : {"vanilla", "l2", "ewc"}) {
            auto it = by_m.find(m);
            if (it == by_m.end()) continue;
            rows.push_back({m, fmt_cell(it->second.fgt_l2, 1), fmt_cell(it->second.fgt_mae, 1),
                            fmt_cell(it->second.red_l2, 1), fmt_cell(it->second.red_mae, 1)});
        }
        if (rows.empty()) continue;
        const fs::path f = fs::path(out_dir) / ("tl_methods_" + eq + ".txt");
        write_table_file(f,
                         "Forgetting on [0,0.8] and extrapolation-error reduction on (0.8,1.0] "
                         "by fine-tuning method (" + eq + ")",
                         {"TL method", "forgetting L2 %", "forgetting MAE %", "reduction L2 %",
                          "reduction MAE %"},
                         rows);
        written.push_back(f.string());
    }
    for (const std::string& f : written) std::cout << "wrote " << f << '\n';
    return 0;
}

// ------------------------------------------------------------------- plot

struct SvgCanvas {
    std::ostringstream body;
    double W = 720, H = 480, ml = 72, mr = 24, mt = 48, mb = 56;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); }
    double py(double y) const { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); }

    void axes(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
        body << "<rect x='" << ml << "' y='" << mt << "' width='" << W - ml - mr
             << "' height='" << H - mt - mb
             << "' fill='none' stroke='#333' stroke-width='1'/>\n";
        body << "<text x='" << W / 2 << "' y='" << mt - 16
             << "' text-anchor='middle' font-size='15' font-family='sans-serif'>" << title
             << "</text>\n";
        body << "<text x='" << W / 2 << "' y='" << H - 12
             << "' text-anchor='middle' font-size='12' font-family='sans-serif'>" << xlabel
             << "</text>\n";
        body << "<text x='16' y='" << H / 2
             << "' text-anchor='middle' font-size='12' font-family='sans-serif' "
                "transform='rotate(-90 16 "
             << H / 2 << ")'>" << ylabel << "</text>\n";
        for (int i = 0; i <= 4; ++i) {
            const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
            std::ostringstream lx, ly;
            lx << std::setprecision(3) << fx;
            ly << std::setprecision(3) << fy;
            body << "<line x1='" << px(fx) << "' y1='" << H - mb << "' x2='" << px(fx) << "' y2='"
                 << H - mb + 5 << "' stroke='#333'/>\n";
            body << "<text x='" << px(fx) << "' y='" << H - mb + 18
                 << "' text-anchor='middle' font-size='11' font-family='sans-serif'>" << lx.str()
                 << "</text>\n";
            body << "<line x1='" << ml - 5 << "' y1='" << py(fy) << "' x2='" << ml << "' y2='"
                 << py(fy) << "' stroke='#333'/>\n";
            body << "<text x='" << ml - 9 << "' y='" << py(fy) + 4
                 << "' text-anchor='end' font-size='11' font-family='sans-serif'>" << ly.str()
                 << "</text>\n";
        }
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                  bool dashed, double width = 1.6) {
        body << "<polyline fill='none' stroke='" << color << "' stroke-width='" << width << "'";
        if (dashed) body << " stroke-dasharray='7 4'";
        body << " points='";
        for (const auto& [x, y] : pts) body << px(x) << ',' << py(y) << ' ';
        body << "'/>\n";
    }

    void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
        double y = mt + 16;
        for (const auto& [label, color] : entries) {
            body << "<line x1='" << ml + 12 << "' y1='" << y - 4 << "' x2='" << ml + 40
                 << "' y2='" << y - 4 << "' stroke='" << color << "' stroke-width='2'/>\n";
            body << "<text x='" << ml + 46 << "' y='" << y
                 << "' font-size='12' font-family='sans-serif'>" << label << "</text>\n";
            y += 17;
        }
    }

    void write(const std::string& path) {
        std::ofstream os(path);
        if (!os) throw ConfigError("cannot write " + path);
        os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
           << "' viewBox='0 0 " << W << ' ' << H << "'>\n"
           << "<rect width='100%' height='100%' fill='white'/>\n"
           << body.str() << "</svg>\n";
    }
};

const char* kCurveColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};

int cmd_plot_slice(const std::string& grid_path, double t, const std::vector<std::string>& models,
                   std::vector<std::string> labels, const std::string& out) {
    const ReferenceGrid g = load_grid(grid_path);
    int row = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.nt; ++i) {
        const double d = std::abs(g.t_at(i) - t);
        if (d < best) {
            best = d;
            row = i;
        }
    }
    const double t_row = g.t_at(row);
    std::vector<std::vector<std::pair<double, double>>> curves;
    std::vector<std::pair<double, double>> refc;
    for (int j = 0; j < g.nx; ++j) refc.emplace_back(g.x_at(j), g.at(row, j));
    curves.push_back(refc);
    std::vector<std::string> names = {"reference"};
    for (std::size_t m = 0; m < models.size(); ++m) {
        Checkpoint ck = load_checkpoint(models[m]);
        if (ck.eq != g.eq)
            throw ConfigError("model " + models[m] + " solves a different equation");
        const FieldSampler f = make_sampler(ck.net, ck.eq);
        std::vector<std::pair<double, double>> c;
        for (int j = 0; j < g.nx; ++j) c.emplace_back(g.x_at(j), f(t_row, g.x_at(j)));
        curves.push_back(std::move(c));
        names.push_back(m < labels.size() ? labels[m]
                                          : fs::path(models[m]).stem().string());
    }
    SvgCanvas svg;
    svg.x0 = g.x_lo;
    svg.x1 = g.x_hi;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : curves)
        for (const auto& [x, y] : c) {
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
    const double pad = 0.06 * std::max(hi - lo, 1e-12);
    svg.y0 = lo - pad;
    svg.y1 = hi + pad;
    std::ostringstream title;
    title << "solution slice, " << to_string(g.eq) << " at t = " << t_row;
    svg.axes(title.str(), "x", "u(t, x)");
    std::vector<std::pair<std::string, std::string>> leg;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const std::string color = i == 0 ? "#111111" : kCurveColors[(i - 1) % 4];
        svg.polyline(curves[i], color, i != 0);
        leg.emplace_back(names[i], color);
    }
    svg.legend(leg);
    svg.write(out);
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_plot_scatter(const std::string& points_csv, const std::string& out) {
    std::ifstream is(points_csv);
    if (!is) throw ConfigError("cannot open " + points_csv);
    std::string line;
    if (!std::getline(is, line) || line != "t,x,r2")
        throw ConfigError("unexpected header in " + points_csv);
    std::vector<std::pair<double, double>> pts;
    while (std::getline(is, line)) {
        double t = 0, x = 0, r2 = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &x, &r2) != 3)
            throw ConfigError("bad row in " + points_csv + ": " + line);
        pts.emplace_back(t, x);
    }
    SvgCanvas svg;
    svg.x0 = 0;
    svg.x1 = 1;
    svg.y0 = -1;
    svg.y1 = 1;
    svg.axes("selected collocation points (" + std::to_string(pts.size()) + ")", "t", "x");
    for (double tb : {0.5, 0.8})
        svg.body << "<line x1='" << svg.px(tb) << "' y1='" << svg.py(-1) << "' x2='" << svg.px(tb)
                 << "' y2='" << svg.py(1)
                 << "' stroke='#999' stroke-width='1' stroke-dasharray='4 4'/>\n";
    for (const auto& [t, x] : pts)
        svg.body << "<circle cx='" << svg.px(t) << "' cy='" << svg.py(x)
                 << "' r='3' fill='#1f77b4' fill-opacity='0.7'/>\n";
    svg.write(out);
    std::cout << "wrote " << out << " (" << pts.size() << " points)\n";
    return 0;
}

int cmd_plot_gradbars(const std::string& model, int n_points, std::uint64_t seed,
                      const std::string& out) {
    Checkpoint ck = load_checkpoint(model);
    PDEProblem p = PDEProblem::make(ck.eq);
    CollocationSet colloc = uniform_collocation(n_points, 0.0, 0.5, seed);
    std::vector<double> bts;
    if (p.needs_boundary_loss) bts = uniform_boundary_ts(200, 0.0, 0.8, seed);
    PdeLoss loss(p, std::move(colloc), std::move(bts));
    const std::vector<LayerGradNorm> prof = grad_norm_profile(ck.net, loss);

    SvgCanvas svg;
    svg.x0 = 0;
    svg.x1 = static_cast<double>(prof.size());
    double lo = 0, hi = 0;
    for (const auto& g : prof) {
        lo = std::min(lo, g.value);
        hi = std::max(hi, g.value);
    }
    const double pad = 0.08 * std::max(hi - lo, 1.0);
    svg.y0 = lo - pad;
    svg.y1 = hi + pad;
    svg.axes("layer-wise loss-gradient norms, " + std::string(to_string(ck.eq)) +
                 " (log|Wg| + log|bg|)",
             "layer", "log-norm sum");
    const double zero_y = svg.py(0.0);
    svg.body << "<line x1='" << svg.px(svg.x0) << "' y1='" << zero_y << "' x2='"
             << svg.px(svg.x1) << "' y2='" << zero_y << "' stroke='#666' stroke-width='1'/>\n";
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double cx = static_cast<double>(i) + 0.5;
        const double bw = 0.6;
        const double xl = svg.px(cx - bw / 2), xr = svg.px(cx + bw / 2);
        const double yv = svg.py(prof[i].value);
        const double yt = std::min(yv, zero_y), yb = std::max(yv, zero_y);
        if (prof[i].flagged)
            svg.body << "<rect x='" << xl << "' y='" << zero_y - 2 << "' width='" << xr - xl
                     << "' height='4' fill='none' stroke='#d62728' stroke-width='1.5'/>\n";
        else
            svg.body << "<rect x='" << xl << "' y='" << yt << "' width='" << xr - xl
                     << "' height='" << std::max(yb - yt, 0.5)
                     << "' fill='#1f77b4' fill-opacity='0.85'/>\n";
        svg.body << "<text x='" << svg.px(cx) << "' y='" << svg.H - svg.mb + 18
                 << "' text-anchor='middle' font-size='11' font-family='sans-serif'>L"
                 << prof[i].layer + 1 << "</text>\n";
    }
    svg.write(out);
    std::cout << "wrote " << out << " (" << prof.size() << " layers)\n";
    return 0;
}

// ----------------------------------------------------------------- timing

std::string hardware_descriptor() {
    std::string model = "unknown cpu";
    std::ifstream is("/proc/cpuinfo");
    std::string line;
    while (std::getline(is, line)) {
        const auto pos = line.find("model name");
        if (pos == std::string::npos) continue;
        const auto colon = line.find(':');
        if (colon != std::string::npos) {
            model = line.substr(colon + 1);
            while (!model.empty() && model.front() == ' ') model.erase(model.begin());
        }
        break;
    }
    return model + ", " + std::to_string(std::thread::hardware_concurrency()) +
           " hardware threads";
}

int cmd_timing(const std::string& config_path, const std::string& out) {
    RunSpec spec = load_spec(config_path);
    if (spec.seeds.empty()) throw ConfigError("timing needs at least one seed");
    const std::uint64_t seed = spec.seeds.front();
    PDEProblem p = PDEProblem::make(spec.eq);
    const ReferenceGrid ref = obtain_reference(spec, fs::path());

    struct Row {
        ActFamily family;
        bool with_tl;
        const char* label;
    };
    const Row plan[] = {{ActFamily::Tanh, false, "tanh w/o TL"},
                        {ActFamily::LCTanh, false, "lctanh w/o TL"},
                        {ActFamily::Tanh, true, "tanh w/ TL"},
                        {ActFamily::LCTanh, true, "lctanh w/ TL"}};
    std::vector<std::vector<std::string>> rows;
    for (const Row& r : plan) {
        RunSpec s2 = spec;
        s2.family = r.family;
        s2.af_n = default_af_n(r.family);
        s2.candidates.clear();
        const auto t0 = std::chrono::steady_clock::now();
        TrainResult tr = train_initial(p, s2.net_config(), s2.train, ref, seed);
        if (r.with_tl && !tr.diverged) {
            SelectedPoints sel =
                select_high_loss_points(tr.net, p, s2.tl.pool_size, s2.tl.k, s2.train.split,
                                        s2.tl.mix_train_fraction, seed);
            (void)transfer_train(tr.net, p, sel.points, s2.tl, s2.train.split, seed);
        }
        const double mins =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
        std::ostringstream v;
        v << std::fixed << std::setprecision(2) << mins;
        rows.push_back({r.label, v.str() + (tr.diverged ? " (diverged)" : "")});
        std::cout << r.label << ": " << v.str() << " min\n";
    }
    const fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_table_file(out_path,
                     "Training time (" + std::string(to_string(spec.eq)) + ", seed " +
                         std::to_string(seed) + ")\nhardware: " + hardware_descriptor(),
                     {"Method", "Training Time (min)"}, rows);
    std::cout << "wrote " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"experiment runner: reference grids, two-phase training, tables, plots"};
    app.require_subcommand(1);
    int rc = 0;

    // reference
    auto* ref = app.add_subcommand("reference", "generate a finite-difference reference grid");
    std::string r_eq, r_out, r_csv;
    int r_nx = 0, r_nt = 0, r_nxi = 1024;
    double r_rtol = 1e-6, r_atol = 1e-8;
    bool r_nocs = false;
    ref->add_option("--equation", r_eq, "ac | kdv | burgers")->required();
    ref->add_option("--nx", r_nx, "output spatial points (default: per-equation shape)");
    ref->add_option("--nt", r_nt, "output time points (default: per-equation shape)");
    ref->add_option("--nx-internal", r_nxi, "internal solver resolution");
    ref->add_option("--rtol", r_rtol, "relative tolerance");
    ref->add_option("--atol", r_atol, "absolute tolerance");
    ref->add_option("--out", r_out, "grid file to write")->required();
    ref->add_option("--csv", r_csv, "also export the grid as csv");
    ref->add_flag("--skip-convergence", r_nocs, "skip the convergence-study sidecar");
    ref->callback([&] {
        rc = cmd_reference(r_eq, r_nx, r_nt, r_nxi, r_rtol, r_atol, r_out, r_csv, r_nocs);
    });

    // train
    auto* tr = app.add_subcommand("train", "phase-1 training across seeds");
    std::string t_cfg, t_out;
    tr->add_option("--config", t_cfg, "experiment config (json)")->required();
    tr->add_option("--out", t_out, "override the config's out_dir");
    tr->callback([&] { rc = cmd_train(t_cfg, t_out); });

    // transfer
    auto* tl = app.add_subcommand("transfer", "phase-2 fine-tuning across seeds");
    std::string l_cfg, l_model, l_out;
    tl->add_option("--config", l_cfg, "experiment config (json)")->required();
    tl->add_option("--model-dir", l_model, "train-phase output directory")->required();
    tl->add_option("--out", l_out, "output directory (default: the model directory)");
    tl->callback([&] { rc = cmd_transfer(l_cfg, l_model, l_out); });

    // table
    auto* tb = app.add_subcommand("table", "assemble result tables from run directories");
    std::vector<std::string> b_dirs;
    std::string b_out = ".";
    tb->add_option("dirs", b_dirs, "run directories with report.json / report_tl.json")
        ->required();
    tb->add_option("--out-dir", b_out, "where to write the table files");
    tb->callback([&] { rc = cmd_table(b_dirs, b_out); });

    // plot
    auto* pl = app.add_subcommand("plot", "emit a standalone svg figure");
    std::string p_kind, p_grid, p_points, p_out;
    std::vector<std::string> p_models, p_labels;
    double p_t = 0.82;
    int p_npts = 1000;
    std::uint64_t p_seed = 0;
    pl->add_option("--kind", p_kind, "slice | scatter | gradbars")->required();
    pl->add_option("--grid", p_grid, "reference grid file (slice)");
    pl->add_option("--t", p_t, "slice time (slice)");
    pl->add_option("--model", p_models, "model checkpoint(s) (slice, gradbars)");
    pl->add_option("--label", p_labels, "curve label(s) (slice)");
    pl->add_option("--points", p_points, "selected-points csv (scatter)");
    pl->add_option("--n-points", p_npts, "collocation points for the profile (gradbars)");
    pl->add_option("--seed", p_seed, "sampling seed (gradbars)");
    pl->add_option("--out", p_out, "svg file to write")->required();
    pl->callback([&] {
        if (p_kind == "slice") {
            if (p_grid.empty()) throw ConfigError("slice needs --grid");
            rc = cmd_plot_slice(p_grid, p_t, p_models, p_labels, p_out);
        } else if (p_kind == "scatter") {
            if (p_points.empty()) throw ConfigError("scatter needs --points");
            rc = cmd_plot_scatter(p_points, p_out);
        } else if (p_kind == "gradbars") {
            if (p_models.size() != 1) throw ConfigError("gradbars needs exactly one --model");
            rc = cmd_plot_gradbars(p_models[0], p_npts, p_seed, p_out);
        } else {
            throw ConfigError("unknown plot kind '" + p_kind + "'");
        }
    });

    // timing
    auto* tm = app.add_subcommand("timing", "wall-clock report for the four standard cells");
    std::string m_cfg, m_out;
    tm->add_option("--config", m_cfg, "experiment config (json)")->required();
    tm->add_option("--out", m_out, "report file to write")->required();
    tm->callback([&] { rc = cmd_timing(m_cfg, m_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // --help succeeds; bad usage is a config error
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    return rc;
}

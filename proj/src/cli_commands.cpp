#include "cli_commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "gruwe/eval.hpp"

namespace gruwe::cli {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0x11; // parameter-init seed tag

void write_json_file(const std::string& path, const json& doc) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write output file: " + path);
    os << doc.dump(2) << "\n";
    if (!os) throw ConfigError("write failed: " + path);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Checkpoint load_ck(const ConfigMap& cfg) {
    return load_checkpoint(cfg.require_string("checkpoint"));
}

std::vector<double> split_ratios(const ConfigMap& cfg) {
    auto r = cfg.get_doubles("split_ratios", {0.7, 0.15, 0.15});
    if (r.size() != 3)
        throw ConfigError("split_ratios must hold exactly three numbers");
    return r;
}

TrainOptions train_options(const ConfigMap& cfg) {
    TrainOptions opt;
    opt.epochs = cfg.get_size("epochs", 30);
    opt.lr = cfg.get_double("lr", 0.01);
    opt.lr_decay = cfg.get_double("lr_decay", 0.99);
    opt.clip_norm = cfg.get_double("clip_norm", 1.0);
    opt.batch_size = cfg.get_size("batch_size", 1);
    opt.workers = cfg.get_size("workers", 1);
    opt.seed = cfg.get_seed("seed", 0);
    opt.observe_fraction = cfg.get_double("observe_fraction", 0.5);
    opt.one_step_prefix_targets = cfg.get_bool("one_step_prefix_targets", false);
    opt.mc_samples = cfg.get_size("mc_samples", 20);
    return opt;
}

std::size_t series_dim(const std::vector<IrregularSeries>& seqs) {
    for (const auto& s : seqs)
        if (!s.values.empty()) return s.values.front().size();
    throw DataError("series file contains no observations to infer a dimension from");
}

void check_series_dim(const std::vector<IrregularSeries>& seqs, std::size_t expected) {
    for (const auto& s : seqs)
        if (!s.values.empty() && s.values.front().size() != expected)
            throw DataError("series dimension " + std::to_string(s.values.front().size()) +
                            " does not match the model's input dimension " +
                            std::to_string(expected));
}

std::size_t max_type_plus_one(const std::vector<EventSequence>& seqs) {
    int hi = -1;
    for (const auto& s : seqs)
        for (int t : s.types) hi = std::max(hi, t);
    return static_cast<std::size_t>(hi + 1);
}

void check_types_below(const std::vector<EventSequence>& seqs, std::size_t K) {
    for (const auto& s : seqs)
        for (int t : s.types)
            if (t < 0 || static_cast<std::size_t>(t) >= K)
                throw DataError("event type " + std::to_string(t) +
                                " is outside the model's range of " + std::to_string(K) +
                                " types");
}

bool has_standardization(const CheckpointMeta& meta) {
    return !meta.standardization.stdev.data.empty();
}

json forecast_metrics_json(const ForecastMetrics& m) {
    return {{"mse", m.mse}, {"mae", m.mae}, {"n_targets", m.n_targets}};
}

json event_metrics_json(const EventMetrics& m) {
    return {{"rmse_time", m.rmse_time},
            {"error_rate", m.error_rate},
            {"mean_ll", m.mean_ll},
            {"n_events", m.n_events},
            {"n_sequences", m.n_sequences}};
}

void emit_report(const ConfigMap& cfg, const json& doc) {
    const std::string path = cfg.get_string("report", "");
    if (path.empty()) {
        // no file configured: the machine-readable document goes to stdout so
        // nothing is ever written outside explicitly requested paths
        std::printf("%s\n", doc.dump(2).c_str());
    } else {
        write_json_file(path, doc);
        std::printf("report written to %s\n", path.c_str());
    }
}

EventEvalConfig event_eval_config(const ConfigMap& cfg, const CheckpointMeta& meta) {
    EventEvalConfig ec;
    ec.mc_samples = cfg.get_size("mc_samples", 20);
    ec.seed = cfg.get_seed("seed", 0);
    ec.horizon_multiplier = cfg.get_double("horizon_multiplier", 20.0);
    ec.grid_points = cfg.get_size("grid_points", 500);
    ec.mean_gap = meta.mean_inter_arrival;
    return ec;
}

} // namespace

// --- key registries ---------------------------------------------------------------

const std::vector<KeyDoc>& train_keys() {
    static const std::vector<KeyDoc> keys = {
        {"task", "\"forecast\" or \"tpp\" (required)"},
        {"data", "input JSONL path (required)"},
        {"checkpoint", "output checkpoint path (required)"},
        {"report", "output report path (default: <checkpoint>.report.json)"},
        {"split_ratios", "[train, val, test] fractions (default [0.7,0.15,0.15])"},
        {"input_dim", "observed variables; default: inferred from data"},
        {"hidden_dim", "state size H (default 32)"},
        {"target_dim", "decoded variables (default: input_dim)"},
        {"event_types", "mark count K; default: inferred from data"},
        {"seed", "master seed: init, split, shuffling, MC (default 0)"},
        {"epochs", "training epochs (default 30)"},
        {"lr", "base learning rate (default 0.01)"},
        {"lr_decay", "per-epoch lr multiplier (default 0.99)"},
        {"clip_norm", "global gradient-norm ceiling (default 1.0)"},
        {"batch_size", "sequences per optimizer step (default 1)"},
        {"workers", "parallel fan-out across a batch (default 1)"},
        {"mc_samples", "compensator samples per interval (default 20)"},
        {"observe_fraction", "conditioning prefix fraction (default 0.5)"},
        {"one_step_prefix_targets", "also fit one-step targets in the prefix (default false)"},
        {"standardize", "z-score forecast data from train-split stats (default true)"},
        {"horizon_multiplier", "next-event horizon, x mean gap (default 20)"},
        {"grid_points", "next-event quadrature resolution (default 500)"},
    };
    return keys;
}

const std::vector<KeyDoc>& eval_keys() {
    static const std::vector<KeyDoc> keys = {
        {"checkpoint", "trained checkpoint path (required)"},
        {"data", "input JSONL path (required)"},
        {"task", "optional; must match the checkpoint's task"},
        {"split", "\"train\" | \"val\" | \"test\" | \"all\" (default test)"},
        {"split_ratios", "[train, val, test] fractions (default [0.7,0.15,0.15])"},
        {"report", "output report path (default: print to stdout)"},
        {"seed", "evaluation MC seed (default 0)"},
        {"mc_samples", "compensator samples per interval (default 20)"},
        {"observe_fraction", "conditioning prefix fraction (default 0.5)"},
        {"one_step_prefix_targets", "score one-step prefix targets too (default false)"},
        {"horizon_multiplier", "next-event horizon, x mean gap (default 20)"},
        {"grid_points", "next-event quadrature resolution (default 500)"},
    };
    return keys;
}

const std::vector<KeyDoc>& predict_keys() {
    static const std::vector<KeyDoc> keys = {
        {"checkpoint", "trained forecasting checkpoint (required)"},
        {"data", "series JSONL to condition on (required)"},
        {"out", "output predictions JSONL path (required)"},
        {"horizons", "offsets from each sequence end (default [1.0])"},
    };
    return keys;
}

const std::vector<KeyDoc>& synth_keys() {
    static const std::vector<KeyDoc> keys = {
        {"generator", "\"decay-process\" | \"poisson\" | \"hawkes\" (required)"},
        {"out", "output JSONL path (required; oracle sidecar at <out>.oracle.json)"},
        {"seed", "generator seed (default 0)"},
        {"n_seq", "sequences to generate (default 100)"},
        {"dim", "decay-process: variables per step (default 3)"},
        {"rate", "decay-process: observation rate (default 2.0)"},
        {"t_span", "decay-process: window length (default 10)"},
        {"p_miss", "decay-process: per-entry masking probability (default 0.3)"},
        {"lambda", "poisson: event rate (default 0.8)"},
        {"t_max", "poisson/hawkes: window length (default 50)"},
        {"mu", "hawkes: background rate (default 0.2)"},
        {"alpha", "hawkes: excitation jump (default 0.8)"},
        {"beta", "hawkes: excitation decay (default 1.0)"},
        {"event_types", "hawkes: mark count (default 1)"},
    };
    return keys;
}

const std::vector<KeyDoc>& inspect_keys() {
    static const std::vector<KeyDoc> keys = {
        {"checkpoint", "checkpoint to describe (required)"},
    };
    return keys;
}

const std::vector<KeyDoc>& bench_keys() {
    static const std::vector<KeyDoc> keys = {
        {"checkpoint", "model to benchmark (required)"},
        {"data", "optional series JSONL; its first sequence becomes the stream"},
        {"steps", "synthetic stream length (default 10000)"},
        {"warmup", "leading updates excluded from stats (default 100)"},
        {"predict_every", "decode after this many updates (default 10)"},
        {"predict_horizon", "decode horizon (default 1.0)"},
        {"seed", "synthetic stream seed (default 0)"},
        {"report", "output report path (default: print to stdout)"},
    };
    return keys;
}

// --- train ------------------------------------------------------------------------

namespace {

int train_forecast_cmd(const ConfigMap& cfg) {
    auto series = load_series_jsonl(cfg.require_string("data"));
    const auto ratios = split_ratios(cfg);
    const std::uint64_t seed = cfg.get_seed("seed", 0);
    const auto split = split_dataset(series.size(), ratios[0], ratios[1], ratios[2], seed);

    StandardizationStats stats;
    const bool standardize = cfg.get_bool("standardize", true);
    if (standardize && !split.train.empty()) {
        stats = compute_standardization(series, split.train);
        apply_standardization(series, stats);
    }

    const std::size_t data_dim = series_dim(series);
    const std::size_t input_dim = cfg.get_size("input_dim", data_dim);
    if (input_dim != data_dim)
        throw ConfigError("input_dim " + std::to_string(input_dim) +
                          " does not match the data dimension " + std::to_string(data_dim));
    const std::size_t hidden_dim = cfg.get_size("hidden_dim", 32);
    const std::size_t target_dim = cfg.get_size("target_dim", input_dim);
    if (target_dim != input_dim)
        throw ConfigError("forecasting decodes the observed variables; target_dim must "
                          "equal input_dim");

    GruweParams p(input_dim, hidden_dim, target_dim, 1);
    RngState init_rng(derive_seed(seed, kInitStream));
    init_params(p, init_rng);

    const auto opt = train_options(cfg);
    const auto train_set = take_subset(series, split.train);
    const auto val_set = take_subset(series, split.val);
    const auto test_set = take_subset(series, split.test);

    const auto report = train_forecast(p, train_set, val_set, opt);

    CheckpointMeta meta;
    meta.task = "forecast";
    meta.seed = seed;
    meta.standardization = stats;
    const std::string ck_path = cfg.require_string("checkpoint");
    save_checkpoint(ck_path, p, meta);

    json doc;
    doc["format"] = "gruwe-report";
    doc["version"] = 1;
    doc["command"] = "train";
    doc["task"] = "forecast";
    doc["seed"] = seed;
    doc["n_train"] = train_set.size();
    doc["n_val"] = val_set.size();
    doc["n_test"] = test_set.size();
    doc["epochs"] = report.train_loss.size();
    doc["train_loss"] = report.train_loss;
    doc["val_metric"] = report.val_metric;
    doc["best_epoch"] = report.best_epoch;
    doc["skipped_sequences"] = report.skipped_sequences;
    if (!test_set.empty())
        doc["test"] = forecast_metrics_json(
            eval_forecast(p, test_set, opt.observe_fraction, opt.one_step_prefix_targets));

    const std::string report_path = cfg.get_string("report", ck_path + ".report.json");
    write_json_file(report_path, doc);

    for (std::size_t e = 0; e < report.train_loss.size(); ++e)
        std::printf("epoch %zu: train %s  val %s  (%.2fs)\n", e, fmt(report.train_loss[e]).c_str(),
                    fmt(report.val_metric[e]).c_str(), report.epoch_seconds[e]);
    std::printf("best epoch %zu; checkpoint %s; report %s\n", report.best_epoch, ck_path.c_str(),
                report_path.c_str());
    return 0;
}

int train_tpp_cmd(const ConfigMap& cfg) {
    auto events = load_events_jsonl(cfg.require_string("data"));
    const auto ratios = split_ratios(cfg);
    const std::uint64_t seed = cfg.get_seed("seed", 0);
    const auto split = split_dataset(events.size(), ratios[0], ratios[1], ratios[2], seed);

    const std::size_t data_types = max_type_plus_one(events);
    if (data_types == 0) throw DataError("event file contains no events");
    const std::size_t event_types = cfg.get_size("event_types", data_types);
    check_types_below(events, event_types);
    const std::size_t hidden_dim = cfg.get_size("hidden_dim", 32);

    GruweParams p(event_types, hidden_dim, event_types, event_types);
    RngState init_rng(derive_seed(seed, kInitStream));
    init_params(p, init_rng);

    const auto opt = train_options(cfg);
    const auto train_set = take_subset(events, split.train);
    const auto val_set = take_subset(events, split.val);
    const auto test_set = take_subset(events, split.test);

    const auto report = train_tpp(p, train_set, val_set, opt);

    CheckpointMeta meta;
    meta.task = "tpp";
    meta.seed = seed;
    meta.mean_inter_arrival = mean_inter_arrival(train_set);
    const std::string ck_path = cfg.require_string("checkpoint");
    save_checkpoint(ck_path, p, meta);

    json doc;
    doc["format"] = "gruwe-report";
    doc["version"] = 1;
    doc["command"] = "train";
    doc["task"] = "tpp";
    doc["seed"] = seed;
    doc["n_train"] = train_set.size();
    doc["n_val"] = val_set.size();
    doc["n_test"] = test_set.size();
    doc["epochs"] = report.train_loss.size();
    doc["train_loss"] = report.train_loss;
    doc["val_metric"] = report.val_metric;
    doc["best_epoch"] = report.best_epoch;
    doc["mean_inter_arrival"] = meta.mean_inter_arrival;
    if (!test_set.empty())
        doc["test"] = event_metrics_json(
            eval_events(p, test_set, event_eval_config(cfg, meta)));

    const std::string report_path = cfg.get_string("report", ck_path + ".report.json");
    write_json_file(report_path, doc);

    for (std::size_t e = 0; e < report.train_loss.size(); ++e)
        std::printf("epoch %zu: train %s  val %s  (%.2fs)\n", e, fmt(report.train_loss[e]).c_str(),
                    fmt(report.val_metric[e]).c_str(), report.epoch_seconds[e]);
    std::printf("best epoch %zu; checkpoint %s; report %s\n", report.best_epoch, ck_path.c_str(),
                report_path.c_str());
    return 0;
}

} // namespace

int cmd_train(const ConfigMap& cfg) {
    const std::string task = cfg.require_string("task");
    if (task == "forecast") return train_forecast_cmd(cfg);
    if (task == "tpp") return train_tpp_cmd(cfg);
    throw ConfigError("task must be \"forecast\" or \"tpp\", got \"" + task + "\"");
}

// --- eval -------------------------------------------------------------------------

namespace {

std::vector<std::size_t> chosen_indices(const DatasetSplit& split, const std::string& which,
                                        std::size_t n) {
    if (which == "train") return split.train;
    if (which == "val") return split.val;
    if (which == "test") return split.test;
    if (which == "all") {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    throw ConfigError("split must be train, val, test, or all; got \"" + which + "\"");
}

} // namespace

int cmd_eval(const ConfigMap& cfg) {
    const auto ck = load_ck(cfg);
    if (cfg.has("task") && cfg.get_string("task", "") != ck.meta.task)
        throw ConfigError("checkpoint was trained for task \"" + ck.meta.task +
                          "\" but the config asks for \"" + cfg.get_string("task", "") + "\"");

    const std::string data_path = cfg.require_string("data");
    const auto ratios = split_ratios(cfg);
    const std::string which = cfg.get_string("split", "test");

    json doc;
    doc["format"] = "gruwe-report";
    doc["version"] = 1;
    doc["command"] = "eval";
    doc["task"] = ck.meta.task;
    doc["split"] = which;

    if (ck.meta.task == "forecast") {
        auto series = load_series_jsonl(data_path);
        check_series_dim(series, ck.params.input_dim);
        if (has_standardization(ck.meta))
            apply_standardization(series, ck.meta.standardization);
        const auto split = split_dataset(series.size(), ratios[0], ratios[1], ratios[2],
                                         ck.meta.seed);
        const auto subset = take_subset(series, chosen_indices(split, which, series.size()));
        const auto metrics =
            eval_forecast(ck.params, subset, cfg.get_double("observe_fraction", 0.5),
                          cfg.get_bool("one_step_prefix_targets", false));
        doc["n_sequences"] = subset.size();
        doc["metrics"] = forecast_metrics_json(metrics);
        std::printf("forecast metrics on %s split (%zu sequences)\n", which.c_str(),
                    subset.size());
        std::printf("  mse        %s\n", fmt(metrics.mse).c_str());
        std::printf("  mae        %s\n", fmt(metrics.mae).c_str());
        std::printf("  targets    %zu\n", metrics.n_targets);
    } else {
        auto events = load_events_jsonl(data_path);
        check_types_below(events, ck.params.event_types);
        const auto split = split_dataset(events.size(), ratios[0], ratios[1], ratios[2],
                                         ck.meta.seed);
        const auto subset = take_subset(events, chosen_indices(split, which, events.size()));
        const auto metrics = eval_events(ck.params, subset, event_eval_config(cfg, ck.meta));
        doc["n_sequences"] = subset.size();
        doc["metrics"] = event_metrics_json(metrics);
        std::printf("event metrics on %s split (%zu sequences, %zu events)\n", which.c_str(),
                    metrics.n_sequences, metrics.n_events);
        std::printf("  rmse_time  %s\n", fmt(metrics.rmse_time).c_str());
        std::printf("  error_rate %s\n", fmt(metrics.error_rate).c_str());
        std::printf("  mean_ll    %s\n", fmt(metrics.mean_ll).c_str());
    }

    emit_report(cfg, doc);
    return 0;
}

// --- predict ----------------------------------------------------------------------

int cmd_predict(const ConfigMap& cfg) {
    const auto ck = load_ck(cfg);
    if (ck.meta.task != "forecast")
        throw ConfigError("predict needs a forecasting checkpoint; this one was trained "
                          "for task \"" + ck.meta.task + "\"");

    const auto horizons = cfg.get_doubles("horizons", {1.0});
    if (horizons.empty()) throw ConfigError("horizons must not be empty");
    for (double h : horizons)
        if (!(h >= 0.0) || !std::isfinite(h))
            throw ConfigError("horizons must be finite and non-negative");

    auto series = load_series_jsonl(cfg.require_string("data"));
    check_series_dim(series, ck.params.input_dim);
    const bool standardized = has_standardization(ck.meta);
    if (standardized) apply_standardization(series, ck.meta.standardization);

    const std::string out_path = cfg.require_string("out");
    std::ofstream os(out_path);
    if (!os) throw ConfigError("cannot write output file: " + out_path);
    os << json{{"format", "gruwe-predictions"}, {"version", 1}}.dump() << "\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto fwd = forward_sequence(ck.params, series[i]);
        const MarkovState state =
            fwd.states.empty() ? ck.params.initial_state(0.0) : fwd.states.back();
        json preds = json::array();
        for (double h : horizons) {
            DenseVector y = predict_at(ck.params, state, h);
            if (standardized) y = destandardize(y, ck.meta.standardization);
            preds.push_back(y.data);
        }
        os << json{{"index", i},
                   {"last_time", state.last_time},
                   {"horizons", horizons},
                   {"predictions", preds}}
                  .dump()
           << "\n";
    }
    if (!os) throw ConfigError("write failed: " + out_path);
    std::printf("%zu sequences x %zu horizons -> %s\n", series.size(), horizons.size(),
                out_path.c_str());
    return 0;
}

// --- synth ------------------------------------------------------------------------

namespace {

void reject_inapplicable(const ConfigMap& cfg, const std::string& generator,
                         const std::vector<std::string>& applicable) {
    static const std::vector<std::string> specific = {
        "dim", "rate", "t_span", "p_miss", "lambda", "t_max",
        "mu",  "alpha", "beta",  "event_types"};
    for (const auto& key : specific) {
        if (!cfg.has(key)) continue;
        if (std::find(applicable.begin(), applicable.end(), key) == applicable.end())
            throw ConfigError("config key '" + key + "' does not apply to generator '" +
                              generator + "'");
    }
}

} // namespace

int cmd_synth(const ConfigMap& cfg) {
    const std::string generator = cfg.require_string("generator");
    const std::string out = cfg.require_string("out");
    const std::uint64_t seed = cfg.get_seed("seed", 0);
    const std::size_t n_seq = cfg.get_size("n_seq", 100);
    RngState rng(seed);

    json oracle;
    oracle["format"] = "gruwe-oracle";
    oracle["version"] = 1;
    oracle["generator"] = generator;
    oracle["seed"] = seed;

    if (generator == "decay-process") {
        reject_inapplicable(cfg, generator, {"dim", "rate", "t_span", "p_miss"});
        DecayProcessConfig dc;
        dc.n_seq = n_seq;
        dc.dim = cfg.get_size("dim", 3);
        dc.rate = cfg.get_double("rate", 2.0);
        dc.t_span = cfg.get_double("t_span", 10.0);
        dc.p_miss = cfg.get_double("p_miss", 0.3);
        const auto data = gen_decay_process(rng, dc);
        write_series_jsonl(out, data.series);
        json seqs = json::array();
        for (const auto& s : data.oracle.seqs)
            seqs.push_back({{"amp", s.amp.data},
                            {"kappa", s.kappa.data},
                            {"omega", s.omega.data},
                            {"phi", s.phi.data}});
        oracle["seqs"] = std::move(seqs);
    } else if (generator == "poisson") {
        reject_inapplicable(cfg, generator, {"lambda", "t_max"});
        const double lambda = cfg.get_double("lambda", 0.8);
        const double t_max = cfg.get_double("t_max", 50.0);
        const auto data = gen_poisson_events(rng, n_seq, lambda, t_max);
        write_events_jsonl(out, data.sequences);
        oracle["lambda_star"] = data.lambda_star;
        oracle["oracle_ll"] = data.oracle_ll;
    } else if (generator == "hawkes") {
        reject_inapplicable(cfg, generator, {"mu", "alpha", "beta", "t_max", "event_types"});
        const double mu = cfg.get_double("mu", 0.2);
        const double alpha = cfg.get_double("alpha", 0.8);
        const double beta = cfg.get_double("beta", 1.0);
        const double t_max = cfg.get_double("t_max", 50.0);
        const auto types = cfg.get_size("event_types", 1);
        const auto data =
            gen_hawkes_events(rng, n_seq, mu, alpha, beta, t_max, static_cast<int>(types));
        write_events_jsonl(out, data.sequences);
        oracle["mu"] = data.mu;
        oracle["alpha"] = data.alpha;
        oracle["beta"] = data.beta;
        oracle["event_types"] = data.event_types;
        oracle["oracle_ll"] = data.oracle_ll;
    } else {
        throw ConfigError("generator must be decay-process, poisson, or hawkes; got \"" +
                          generator + "\"");
    }

    const std::string oracle_path = out + ".oracle.json";
    write_json_file(oracle_path, oracle);
    std::printf("%zu sequences -> %s (oracle: %s)\n", n_seq, out.c_str(), oracle_path.c_str());
    return 0;
}

// --- inspect ----------------------------------------------------------------------

int cmd_inspect(const ConfigMap& cfg) {
    const auto ck = load_ck(cfg);
    const auto& p = ck.params;
    std::printf("task: %s  seed: %llu\n", ck.meta.task.c_str(),
                static_cast<unsigned long long>(ck.meta.seed));
    std::printf("dims: input=%zu hidden=%zu target=%zu types=%zu (%zu parameters)\n",
                p.input_dim, p.hidden_dim, p.target_dim, p.event_types, p.param_count());
    if (ck.meta.mean_inter_arrival > 0.0)
        std::printf("mean inter-arrival: %s\n", fmt(ck.meta.mean_inter_arrival).c_str());

    const auto& w = p.w_gamma.value.data;
    const auto& b = p.b_gamma.value.data;
    const auto regimes = classify_regimes(w);
    std::printf("%-6s %-12s %-12s %-14s %s\n", "unit", "weight", "bias", "regime",
                "lipschitz");
    for (std::size_t i = 0; i < p.hidden_dim; ++i) {
        const char* name = regime_name(regimes[i]);
        std::string lip = "-";
        if (regimes[i] == DecayRegime::StateReset) lip = fmt(lipschitz_constant(w[i], b[i]));
        std::printf("%-6zu %-12s %-12s %-14s %s\n", i, fmt(w[i]).c_str(), fmt(b[i]).c_str(),
                    name, lip.c_str());
    }
    return 0;
}

// --- bench-online -----------------------------------------------------------------

namespace {

std::vector<StepInput> stream_from_series(const IrregularSeries& s) {
    std::vector<StepInput> out;
    out.reserve(s.times.size());
    double prev = s.times.empty() ? 0.0 : s.times.front();
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        StepInput in;
        in.dt = s.times[i] - prev;
        in.x = s.values[i];
        in.m = s.mask[i];
        prev = s.times[i];
        out.push_back(std::move(in));
    }
    return out;
}

std::vector<StepInput> synthetic_stream(std::size_t n, std::size_t dim, std::uint64_t seed) {
    RngState rng(seed);
    std::vector<StepInput> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        StepInput in;
        in.dt = rng.uniform(0.05, 0.5);
        in.x = DenseVector(dim);
        in.m = DenseVector(dim, 1.0);
        for (std::size_t d = 0; d < dim; ++d) in.x[d] = rng.uniform(-1.0, 1.0);
        out.push_back(std::move(in));
    }
    return out;
}

json latency_json(const LatencyStats& st) {
    return {{"count", st.count},   {"min_us", st.min_us},   {"median_us", st.median_us},
            {"p90_us", st.p90_us}, {"max_us", st.max_us},   {"mean_us", st.mean_us}};
}

} // namespace

int cmd_bench_online(const ConfigMap& cfg) {
    const auto ck = load_ck(cfg);

    std::vector<StepInput> stream;
    if (cfg.has("data")) {
        const auto series = load_series_jsonl(cfg.get_string("data", ""));
        if (series.empty()) throw DataError("stream file contains no sequences");
        check_series_dim(series, ck.params.input_dim);
        stream = stream_from_series(series.front());
    } else {
        stream = synthetic_stream(cfg.get_size("steps", 10000), ck.params.input_dim,
                                  cfg.get_seed("seed", 0));
    }

    OnlineBenchConfig bc;
    bc.warmup = cfg.get_size("warmup", 100);
    bc.predict_every = cfg.get_size("predict_every", 10);
    bc.predict_horizon = cfg.get_double("predict_horizon", 1.0);

    const auto rep = bench_online(ck.params, stream, bc);

    json doc;
    doc["format"] = "gruwe-bench";
    doc["version"] = 1;
    doc["steps"] = rep.steps;
    doc["warmup"] = bc.warmup;
    doc["predictions"] = rep.predictions;
    doc["state_bytes"] = rep.state_bytes;
    doc["history_length"] = rep.history_length;
    doc["param_checksum"] = rep.param_checksum;
    doc["total_seconds"] = rep.total_seconds;
    json ud = json::array(), pd = json::array();
    for (const auto& st : rep.update_deciles) ud.push_back(latency_json(st));
    for (const auto& st : rep.predict_deciles) pd.push_back(latency_json(st));
    doc["update_deciles"] = std::move(ud);
    doc["predict_deciles"] = std::move(pd);

    std::printf("%zu updates (%zu warm-up), %zu predictions, state %zu bytes\n", rep.steps,
                bc.warmup, rep.predictions, rep.state_bytes.front());
    std::printf("%-8s %-10s %-12s %-12s %-12s\n", "decile", "steps", "median_us", "p90_us",
                "max_us");
    for (std::size_t d = 0; d < rep.update_deciles.size(); ++d) {
        const auto& st = rep.update_deciles[d];
        std::printf("%-8zu %-10zu %-12s %-12s %-12s\n", d, st.count, fmt(st.median_us).c_str(),
                    fmt(st.p90_us).c_str(), fmt(st.max_us).c_str());
    }

    emit_report(cfg, doc);
    return 0;
}

} // namespace gruwe::cli

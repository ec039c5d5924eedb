#include "gruwe/eval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>

namespace gruwe {

// --- forecasting -----------------------------------------------------------------

ForecastMetrics eval_forecast(const GruweParams& p,
                              const std::vector<ForecastProblem>& problems) {
    double sq = 0.0, abs = 0.0, weight = 0.0;
    std::size_t n_targets = 0;
    for (const auto& prob : problems) {
        if (prob.n_targets() == 0) continue;
        const auto preds = forecast_predictions(p, prob);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            double here = 0.0;
            for (std::size_t d = 0; d < preds[i].size(); ++d) {
                const double m = prob.m[i][d];
                const double r = preds[i][d] - prob.x[i][d];
                sq += m * r * r;
                abs += m * std::fabs(r);
                here += m;
            }
            weight += here;
            if (here > 0.0) ++n_targets;
        }
    }
    if (weight == 0.0)
        throw DataError("evaluation split contains no observed target entries");
    return {sq / weight, abs / weight, n_targets};
}

ForecastMetrics eval_forecast(const GruweParams& p, const std::vector<IrregularSeries>& test,
                              double observe_fraction, bool one_step_prefix_targets) {
    std::vector<ForecastProblem> problems;
    problems.reserve(test.size());
    for (const auto& s : test)
        problems.push_back(make_forecast_problem(s, observe_fraction, one_step_prefix_targets));
    return eval_forecast(p, problems);
}

// --- event streams ---------------------------------------------------------------

EventMetrics eval_events(const GruweParams& p, const std::vector<EventSequence>& test,
                         const EventEvalConfig& cfg) {
    if (test.empty()) throw DataError("evaluation split contains no event sequences");

    double gap = cfg.mean_gap > 0.0 ? cfg.mean_gap : mean_inter_arrival(test);
    if (!(gap > 0.0))
        throw DataError("evaluation split contains no events to score");
    const double horizon = cfg.horizon_multiplier * gap;

    double sq_time = 0.0;
    std::size_t wrong = 0, n_events = 0;
    double ll_sum = 0.0;

    // tpp_nll only writes gradients when asked; work on a scratch copy so the
    // caller's model is untouched even at the type level
    GruweParams scratch = p;
    const std::uint64_t seq_seed_base = derive_seed(cfg.seed, 0x7A);

    for (std::size_t s = 0; s < test.size(); ++s) {
        const EventSequence& seq = test[s];
        const auto fwd = event_forward(p, seq);
        double prev_t = 0.0;
        for (std::size_t j = 0; j < seq.count(); ++j) {
            const double true_gap = seq.times[j] - prev_t;
            const double predicted =
                predict_next_event_time(p, fwd.states[j], horizon, cfg.grid_points);
            const double err = predicted - true_gap;
            sq_time += err * err;
            if (predict_next_event_type(p, fwd.states[j], true_gap) != seq.types[j]) ++wrong;
            ++n_events;
            prev_t = seq.times[j];
        }
        RngState rng(derive_seed(seq_seed_base, s));
        ll_sum += -tpp_nll(scratch, seq, rng, {cfg.mc_samples, false}).nll;
    }

    if (n_events == 0) throw DataError("evaluation split contains no events to score");

    EventMetrics out;
    out.rmse_time = std::sqrt(sq_time / static_cast<double>(n_events));
    out.error_rate = static_cast<double>(wrong) / static_cast<double>(n_events);
    out.mean_ll = ll_sum / static_cast<double>(test.size());
    out.n_events = n_events;
    out.n_sequences = test.size();
    return out;
}

// --- online benchmark ------------------------------------------------------------

namespace {

std::size_t state_footprint(const MarkovState& st) {
    return sizeof(MarkovState) + st.h.data.size() * sizeof(double);
}

LatencyStats summarize(std::vector<double>& us) {
    LatencyStats st;
    st.count = us.size();
    if (us.empty()) return st;
    std::sort(us.begin(), us.end());
    st.min_us = us.front();
    st.max_us = us.back();
    const std::size_t n = us.size();
    st.median_us = n % 2 == 1 ? us[n / 2] : 0.5 * (us[n / 2 - 1] + us[n / 2]);
    st.p90_us = us[std::min(n - 1, static_cast<std::size_t>(0.9 * static_cast<double>(n)))];
    double sum = 0.0;
    for (double v : us) sum += v;
    st.mean_us = sum / static_cast<double>(n);
    return st;
}

} // namespace

std::uint64_t params_checksum(const GruweParams& p) {
    std::uint64_t h = 1469598103934665603ull; // FNV-1a 64-bit offset basis
    p.visit([&](const Parameter& par) {
        for (double d : par.value.data) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof bits);
            for (int shift = 0; shift < 64; shift += 8) {
                h ^= (bits >> shift) & 0xFF;
                h *= 1099511628211ull;
            }
        }
    });
    return h;
}

OnlineBenchReport bench_online(const GruweParams& p, const std::vector<StepInput>& stream,
                               const OnlineBenchConfig& cfg) {
    if (cfg.predict_every == 0) throw ConfigError("predict_every must be at least 1");
    if (stream.size() <= cfg.warmup)
        throw ConfigError("stream must be longer than the warm-up (" +
                          std::to_string(cfg.warmup) + " updates)");
    const std::size_t measured = stream.size() - cfg.warmup;
    if (measured < 10)
        throw ConfigError("need at least 10 measured updates to form deciles");
    if (!(cfg.predict_horizon > 0.0))
        throw ConfigError("predict horizon must be positive");

    using clock = std::chrono::steady_clock;
    const std::uint64_t checksum_before = params_checksum(p);

    OnlineBenchReport rep;
    rep.steps = stream.size();
    rep.update_deciles.resize(10);
    rep.predict_deciles.resize(10);

    std::vector<std::vector<double>> update_us(10), predict_us(10);
    // decile d covers measured steps [boundary[d-1], boundary[d]); boundaries
    // are absolute stream positions (count of updates consumed)
    std::array<std::size_t, 10> boundary{};
    for (std::size_t d = 0; d < 10; ++d)
        boundary[d] = cfg.warmup + (d + 1) * measured / 10;

    MarkovState st = p.initial_state(0.0);
    const auto bench_start = clock::now();

    double sink = 0.0; // decoded values flow here and into the volatile below
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const auto t0 = clock::now();
        step(p, st, stream[i], nullptr);
        const auto t1 = clock::now();

        const bool measured_step = i >= cfg.warmup;
        std::size_t decile = 0;
        if (measured_step) {
            decile = std::min<std::size_t>(9, (i - cfg.warmup) * 10 / measured);
            update_us[decile].push_back(
                std::chrono::duration<double, std::micro>(t1 - t0).count());
        }

        if ((i + 1) % cfg.predict_every == 0) {
            const auto p0 = clock::now();
            const DenseVector y = predict_at(p, st, cfg.predict_horizon);
            const auto p1 = clock::now();
            for (double v : y.data) sink += v;
            if (measured_step)
                predict_us[decile].push_back(
                    std::chrono::duration<double, std::micro>(p1 - p0).count());
            ++rep.predictions;
        }

        while (rep.history_length.size() < 10 &&
               i + 1 == boundary[rep.history_length.size()]) {
            rep.history_length.push_back(i + 1);
            rep.state_bytes.push_back(state_footprint(st));
        }
    }
    rep.total_seconds =
        std::chrono::duration<double>(clock::now() - bench_start).count();
    volatile double guard = sink; // the decodes must not be elided
    (void)guard;
    for (std::size_t d = 0; d < 10; ++d) {
        rep.update_deciles[d] = summarize(update_us[d]);
        rep.predict_deciles[d] = summarize(predict_us[d]);
    }

    rep.param_checksum = params_checksum(p);
    if (rep.param_checksum != checksum_before)
        throw InternalError("benchmark altered the model parameters");
    return rep;
}

} // namespace gruwe

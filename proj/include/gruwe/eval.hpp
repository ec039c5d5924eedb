#pragma once

// held-out metrics for both tasks plus the online-inference benchmark that
// demonstrates the constant-size-state deployment story: per-step latency and
// state footprint must not grow with the length of the consumed history.

#include <cstdint>
#include <vector>

#include "gruwe/training.hpp"

namespace gruwe {

// --- forecasting -----------------------------------------------------------------

struct ForecastMetrics {
    double mse = 0.0; // sum m (pred - x)^2 / sum m, pooled across sequences
    double mae = 0.0; // sum m |pred - x|  / sum m
    std::size_t n_targets = 0; // prediction vectors that carried >= 1 observed entry
};

// metrics over problems built with the same split protocol as training.
// raises a data error when no observed target entry exists anywhere.
ForecastMetrics eval_forecast(const GruweParams& p,
                              const std::vector<ForecastProblem>& problems);
ForecastMetrics eval_forecast(const GruweParams& p, const std::vector<IrregularSeries>& test,
                              double observe_fraction, bool one_step_prefix_targets);

// --- event streams ---------------------------------------------------------------

struct EventEvalConfig {
    std::size_t mc_samples = 20;      // likelihood compensator samples per interval
    std::uint64_t seed = 0;           // evaluation draws are fixed by this
    double horizon_multiplier = 20.0; // expectation integral reaches this x mean gap
    std::size_t grid_points = 500;    // quadrature resolution of that integral
    double mean_gap = 0.0;            // typical inter-arrival; <= 0 means "measure
                                      // it from the evaluated sequences"
};

struct EventMetrics {
    double rmse_time = 0.0;   // next-arrival error, pooled over all events
    double error_rate = 0.0;  // misclassified next-event types, in [0, 1]
    double mean_ll = 0.0;     // mean per-sequence log-likelihood (higher is better)
    std::size_t n_events = 0;
    std::size_t n_sequences = 0;
};

// every event is scored from its pre-event state: arrival via the expectation
// integral, type at the true inter-arrival horizon, likelihood via the
// Monte-Carlo compensator with per-sequence seeds derived from cfg.seed.
// raises a data error when the test set is empty or contains no events.
EventMetrics eval_events(const GruweParams& p, const std::vector<EventSequence>& test,
                         const EventEvalConfig& cfg);

// --- online benchmark ------------------------------------------------------------

struct LatencyStats {
    double min_us = 0.0;
    double median_us = 0.0;
    double p90_us = 0.0;
    double max_us = 0.0;
    double mean_us = 0.0;
    std::size_t count = 0;
};

struct OnlineBenchConfig {
    std::size_t warmup = 100;      // leading updates excluded from every stat
    std::size_t predict_every = 10; // issue a decode after this many updates
    double predict_horizon = 1.0;   // decode horizon passed to the prediction
};

struct OnlineBenchReport {
    // measured (post-warm-up) steps split into ten contiguous runs; if per-step
    // cost grew with history length these rows would trend upward
    std::vector<LatencyStats> update_deciles;  // 10 entries
    std::vector<LatencyStats> predict_deciles; // 10 entries (count 0 when none fell there)
    std::vector<std::size_t> history_length;   // observations consumed at each decile end
    std::vector<std::size_t> state_bytes;      // state footprint sampled at each decile end
    std::size_t steps = 0;                     // total updates fed, warm-up included
    std::size_t predictions = 0;
    std::uint64_t param_checksum = 0;          // identical before and after by contract
    double total_seconds = 0.0;
};

// feeds the stream one observation at a time through the transition step,
// decoding every predict_every updates, timing each operation with a monotonic
// clock. strictly single-threaded: it measures sequential deployment. verifies
// that the state footprint stays constant and that parameters are untouched.
OnlineBenchReport bench_online(const GruweParams& p, const std::vector<StepInput>& stream,
                               const OnlineBenchConfig& cfg);

// FNV-1a over the bit patterns of every parameter value, in enumeration order
std::uint64_t params_checksum(const GruweParams& p);

} // namespace gruwe

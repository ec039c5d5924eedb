#pragma once

// optimization loop: Adam with epoch-level exponential learning-rate decay and
// global gradient clipping, per-sequence (or small-batch) updates, epoch
// shuffling, validation-based best-epoch selection, and bit-exact checkpoint
// serialization.

#include <cstdint>
#include <string>
#include <vector>

#include "gruwe/heads.hpp"

namespace gruwe {

// --- optimizer -------------------------------------------------------------------

struct OptimizerState {
    double base_lr = 0.01;
    double lr_decay = 0.99; // per-epoch multiplier
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    std::size_t step_count = 0; // Adam bias-correction counter
    std::size_t epoch = 0;      // drives the effective learning rate

    // first/second moments, aligned with the parameter enumeration order
    std::vector<DenseMatrix> m, v;

    void init_for(const GruweParams& p);
    double effective_lr() const;
};

// scales all gradients so the global l2 norm never exceeds max_norm; returns
// the factor applied (1.0 when under the threshold). a non-finite gradient
// raises a training error naming the offending parameter.
double clip_global_norm(GruweParams& p, double max_norm);

// standard bias-corrected Adam update at the optimizer's effective lr
void adam_step(GruweParams& p, OptimizerState& opt);

// --- training loop -----------------------------------------------------------------

struct TrainOptions {
    std::size_t epochs = 30;
    double lr = 0.01;
    double lr_decay = 0.99;
    double clip_norm = 1.0;
    std::size_t batch_size = 1; // sequences per optimizer step
    std::size_t workers = 1;    // parallel fan-out across a batch; 1 = serial reference
    std::uint64_t seed = 0;

    // forecasting
    double observe_fraction = 0.5; // conditioning prefix fraction of the window
    bool one_step_prefix_targets = false;

    // event streams
    std::size_t mc_samples = 20;
};

struct TrainReport {
    std::vector<double> train_loss;    // per epoch, mean over contributing sequences
    std::vector<double> val_metric;    // per epoch (masked MSE or mean NLL; lower is better)
    std::vector<double> epoch_seconds; // wall clock
    std::size_t best_epoch = 0;
    std::size_t skipped_sequences = 0; // cumulative: sequences with nothing to fit
};

// trains in place; on return p holds the parameters of the best validation
// epoch. an empty validation set falls back to the train loss as the metric.
TrainReport train_forecast(GruweParams& p, const std::vector<IrregularSeries>& train_set,
                           const std::vector<IrregularSeries>& val_set,
                           const TrainOptions& opt);

TrainReport train_tpp(GruweParams& p, const std::vector<EventSequence>& train_set,
                      const std::vector<EventSequence>& val_set, const TrainOptions& opt);

// pooled validation metrics, exposed for reuse by evaluation code
double pooled_forecast_mse(const GruweParams& p, const std::vector<ForecastProblem>& problems);
double mean_event_nll(GruweParams& p, const std::vector<EventSequence>& seqs,
                      std::size_t mc_samples, std::uint64_t seed);

// window length divided by event count, pooled over sequences; the default
// quadrature horizon for next-event prediction is a multiple of this
double mean_inter_arrival(const std::vector<EventSequence>& seqs);

// --- checkpointing -----------------------------------------------------------------

struct CheckpointMeta {
    std::string task; // "forecast" | "tpp"
    std::uint64_t seed = 0;
    StandardizationStats standardization; // empty vectors when not standardized
    double mean_inter_arrival = 0.0;      // 0 when not applicable
};

// single JSON document; tensor payloads are hex-encoded 64-bit patterns so the
// round trip is bit-exact
void save_checkpoint(const std::string& path, const GruweParams& p,
                     const CheckpointMeta& meta);

struct Checkpoint {
    GruweParams params;
    CheckpointMeta meta;
};

Checkpoint load_checkpoint(const std::string& path);

} // namespace gruwe

#pragma once

// continuous-time prediction decoders and losses.
//
// both decoders read the decayed state gamma(horizon) .* h, sharing the decay
// parameters with the transition cell:
//   observation decode:  yhat      = W_out (gamma ⊙ h) + b_out
//   per-type intensity:  lambda_k  = softplus(w_k · (gamma ⊙ h) + b_k) > 0
//
// the event-stream loss is the negative log-likelihood
//   -sum_j log lambda_{k_j}(t_j - t_{j-1} | pre-event state)  +  ∫ lambda_total
// with the integral estimated by per-interval uniform Monte Carlo whose sample
// times are drawn once per evaluation and held constant through the backward
// pass. every gradient here is hand-derived reverse mode.

#include <cstdint>
#include <vector>

#include "gruwe/cell.hpp"

namespace gruwe {

// --- decoders -----------------------------------------------------------------

// W_out (gamma(horizon) ⊙ h) + b_out; horizon >= 0
DenseVector predict_at(const GruweParams& p, const MarkovState& st, double horizon);

// accumulates dLoss/d{W_out, b_out, w_gamma, b_gamma} into p.grad and adds
// dLoss/dh into dh_acc (resized to H if empty); dpred = dLoss/dprediction
void predict_at_backward(GruweParams& p, const MarkovState& st, double horizon,
                         const DenseVector& dpred, DenseVector& dh_acc);

// per-type intensities, every component strictly positive
DenseVector intensity_at(const GruweParams& p, const MarkovState& st, double horizon);
double total_intensity_at(const GruweParams& p, const MarkovState& st, double horizon);

// dlambda = dLoss/dlambda (length K); accumulates into p.grad and dh_acc
void intensity_at_backward(GruweParams& p, const MarkovState& st, double horizon,
                           const DenseVector& dlambda, DenseVector& dh_acc);

// --- masked squared-error loss ---------------------------------------------------

struct MaskedMseResult {
    double loss = 0.0;
    double mask_total = 0.0;        // number of observed target entries
    std::vector<DenseVector> grad;  // dLoss/dprediction, same shapes as predictions
};

// loss = sum_i m_i ⊙ (yhat_i - x_i)^2 / sum_i m_i over the targets of ONE
// sequence. an all-masked target set gives loss 0, zero gradients, and
// mask_total 0 so the caller can count the skip.
MaskedMseResult masked_mse_loss(const std::vector<DenseVector>& predictions,
                                const std::vector<DenseVector>& targets,
                                const std::vector<DenseVector>& masks);

// --- forecasting over a split sequence -------------------------------------------

// conditioning prefix plus the prediction targets derived from one series.
// each target reads the state produced by prefix step `source` and decodes at
// the given horizon.
struct ForecastProblem {
    IrregularSeries prefix;
    std::vector<std::size_t> source;
    std::vector<double> horizon;
    std::vector<DenseVector> x, m;

    std::size_t n_targets() const { return horizon.size(); }
};

// split at tau = t_first + rho (t_last - t_first): observations with time <=
// tau form the prefix; later observations become targets decoded from the
// final prefix state at horizon (target time - last prefix time). when
// one_step_prefix_targets is set, each prefix observation i >= 1 is also a
// target decoded from state i-1 at the true inter-observation gap.
ForecastProblem make_forecast_problem(const IrregularSeries& seq, double rho,
                                      bool one_step_prefix_targets);

// predictions for every target of the problem, in order
std::vector<DenseVector> forecast_predictions(const GruweParams& p, const ForecastProblem& prob);

struct ForecastLossResult {
    double loss = 0.0;
    double mask_total = 0.0; // 0 means the sequence contributed nothing (skipped)
    std::size_t n_targets = 0;
};

// masked squared-error loss of the problem's predictions; when
// accumulate_grads is set, the full backward pass (decoder, decay, and
// transition cell) accumulates into p.grad
ForecastLossResult forecast_loss(GruweParams& p, const ForecastProblem& prob,
                                 bool accumulate_grads);

// --- event-stream likelihood -------------------------------------------------------

// event mark encoding consumed by the transition cell: x = one-hot(type),
// m = all-ones (the mask channels are inert constants for event data)
StepInput event_step_input(std::size_t types, int type, double dt);

// states[j] = state after consuming the first j events, so states[j] is the
// pre-event state of event j; states[0] is the zero state at time origin 0.
// tapes align with events. validates ordering, window, and type range.
struct EventForward {
    std::vector<MarkovState> states;
    std::vector<StepTape> tapes;
};
EventForward event_forward(const GruweParams& p, const EventSequence& seq);

struct TppNllOptions {
    std::size_t mc_samples = 20; // per inter-event interval
    bool accumulate_grads = false;
};

struct TppNllResult {
    double nll = 0.0;
    double event_term = 0.0;       // -sum_j log lambda_{k_j}
    double compensator = 0.0;      // Monte-Carlo estimate of ∫ lambda_total
    double compensator_se = 0.0;   // empirical standard error (0 when M < 2)
    std::size_t sample_count = 0;  // M × number of nonempty intervals
};

// negative log-likelihood of one event sequence under the model. `rng` drives
// the compensator sample times; pass a freshly seeded state for reproducible
// results. requires p.input_dim == p.event_types (events enter the cell as
// one-hot marks with an all-ones mask).
TppNllResult tpp_nll(GruweParams& p, const EventSequence& seq, RngState& rng,
                     const TppNllOptions& opt);

// deterministic high-resolution reference for the same integral: per-interval
// trapezoidal quadrature with total_points distributed proportionally to
// interval length (at least 8 per interval)
double tpp_compensator_quadrature(const GruweParams& p, const EventSequence& seq,
                                  std::size_t total_points);

// --- next-event prediction -----------------------------------------------------------

// expected arrival time E[tau] = ∫ s lambda(s) exp(-Lambda(s)) ds on a uniform
// grid of grid_size points over [0, t_max_horizon], with the residual
// probability mass beyond the horizon assigned to t_max_horizon
double predict_next_event_time(const GruweParams& p, const MarkovState& st,
                               double t_max_horizon, std::size_t grid_size);

// argmax_k lambda_k(at_horizon); ties broken toward the lowest index
int predict_next_event_type(const GruweParams& p, const MarkovState& st, double at_horizon);

// --- simulation by thinning ------------------------------------------------------------

struct ThinningResult {
    std::vector<double> times; // relative to the input state's last update
    std::vector<int> types;
};

// samples events on (0, t_max] from the model by thinning. the dominating
// rate is found by a 256-point grid search over each inter-event horizon with
// a 1.5 safety factor; a draw that still exceeds the bound raises an internal
// error rather than silently biasing the sample.
ThinningResult thinning_sample(const GruweParams& p, const MarkovState& st, RngState& rng,
                               double t_max);

// same, with a caller-supplied global bound (exists so the over-bound
// detection path is testable)
ThinningResult thinning_sample_with_bound(const GruweParams& p, const MarkovState& st,
                                          RngState& rng, double t_max, double bound);

} // namespace gruwe

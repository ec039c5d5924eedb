#pragma once

// the state-transition cell: a time-triggered exponential reset of the hidden
// state followed by an observation-triggered masked GRU update.
//
//   g      = gamma(dt) .* h_prev
//   x'     = m .* x
//   z      = sigmoid(W_z x' + U_z g + V_z m + b_z)
//   r      = sigmoid(W_r x' + U_r g + V_r m + b_r)
//   h_cand = tanh(W_h x' + U_h (r .* g) + V_h m + b_h)
//   h_new  = (1 - z) .* g + z .* h_cand
//
// the mask enters through its own V matrices; concatenating [x, m] into one
// input vector would be algebraically equivalent (the V columns are then just
// the trailing input columns). gradients are hand-derived reverse-mode — no
// autodiff — so the finite-difference tests are a genuinely independent oracle.

#include <cstddef>
#include <vector>

#include "gruwe/data.hpp"
#include "gruwe/decay.hpp"
#include "gruwe/numerics.hpp"

namespace gruwe {

// constant-size summary of everything observed so far; the only thing online
// inference has to keep around
struct MarkovState {
    DenseVector h;          // components stay in [-1, 1]
    double last_time = 0.0; // timestamp of the most recent update
};

// every learnable tensor of the model, paired with gradient accumulators.
// the decay pair is shared by the transition and by both prediction decoders.
// both decoders always exist regardless of task; an unused one receives zero
// gradients and never moves under the optimizer.
struct GruweParams {
    std::size_t input_dim = 1;   // D (equal to event_types for the event task)
    std::size_t hidden_dim = 1;  // H
    std::size_t target_dim = 1;  // P, rows of the observation decoder
    std::size_t event_types = 1; // K, rows of the intensity decoder

    Parameter w_gamma, b_gamma;
    Parameter W_z, U_z, V_z, b_z;
    Parameter W_r, U_r, V_r, b_r;
    Parameter W_h, U_h, V_h, b_h;
    Parameter W_out, b_out;
    Parameter W_lambda, b_lambda;

    GruweParams() = default;
    GruweParams(std::size_t input, std::size_t hidden, std::size_t target, std::size_t types);

    // fixed enumeration order; the optimizer, serializer, clipping, and the
    // finite-difference harness all iterate parameters through this
    template <class F> void visit(F&& f) {
        f(w_gamma); f(b_gamma);
        f(W_z); f(U_z); f(V_z); f(b_z);
        f(W_r); f(U_r); f(V_r); f(b_r);
        f(W_h); f(U_h); f(V_h); f(b_h);
        f(W_out); f(b_out);
        f(W_lambda); f(b_lambda);
    }
    template <class F> void visit(F&& f) const {
        f(w_gamma); f(b_gamma);
        f(W_z); f(U_z); f(V_z); f(b_z);
        f(W_r); f(U_r); f(V_r); f(b_r);
        f(W_h); f(U_h); f(V_h); f(b_h);
        f(W_out); f(b_out);
        f(W_lambda); f(b_lambda);
    }

    std::size_t param_count() const;
    void zero_grads();
    double grad_norm() const;
    void add_grads_from(const GruweParams& other); // merge a worker accumulator

    MarkovState initial_state(double start_time = 0.0) const {
        return MarkovState{DenseVector(hidden_dim, 0.0), start_time};
    }
};

// weight matrices uniform on +-1/sqrt(fan_in); biases zero; decay weight
// uniform on [0, 0.1] and decay bias zero so training starts in the decaying
// regime and gradients are free to move units into the other regimes
void init_params(GruweParams& p, RngState& rng);

struct StepInput {
    double dt = 0.0; // elapsed time since the previous update, >= 0
    DenseVector x;   // observed values, zero where the mask is zero
    DenseVector m;   // 1 observed / 0 missing
};

// intermediates cached by the forward step for the backward pass
struct StepTape {
    double dt = 0.0;
    DenseVector h_prev, gamma, g, z, r, h_cand, h_new, x_masked, m;
};

// advances the state in place; fills `tape` when non-null
void step(const GruweParams& p, MarkovState& state, const StepInput& in, StepTape* tape);

// update with nothing observed (x = 0, m = 0); decay and the V·m=0, bias-only
// gate paths still act, so this is a real update, not a no-op
void step_all_masked(const GruweParams& p, MarkovState& state, double dt, StepTape* tape);

struct ForwardResult {
    std::vector<MarkovState> states; // states[i] = state after consuming step i
    std::vector<StepTape> tapes;
};

// consumes a whole series starting from the zero state anchored at the first
// observation's timestamp (dt = 0 on the first step)
ForwardResult forward_sequence(const GruweParams& p, const IrregularSeries& seq);

// reverse-mode sweep over one sequence. upstream[i] is dLoss/dh for the state
// produced by step i (empty vectors are treated as zero). parameter gradients
// accumulate into p; returns dLoss/dh for the initial state.
DenseVector backward_sequence(GruweParams& p, const std::vector<StepTape>& tapes,
                              const std::vector<DenseVector>& upstream);

} // namespace gruwe

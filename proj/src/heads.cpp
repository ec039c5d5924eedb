#include "gruwe/heads.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gruwe {

namespace {

std::span<const double> decay_w(const GruweParams& p) { return {p.w_gamma.value.data}; }
std::span<const double> decay_b(const GruweParams& p) { return {p.b_gamma.value.data}; }

void check_state(const GruweParams& p, const MarkovState& st) {
    if (st.h.size() != p.hidden_dim)
        throw ShapeError("state size " + std::to_string(st.h.size()) +
                         " does not match hidden_dim " + std::to_string(p.hidden_dim));
}

// pre-activations of the intensity decoder at the decayed state d
DenseVector intensity_preact(const GruweParams& p, const DenseVector& d) {
    DenseVector s = matvec(p.W_lambda.value, d);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += p.b_lambda.value.data[k];
    return s;
}

// shared tail of both decoder backward passes: given dLoss/d(gamma ⊙ h),
// push gradients into the decay parameters and the state accumulator
void decayed_state_backward(GruweParams& p, const DenseVector& h, double horizon,
                            const DenseVector& gamma, const DenseVector& dd,
                            DenseVector& dh_acc) {
    if (dh_acc.size() == 0) dh_acc = DenseVector(p.hidden_dim, 0.0);
    DenseVector dgamma(p.hidden_dim);
    for (std::size_t i = 0; i < p.hidden_dim; ++i) {
        dgamma[i] = dd[i] * h[i];
        dh_acc[i] += dd[i] * gamma[i];
    }
    const GammaBackward gb = gamma_backward(decay_w(p), decay_b(p), horizon, gamma, dgamma);
    for (std::size_t i = 0; i < p.hidden_dim; ++i) {
        p.w_gamma.grad.data[i] += gb.grad_w[i];
        p.b_gamma.grad.data[i] += gb.grad_b[i];
    }
}

} // namespace

// --- decoders -----------------------------------------------------------------

DenseVector predict_at(const GruweParams& p, const MarkovState& st, double horizon) {
    check_state(p, st);
    const DenseVector gamma = gamma_vec(decay_w(p), decay_b(p), horizon);
    const DenseVector d = apply_decay(gamma, st.h);
    DenseVector y = matvec(p.W_out.value, d);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += p.b_out.value.data[i];
    return y;
}

void predict_at_backward(GruweParams& p, const MarkovState& st, double horizon,
                         const DenseVector& dpred, DenseVector& dh_acc) {
    check_state(p, st);
    if (dpred.size() != p.target_dim)
        throw ShapeError("prediction gradient size does not match target_dim");
    const DenseVector gamma = gamma_vec(decay_w(p), decay_b(p), horizon);
    const DenseVector d = apply_decay(gamma, st.h);
    add_outer(p.W_out.grad, dpred, d);
    for (std::size_t i = 0; i < dpred.size(); ++i) p.b_out.grad.data[i] += dpred[i];
    const DenseVector dd = matvec_t(p.W_out.value, dpred);
    decayed_state_backward(p, st.h, horizon, gamma, dd, dh_acc);
}

DenseVector intensity_at(const GruweParams& p, const MarkovState& st, double horizon) {
    check_state(p, st);
    const DenseVector gamma = gamma_vec(decay_w(p), decay_b(p), horizon);
    const DenseVector d = apply_decay(gamma, st.h);
    DenseVector s = intensity_preact(p, d);
    DenseVector lam(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) lam[k] = softplus(s[k]);
    return lam;
}

double total_intensity_at(const GruweParams& p, const MarkovState& st, double horizon) {
    const DenseVector lam = intensity_at(p, st, horizon);
    double total = 0.0;
    for (double v : lam.data) total += v;
    return total;
}

void intensity_at_backward(GruweParams& p, const MarkovState& st, double horizon,
                           const DenseVector& dlambda, DenseVector& dh_acc) {
    check_state(p, st);
    if (dlambda.size() != p.event_types)
        throw ShapeError("intensity gradient size does not match event_types");
    const DenseVector gamma = gamma_vec(decay_w(p), decay_b(p), horizon);
    const DenseVector d = apply_decay(gamma, st.h);
    const DenseVector s = intensity_preact(p, d);
    DenseVector ds(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) ds[k] = dlambda[k] * softplus_grad(s[k]);
    add_outer(p.W_lambda.grad, ds, d);
    for (std::size_t k = 0; k < ds.size(); ++k) p.b_lambda.grad.data[k] += ds[k];
    const DenseVector dd = matvec_t(p.W_lambda.value, ds);
    decayed_state_backward(p, st.h, horizon, gamma, dd, dh_acc);
}

// --- masked squared-error loss ---------------------------------------------------

MaskedMseResult masked_mse_loss(const std::vector<DenseVector>& predictions,
                                const std::vector<DenseVector>& targets,
                                const std::vector<DenseVector>& masks) {
    if (predictions.size() != targets.size() || predictions.size() != masks.size())
        throw ShapeError("masked loss: predictions, targets, masks must align");

    MaskedMseResult res;
    double sq = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto& yhat = predictions[i];
        const auto& x = targets[i];
        const auto& m = masks[i];
        if (yhat.size() != x.size() || yhat.size() != m.size())
            throw ShapeError("masked loss: row " + std::to_string(i) + " shapes differ");
        for (std::size_t d = 0; d < yhat.size(); ++d) {
            const double r = yhat[d] - x[d];
            sq += m[d] * r * r;
            res.mask_total += m[d];
        }
    }
    res.grad.reserve(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i)
        res.grad.emplace_back(predictions[i].size(), 0.0);
    if (res.mask_total == 0.0) return res; // nothing observed: loss 0, zero gradient

    res.loss = sq / res.mask_total;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        for (std::size_t d = 0; d < predictions[i].size(); ++d)
            res.grad[i][d] =
                2.0 * masks[i][d] * (predictions[i][d] - targets[i][d]) / res.mask_total;
    return res;
}

// --- forecasting over a split sequence -------------------------------------------

ForecastProblem make_forecast_problem(const IrregularSeries& seq, double rho,
                                      bool one_step_prefix_targets) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw ConfigError("forecast split fraction must lie in [0, 1]");

    ForecastProblem prob;
    if (seq.steps() == 0) return prob;

    const double t0 = seq.times.front();
    const double tau = t0 + rho * (seq.times.back() - t0);
    std::size_t prefix_steps = 0;
    while (prefix_steps < seq.steps() && seq.times[prefix_steps] <= tau) ++prefix_steps;

    prob.prefix.times.assign(seq.times.begin(), seq.times.begin() + prefix_steps);
    prob.prefix.values.assign(seq.values.begin(), seq.values.begin() + prefix_steps);
    prob.prefix.mask.assign(seq.mask.begin(), seq.mask.begin() + prefix_steps);

    if (one_step_prefix_targets) {
        for (std::size_t i = 1; i < prefix_steps; ++i) {
            prob.source.push_back(i - 1);
            prob.horizon.push_back(seq.times[i] - seq.times[i - 1]);
            prob.x.push_back(seq.values[i]);
            prob.m.push_back(seq.mask[i]);
        }
    }
    for (std::size_t i = prefix_steps; i < seq.steps(); ++i) {
        prob.source.push_back(prefix_steps - 1);
        prob.horizon.push_back(seq.times[i] - seq.times[prefix_steps - 1]);
        prob.x.push_back(seq.values[i]);
        prob.m.push_back(seq.mask[i]);
    }
    return prob;
}

std::vector<DenseVector> forecast_predictions(const GruweParams& p,
                                              const ForecastProblem& prob) {
    std::vector<DenseVector> preds;
    if (prob.n_targets() == 0) return preds;
    const ForwardResult fr = forward_sequence(p, prob.prefix);
    preds.reserve(prob.n_targets());
    for (std::size_t i = 0; i < prob.n_targets(); ++i)
        preds.push_back(predict_at(p, fr.states.at(prob.source[i]), prob.horizon[i]));
    return preds;
}

ForecastLossResult forecast_loss(GruweParams& p, const ForecastProblem& prob,
                                 bool accumulate_grads) {
    ForecastLossResult res;
    res.n_targets = prob.n_targets();
    if (res.n_targets == 0) return res;

    const ForwardResult fr = forward_sequence(p, prob.prefix);
    std::vector<DenseVector> preds;
    preds.reserve(res.n_targets);
    for (std::size_t i = 0; i < res.n_targets; ++i)
        preds.push_back(predict_at(p, fr.states.at(prob.source[i]), prob.horizon[i]));

    const MaskedMseResult mse = masked_mse_loss(preds, prob.x, prob.m);
    res.loss = mse.loss;
    res.mask_total = mse.mask_total;
    if (!accumulate_grads || mse.mask_total == 0.0) return res;

    std::vector<DenseVector> upstream(fr.states.size());
    for (std::size_t i = 0; i < res.n_targets; ++i)
        predict_at_backward(p, fr.states[prob.source[i]], prob.horizon[i], mse.grad[i],
                            upstream[prob.source[i]]);
    backward_sequence(p, fr.tapes, upstream);
    return res;
}

// --- event-stream likelihood -------------------------------------------------------

StepInput event_step_input(std::size_t types, int type, double dt) {
    if (type < 0 || static_cast<std::size_t>(type) >= types)
        throw DataError("event type " + std::to_string(type) + " outside [0, " +
                        std::to_string(types) + ")");
    StepInput in{dt, DenseVector(types, 0.0), DenseVector(types, 1.0)};
    in.x[static_cast<std::size_t>(type)] = 1.0;
    return in;
}

namespace {

void validate_event_sequence(const GruweParams& p, const EventSequence& seq) {
    if (p.input_dim != p.event_types)
        throw ShapeError("event marks are one-hot vectors: input_dim must equal event_types");
    if (seq.times.size() != seq.types.size())
        throw DataError("event sequence has mismatched times/types lengths");
    if (!(seq.t_max > 0.0)) throw DataError("event sequence needs a positive window length");
    double prev = 0.0;
    for (std::size_t j = 0; j < seq.count(); ++j) {
        const double t = seq.times[j];
        if (!(t >= 0.0) || t > seq.t_max)
            throw DataError("event time " + std::to_string(t) + " outside [0, t_max]");
        if (j > 0 && !(t > prev)) throw DataError("event times must be strictly increasing");
        if (seq.types[j] < 0 || static_cast<std::size_t>(seq.types[j]) >= p.event_types)
            throw DataError("event type " + std::to_string(seq.types[j]) +
                            " outside the model's " + std::to_string(p.event_types) +
                            " types");
        prev = t;
    }
}

} // namespace

EventForward event_forward(const GruweParams& p, const EventSequence& seq) {
    validate_event_sequence(p, seq);
    EventForward fwd;
    fwd.states.reserve(seq.count() + 1);
    fwd.tapes.resize(seq.count());
    MarkovState st = p.initial_state(0.0);
    fwd.states.push_back(st);
    double prev = 0.0;
    for (std::size_t j = 0; j < seq.count(); ++j) {
        const StepInput in =
            event_step_input(p.event_types, seq.types[j], seq.times[j] - prev);
        step(p, st, in, &fwd.tapes[j]);
        fwd.states.push_back(st);
        prev = seq.times[j];
    }
    return fwd;
}

TppNllResult tpp_nll(GruweParams& p, const EventSequence& seq, RngState& rng,
                     const TppNllOptions& opt) {
    if (opt.mc_samples < 1) throw ConfigError("compensator needs at least one sample");
    const EventForward fwd = event_forward(p, seq);
    const std::size_t L = seq.count();
    const std::size_t K = p.event_types;
    const std::size_t M = opt.mc_samples;

    TppNllResult res;

    // event term from each pre-event state at the true inter-arrival horizon
    std::vector<double> ev_dt(L), ev_lam(L);
    double prev = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
        ev_dt[j] = seq.times[j] - prev;
        const DenseVector lam = intensity_at(p, fwd.states[j], ev_dt[j]);
        ev_lam[j] = lam[static_cast<std::size_t>(seq.types[j])];
        res.event_term -= std::log(ev_lam[j]);
        prev = seq.times[j];
    }

    // Monte-Carlo compensator: intervals between consecutive events plus the
    // tail up to the window end. sample times are drawn once and reused by the
    // backward pass as constants.
    std::vector<double> interval_len(L + 1);
    std::vector<std::vector<double>> samples(L + 1);
    for (std::size_t j = 0; j <= L; ++j) {
        const double start = (j == 0) ? 0.0 : seq.times[j - 1];
        const double end = (j == L) ? seq.t_max : seq.times[j];
        interval_len[j] = end - start;
        if (interval_len[j] <= 0.0) continue;
        samples[j].reserve(M);
        std::vector<double> lams;
        lams.reserve(M);
        double sum = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const double u = rng.uniform(0.0, interval_len[j]);
            samples[j].push_back(u);
            lams.push_back(total_intensity_at(p, fwd.states[j], u));
            sum += lams.back();
        }
        const double mean = sum / static_cast<double>(M);
        res.compensator += interval_len[j] * mean;
        res.sample_count += M;
        if (M >= 2) {
            // two-pass variance: exact zero for a constant intensity path
            double sqdev = 0.0;
            for (double lam : lams) sqdev += (lam - mean) * (lam - mean);
            const double var = sqdev / static_cast<double>(M - 1);
            // variance of (len * sample mean)
            res.compensator_se += interval_len[j] * interval_len[j] * var /
                                  static_cast<double>(M);
        }
    }
    res.compensator_se = std::sqrt(res.compensator_se);
    res.nll = res.event_term + res.compensator;

    if (!opt.accumulate_grads) return res;

    // reverse pass. acc[j] collects dLoss/dh for fwd.states[j]; the entry for
    // the initial state is discarded afterwards (its h is the zero constant).
    std::vector<DenseVector> acc(L + 1);
    for (std::size_t j = 0; j < L; ++j) {
        DenseVector dlam(K, 0.0);
        dlam[static_cast<std::size_t>(seq.types[j])] = -1.0 / ev_lam[j];
        intensity_at_backward(p, fwd.states[j], ev_dt[j], dlam, acc[j]);
    }
    for (std::size_t j = 0; j <= L; ++j) {
        if (samples[j].empty()) continue;
        const DenseVector dlam(K, interval_len[j] / static_cast<double>(M));
        for (double u : samples[j]) intensity_at_backward(p, fwd.states[j], u, dlam, acc[j]);
    }
    std::vector<DenseVector> upstream(L);
    for (std::size_t j = 1; j <= L; ++j) upstream[j - 1] = std::move(acc[j]);
    backward_sequence(p, fwd.tapes, upstream);
    return res;
}

double tpp_compensator_quadrature(const GruweParams& p, const EventSequence& seq,
                                  std::size_t total_points) {
    if (total_points < 2) throw ConfigError("quadrature needs at least two points");
    const EventForward fwd = event_forward(p, seq);
    const std::size_t L = seq.count();

    double total_len = seq.t_max;
    double integral = 0.0;
    for (std::size_t j = 0; j <= L; ++j) {
        const double start = (j == 0) ? 0.0 : seq.times[j - 1];
        const double end = (j == L) ? seq.t_max : seq.times[j];
        const double len = end - start;
        if (len <= 0.0) continue;
        const auto pts = std::max<std::size_t>(
            8, static_cast<std::size_t>(std::llround(
                   static_cast<double>(total_points) * len / total_len)));
        const double h = len / static_cast<double>(pts - 1);
        double prev_lam = total_intensity_at(p, fwd.states[j], 0.0);
        for (std::size_t i = 1; i < pts; ++i) {
            const double lam =
                total_intensity_at(p, fwd.states[j], static_cast<double>(i) * h);
            integral += 0.5 * h * (prev_lam + lam);
            prev_lam = lam;
        }
    }
    return integral;
}

// --- next-event prediction -----------------------------------------------------------

double predict_next_event_time(const GruweParams& p, const MarkovState& st,
                               double t_max_horizon, std::size_t grid_size) {
    if (!(t_max_horizon > 0.0)) throw ConfigError("prediction horizon must be positive");
    if (grid_size < 2) throw ConfigError("prediction grid needs at least two points");

    // E[tau] = ∫ s lambda(s) e^{-Lambda(s)} ds with the residual mass beyond
    // the horizon collapsed onto the horizon itself
    const double h = t_max_horizon / static_cast<double>(grid_size - 1);
    double running = 0.0; // Lambda(s): trapezoidal integral of total intensity
    double prev_lam = total_intensity_at(p, st, 0.0);
    double prev_integrand = 0.0; // s * lambda * e^{-Lambda} at s = 0
    double expectation = 0.0;
    for (std::size_t i = 1; i < grid_size; ++i) {
        const double s = static_cast<double>(i) * h;
        const double lam = total_intensity_at(p, st, s);
        running += 0.5 * h * (prev_lam + lam);
        const double integrand = s * lam * std::exp(-running);
        expectation += 0.5 * h * (prev_integrand + integrand);
        prev_lam = lam;
        prev_integrand = integrand;
    }
    expectation += t_max_horizon * std::exp(-running);
    return expectation;
}

int predict_next_event_type(const GruweParams& p, const MarkovState& st, double at_horizon) {
    const DenseVector lam = intensity_at(p, st, at_horizon);
    std::size_t best = 0;
    for (std::size_t k = 1; k < lam.size(); ++k)
        if (lam[k] > lam[best]) best = k;
    return static_cast<int>(best);
}

// --- simulation by thinning ------------------------------------------------------------

namespace {

ThinningResult thinning_run(const GruweParams& p, const MarkovState& start, RngState& rng,
                            double t_max, double fixed_bound, bool rebound_per_interval) {
    if (!(t_max > 0.0)) throw ConfigError("thinning window must be positive");

    const auto grid_bound = [&](const MarkovState& s, double span) {
        constexpr int kGridPoints = 256;
        double mx = 0.0;
        for (int i = 0; i < kGridPoints; ++i) {
            const double u = span * static_cast<double>(i) / (kGridPoints - 1);
            mx = std::max(mx, total_intensity_at(p, s, u));
        }
        return 1.5 * mx;
    };

    MarkovState st = start;
    ThinningResult out;
    double t = 0.0;          // elapsed time within the window
    double last_event = 0.0; // time of the latest accepted event
    double bound = rebound_per_interval ? grid_bound(st, t_max) : fixed_bound;
    if (!(bound > 0.0) || !std::isfinite(bound))
        throw ConfigError("thinning needs a positive finite dominating rate");

    for (;;) {
        double delta;
        do {
            delta = rng.exponential(bound);
        } while (delta == 0.0);
        t += delta;
        if (t > t_max) break;

        const double u = t - last_event; // horizon from the current state
        const DenseVector lam = intensity_at(p, st, u);
        double total = 0.0;
        for (double v : lam.data) total += v;
        if (total > bound * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "thinning dominating rate violated: intensity " << total << " exceeds "
               << bound << " at horizon " << u;
            throw InternalError(os.str());
        }
        if (rng.next_unit() * bound > total) continue; // rejected proposal

        // accepted: draw the type proportionally to the per-type intensities
        const double pick = rng.next_unit() * total;
        std::size_t k = lam.size() - 1;
        double cum = 0.0;
        for (std::size_t i = 0; i < lam.size(); ++i) {
            cum += lam[i];
            if (pick < cum) {
                k = i;
                break;
            }
        }
        step(p, st, event_step_input(p.event_types, static_cast<int>(k), u), nullptr);
        out.times.push_back(t);
        out.types.push_back(static_cast<int>(k));
        last_event = t;
        if (rebound_per_interval) {
            bound = grid_bound(st, t_max - t);
            if (!(bound > 0.0)) // intensity is strictly positive, so this is defensive
                throw InternalError("thinning bound search returned a non-positive rate");
        }
    }
    return out;
}

} // namespace

ThinningResult thinning_sample(const GruweParams& p, const MarkovState& st, RngState& rng,
                               double t_max) {
    return thinning_run(p, st, rng, t_max, 0.0, true);
}

ThinningResult thinning_sample_with_bound(const GruweParams& p, const MarkovState& st,
                                          RngState& rng, double t_max, double bound) {
    return thinning_run(p, st, rng, t_max, bound, false);
}

} // namespace gruwe

#include "gruwe/cell.hpp"

#include <cmath>

namespace gruwe {

GruweParams::GruweParams(std::size_t input, std::size_t hidden, std::size_t target,
                         std::size_t types)
    : input_dim(input), hidden_dim(hidden), target_dim(target), event_types(types) {
    if (input == 0 || hidden == 0 || target == 0 || types == 0)
        throw ConfigError("model dimensions must all be >= 1");
    const std::size_t D = input, H = hidden, P = target, K = types;
    w_gamma = Parameter("w_gamma", H, 1);
    b_gamma = Parameter("b_gamma", H, 1);
    W_z = Parameter("W_z", H, D); U_z = Parameter("U_z", H, H);
    V_z = Parameter("V_z", H, D); b_z = Parameter("b_z", H, 1);
    W_r = Parameter("W_r", H, D); U_r = Parameter("U_r", H, H);
    V_r = Parameter("V_r", H, D); b_r = Parameter("b_r", H, 1);
    W_h = Parameter("W_h", H, D); U_h = Parameter("U_h", H, H);
    V_h = Parameter("V_h", H, D); b_h = Parameter("b_h", H, 1);
    W_out = Parameter("W_out", P, H); b_out = Parameter("b_out", P, 1);
    W_lambda = Parameter("W_lambda", K, H); b_lambda = Parameter("b_lambda", K, 1);
}

std::size_t GruweParams::param_count() const {
    std::size_t n = 0;
    visit([&](const Parameter& p) { n += p.count(); });
    return n;
}

void GruweParams::zero_grads() {
    visit([](Parameter& p) { p.zero_grad(); });
}

double GruweParams::grad_norm() const {
    double sq = 0.0;
    visit([&](const Parameter& p) {
        for (double g : p.grad.data) sq += g * g;
    });
    return std::sqrt(sq);
}

void GruweParams::add_grads_from(const GruweParams& other) {
    auto self = this;
    std::size_t slot = 0;
    std::vector<const Parameter*> theirs;
    other.visit([&](const Parameter& p) { theirs.push_back(&p); });
    self->visit([&](Parameter& p) {
        const Parameter& o = *theirs[slot++];
        if (o.value.rows != p.value.rows || o.value.cols != p.value.cols)
            throw ShapeError("gradient merge across mismatched models");
        for (std::size_t i = 0; i < p.grad.data.size(); ++i)
            p.grad.data[i] += o.grad.data[i];
    });
}

void init_params(GruweParams& p, RngState& rng) {
    const double in_scale = fan_in_scale(p.input_dim);
    const double rec_scale = fan_in_scale(p.hidden_dim);
    // decay starts in the decaying regime: small positive weight, zero bias
    for (auto& v : p.w_gamma.value.data) v = rng.uniform(0.0, 0.1);
    std::fill(p.b_gamma.value.data.begin(), p.b_gamma.value.data.end(), 0.0);

    uniform_init(rng, p.W_z, in_scale);
    uniform_init(rng, p.U_z, rec_scale);
    uniform_init(rng, p.V_z, in_scale);
    uniform_init(rng, p.W_r, in_scale);
    uniform_init(rng, p.U_r, rec_scale);
    uniform_init(rng, p.V_r, in_scale);
    uniform_init(rng, p.W_h, in_scale);
    uniform_init(rng, p.U_h, rec_scale);
    uniform_init(rng, p.V_h, in_scale);
    uniform_init(rng, p.W_out, rec_scale);
    uniform_init(rng, p.W_lambda, rec_scale);
    // biases stay zero
}

void step(const GruweParams& p, MarkovState& state, const StepInput& in, StepTape* tape) {
    const std::size_t D = p.input_dim, H = p.hidden_dim;
    if (in.dt < 0.0) throw DomainError("step: negative dt " + std::to_string(in.dt));
    if (in.x.size() != D || in.m.size() != D)
        throw ShapeError("step: input size " + std::to_string(in.x.size()) + "/" +
                         std::to_string(in.m.size()) + " vs input_dim " + std::to_string(D));
    if (state.h.size() != H)
        throw ShapeError("step: state size " + std::to_string(state.h.size()) +
                         " vs hidden_dim " + std::to_string(H));

    // masking is enforced here even if the caller already zeroed hidden entries
    DenseVector xm(D);
    for (std::size_t i = 0; i < D; ++i) xm[i] = in.m[i] * in.x[i];

    DenseVector gamma = gamma_vec(p.w_gamma.value.data, p.b_gamma.value.data, in.dt);
    DenseVector g = apply_decay(gamma, state.h);

    DenseVector z = matvec(p.W_z.value, xm), r = matvec(p.W_r.value, xm),
                c = matvec(p.W_h.value, xm);
    {
        DenseVector uz = matvec(p.U_z.value, g), ur = matvec(p.U_r.value, g);
        DenseVector vz = matvec(p.V_z.value, in.m), vr = matvec(p.V_r.value, in.m);
        for (std::size_t i = 0; i < H; ++i) {
            z[i] = sigmoid(z[i] + uz[i] + vz[i] + p.b_z.value.data[i]);
            r[i] = sigmoid(r[i] + ur[i] + vr[i] + p.b_r.value.data[i]);
        }
    }
    {
        DenseVector rg(H);
        for (std::size_t i = 0; i < H; ++i) rg[i] = r[i] * g[i];
        DenseVector uc = matvec(p.U_h.value, rg);
        DenseVector vc = matvec(p.V_h.value, in.m);
        for (std::size_t i = 0; i < H; ++i)
            c[i] = std::tanh(c[i] + uc[i] + vc[i] + p.b_h.value.data[i]);
    }

    DenseVector h_new(H);
    for (std::size_t i = 0; i < H; ++i) h_new[i] = (1.0 - z[i]) * g[i] + z[i] * c[i];

    if (tape) {
        tape->dt = in.dt;
        tape->h_prev = state.h;
        tape->gamma = gamma;
        tape->g = g;
        tape->z = z;
        tape->r = r;
        tape->h_cand = c;
        tape->h_new = h_new;
        tape->x_masked = xm;
        tape->m = in.m;
    }

    state.h = std::move(h_new);
    state.last_time += in.dt;
}

void step_all_masked(const GruweParams& p, MarkovState& state, double dt, StepTape* tape) {
    StepInput in;
    in.dt = dt;
    in.x = DenseVector(p.input_dim, 0.0);
    in.m = DenseVector(p.input_dim, 0.0);
    step(p, state, in, tape);
}

ForwardResult forward_sequence(const GruweParams& p, const IrregularSeries& seq) {
    ForwardResult fr;
    const std::size_t n = seq.steps();
    fr.states.reserve(n);
    fr.tapes.resize(n);
    MarkovState st = p.initial_state(n > 0 ? seq.times.front() : 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = i == 0 ? 0.0 : seq.times[i] - seq.times[i - 1];
        if (i > 0 && !(dt > 0.0))
            throw DataError("sequence times not strictly increasing at step " +
                            std::to_string(i));
        StepInput in{dt, seq.values[i], seq.mask[i]};
        step(p, st, in, &fr.tapes[i]);
        fr.states.push_back(st);
    }
    return fr;
}

DenseVector backward_sequence(GruweParams& p, const std::vector<StepTape>& tapes,
                              const std::vector<DenseVector>& upstream) {
    const std::size_t H = p.hidden_dim;
    if (upstream.size() != tapes.size())
        throw ShapeError("backward_sequence: upstream count " + std::to_string(upstream.size()) +
                         " vs tape count " + std::to_string(tapes.size()));

    DenseVector carry(H, 0.0); // dLoss/dh_prev flowing into the step below
    for (std::size_t idx = tapes.size(); idx-- > 0;) {
        const StepTape& t = tapes[idx];
        if (t.h_prev.size() != H)
            throw ShapeError("backward_sequence: tape does not match parameters");

        DenseVector dh = carry;
        if (upstream[idx].size() == H)
            for (std::size_t i = 0; i < H; ++i) dh[i] += upstream[idx][i];
        else if (upstream[idx].size() != 0)
            throw ShapeError("backward_sequence: bad upstream gradient size at step " +
                             std::to_string(idx));

        // h_new = (1 - z) .* g + z .* h_cand
        DenseVector dz(H), dc(H), dg(H);
        for (std::size_t i = 0; i < H; ++i) {
            dz[i] = dh[i] * (t.h_cand[i] - t.g[i]);
            dc[i] = dh[i] * t.z[i];
            dg[i] = dh[i] * (1.0 - t.z[i]);
        }

        // candidate: h_cand = tanh(W_h x' + U_h (r .* g) + V_h m + b_h)
        DenseVector ds_c(H);
        for (std::size_t i = 0; i < H; ++i)
            ds_c[i] = dc[i] * tanh_grad_from_value(t.h_cand[i]);
        DenseVector rg(H);
        for (std::size_t i = 0; i < H; ++i) rg[i] = t.r[i] * t.g[i];
        add_outer(p.W_h.grad, ds_c, t.x_masked);
        add_outer(p.U_h.grad, ds_c, rg);
        add_outer(p.V_h.grad, ds_c, t.m);
        for (std::size_t i = 0; i < H; ++i) p.b_h.grad.data[i] += ds_c[i];
        DenseVector drg = matvec_t(p.U_h.value, ds_c);
        DenseVector dr(H);
        for (std::size_t i = 0; i < H; ++i) {
            dr[i] = drg[i] * t.g[i];
            dg[i] += drg[i] * t.r[i];
        }

        // reset gate: r = sigmoid(W_r x' + U_r g + V_r m + b_r)
        DenseVector ds_r(H);
        for (std::size_t i = 0; i < H; ++i)
            ds_r[i] = dr[i] * sigmoid_grad_from_value(t.r[i]);
        add_outer(p.W_r.grad, ds_r, t.x_masked);
        add_outer(p.U_r.grad, ds_r, t.g);
        add_outer(p.V_r.grad, ds_r, t.m);
        for (std::size_t i = 0; i < H; ++i) p.b_r.grad.data[i] += ds_r[i];
        {
            DenseVector tmp = matvec_t(p.U_r.value, ds_r);
            for (std::size_t i = 0; i < H; ++i) dg[i] += tmp[i];
        }

        // update gate: z = sigmoid(W_z x' + U_z g + V_z m + b_z)
        DenseVector ds_z(H);
        for (std::size_t i = 0; i < H; ++i)
            ds_z[i] = dz[i] * sigmoid_grad_from_value(t.z[i]);
        add_outer(p.W_z.grad, ds_z, t.x_masked);
        add_outer(p.U_z.grad, ds_z, t.g);
        add_outer(p.V_z.grad, ds_z, t.m);
        for (std::size_t i = 0; i < H; ++i) p.b_z.grad.data[i] += ds_z[i];
        {
            DenseVector tmp = matvec_t(p.U_z.value, ds_z);
            for (std::size_t i = 0; i < H; ++i) dg[i] += tmp[i];
        }

        // decay: g = gamma .* h_prev — gradient reaches both the decay
        // parameters and, multiplicatively, the previous hidden state
        DenseVector dgamma(H);
        for (std::size_t i = 0; i < H; ++i) dgamma[i] = dg[i] * t.h_prev[i];
        auto gb = gamma_backward(p.w_gamma.value.data, p.b_gamma.value.data, t.dt, t.gamma,
                                 dgamma);
        for (std::size_t i = 0; i < H; ++i) {
            p.w_gamma.grad.data[i] += gb.grad_w[i];
            p.b_gamma.grad.data[i] += gb.grad_b[i];
            carry[i] = dg[i] * t.gamma[i];
        }
    }
    return carry;
}

} // namespace gruwe

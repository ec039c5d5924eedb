#include "gruwe/decay.hpp"

#include <cmath>

namespace gruwe {

const char* regime_name(DecayRegime r) {
    switch (r) {
        case DecayRegime::StateReset: return "StateReset";
        case DecayRegime::ConstantDecay: return "ConstantDecay";
        case DecayRegime::NoDecay: return "NoDecay";
    }
    return "?";
}

DenseVector gamma_vec(std::span<const double> w, std::span<const double> b, double dt) {
    if (dt < 0.0) throw DomainError("gamma: negative dt " + std::to_string(dt));
    if (w.size() != b.size())
        throw ShapeError("gamma: w size " + std::to_string(w.size()) + " vs b size " +
                         std::to_string(b.size()));
    DenseVector g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double a = w[i] * dt + b[i];
        g.data[i] = std::exp(-(a > 0.0 ? a : 0.0));
    }
    return g;
}

GammaBackward gamma_backward(std::span<const double> w, std::span<const double> b,
                             double dt, const DenseVector& gamma,
                             const DenseVector& upstream) {
    if (dt < 0.0) throw DomainError("gamma_backward: negative dt");
    const std::size_t n = w.size();
    if (b.size() != n || gamma.size() != n || upstream.size() != n)
        throw ShapeError("gamma_backward: inconsistent sizes");
    GammaBackward out;
    out.grad_w = DenseVector(n);
    out.grad_b = DenseVector(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = w[i] * dt + b[i];
        if (a > 0.0) { // clamp inactive; at the kink the subgradient 0 is used
            const double common = -upstream.data[i] * gamma.data[i];
            out.grad_w.data[i] = common * dt;
            out.grad_b.data[i] = common;
            out.grad_dt += common * w[i];
        }
    }
    return out;
}

DenseVector apply_decay(const DenseVector& gamma, const DenseVector& h) {
    if (gamma.size() != h.size())
        throw ShapeError("apply_decay: gamma size " + std::to_string(gamma.size()) +
                         " vs h size " + std::to_string(h.size()));
    DenseVector g(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) g.data[i] = gamma.data[i] * h.data[i];
    return g;
}

std::vector<DecayRegime> classify_regimes(std::span<const double> w, double tol) {
    if (tol < 0.0) throw DomainError("classify_regimes: negative tolerance");
    std::vector<DecayRegime> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > tol) out[i] = DecayRegime::StateReset;
        else if (w[i] < -tol) out[i] = DecayRegime::NoDecay;
        else out[i] = DecayRegime::ConstantDecay;
    }
    return out;
}

double lipschitz_constant(double w, double b) {
    if (!(w > 0.0))
        throw DomainError("lipschitz_constant requires w > 0 (got " + std::to_string(w) +
                          "); non-positive weights are constant or non-decaying");
    return w * std::exp(-b);
}

} // namespace gruwe

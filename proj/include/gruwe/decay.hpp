#pragma once

// the exponential basis function
//
//     gamma_i(dt) = exp(-max(0, w_i * dt + b_i))
//
// applied componentwise with a diagonal weight vector. it drives both the
// time-triggered state reset between observations and the prediction-horizon
// decay, which share one parameter pair. depending on the sign of w_i each
// component realizes one of three asymptotic regimes:
//   w > 0  StateReset    gamma -> 0 as dt grows
//   w = 0  ConstantDecay gamma = exp(-max(0, b)) for every dt
//   w < 0  NoDecay       gamma = 1 for dt >= -b/w (all dt when b <= 0)

#include <span>
#include <vector>

#include "gruwe/numerics.hpp"

namespace gruwe {

enum class DecayRegime { StateReset, ConstantDecay, NoDecay };

const char* regime_name(DecayRegime r);

// componentwise gamma; dt is a scalar broadcast to all components
DenseVector gamma_vec(std::span<const double> w, std::span<const double> b, double dt);

struct GammaBackward {
    DenseVector grad_w;
    DenseVector grad_b;
    double grad_dt = 0.0; // scalar: sum over components of upstream_i * dgamma_i/ddt
};

// upstream = dLoss/dgamma. `gamma` must be the output of gamma_vec(w, b, dt);
// it is reused instead of recomputed. where the clamp is active (w*dt + b <= 0)
// all derivatives are zero; the kink itself uses subgradient 0.
GammaBackward gamma_backward(std::span<const double> w, std::span<const double> b,
                             double dt, const DenseVector& gamma,
                             const DenseVector& upstream);

// elementwise product gamma .* h  (|result_i| <= |h_i| since gamma in (0,1])
DenseVector apply_decay(const DenseVector& gamma, const DenseVector& h);

// per-component regime, with a tolerance band around w = 0 since trained
// weights never land exactly on zero
std::vector<DecayRegime> classify_regimes(std::span<const double> w, double tol = 1e-6);

// sharpest bound w * exp(-b) on |gamma(t1)-gamma(t2)| / |t1-t2| for a single
// component in the decaying regime; requires w > 0 (for b < 0 the value is a
// valid but non-tight upper bound, since the clamp caps the slope at w)
double lipschitz_constant(double w, double b);

} // namespace gruwe

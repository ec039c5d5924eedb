#pragma once

// sequence data model, JSONL ingestion/emission, split management, and
// synthetic generators with closed-form oracles.

#include <cstdint>
#include <string>
#include <vector>

#include "gruwe/numerics.hpp"

namespace gruwe {

// irregularly sampled multivariate series: per-step observation vector plus
// a {0,1} mask; masked-off value entries are stored as 0
struct IrregularSeries {
    std::vector<double> times;        // strictly increasing
    std::vector<DenseVector> values;  // steps x D
    std::vector<DenseVector> mask;    // steps x D, entries in {0,1}

    std::size_t steps() const { return times.size(); }
    std::size_t dim() const { return values.empty() ? 0 : values.front().size(); }
};

// marked event stream over an explicit observation window [0, t_max]
struct EventSequence {
    std::vector<double> times;  // strictly increasing, within [0, t_max]
    std::vector<int> types;     // in [0, K) — checked against K at model binding
    double t_max = 0.0;

    std::size_t count() const { return times.size(); }
};

struct StandardizationStats {
    DenseVector mean;
    DenseVector stdev; // floored at a small positive value so division is safe
};

struct DatasetSplit {
    std::vector<std::size_t> train, val, test;
    std::uint64_t seed = 0;
};

// --- JSONL ingestion ---------------------------------------------------------
// one JSON object per line. an optional first header line
//   {"format": "gruwe-series"|"gruwe-events", "version": 1}
// is validated when present; generators always write it.
// all violations name the offending line number.

std::vector<IrregularSeries> load_series_jsonl(const std::string& path);
std::vector<EventSequence> load_events_jsonl(const std::string& path);

void write_series_jsonl(const std::string& path, const std::vector<IrregularSeries>& seqs);
void write_events_jsonl(const std::string& path, const std::vector<EventSequence>& seqs);

// --- standardization ----------------------------------------------------------

// per-variable z-score stats over observed entries of the given sequences
StandardizationStats compute_standardization(const std::vector<IrregularSeries>& seqs,
                                             const std::vector<std::size_t>& indices);
// in-place (x - mean) / stdev on observed entries
void apply_standardization(std::vector<IrregularSeries>& seqs, const StandardizationStats& st);
DenseVector destandardize(const DenseVector& y, const StandardizationStats& st);

// --- synthetic generators ------------------------------------------------------

struct DecayProcessConfig {
    std::size_t n_seq = 100;
    std::size_t dim = 3;
    double rate = 2.0;    // observation-time Poisson rate
    double t_span = 10.0; // observation window length
    double p_miss = 0.3;  // per-entry masking probability
    double amp_lo = 0.5, amp_hi = 2.0;
    double kappa_lo = 0.2, kappa_hi = 0.6;
    double omega_lo = 0.2, omega_hi = 0.8;
};

// ground truth retained per sequence: x_i(t) = amp_i exp(-kappa_i t) sin(omega_i t + phi_i)
struct DecayProcessOracle {
    struct Seq {
        DenseVector amp, kappa, omega, phi;
    };
    std::vector<Seq> seqs;
    double latent_value(std::size_t seq, std::size_t var, double t) const;
};

struct DecayProcessData {
    std::vector<IrregularSeries> series;
    DecayProcessOracle oracle;
};

DecayProcessData gen_decay_process(RngState& rng, const DecayProcessConfig& cfg);

struct PoissonEventData {
    std::vector<EventSequence> sequences;
    std::vector<double> oracle_ll; // per sequence: n log(lambda) - lambda T
    double lambda_star = 0.0;
};

PoissonEventData gen_poisson_events(RngState& rng, std::size_t n_seq, double lambda_star,
                                    double t_max);

struct HawkesEventData {
    std::vector<EventSequence> sequences;
    std::vector<double> oracle_ll; // exact log-likelihood under the true generator
    double mu = 0.0, alpha = 0.0, beta = 0.0;
    int event_types = 1;
};

// exponential-kernel self-exciting process, lambda(t) = mu + sum alpha e^{-beta(t-t_i)},
// simulated by thinning; marks drawn uniformly over K types. requires alpha/beta < 1.
HawkesEventData gen_hawkes_events(RngState& rng, std::size_t n_seq, double mu, double alpha,
                                  double beta, double t_max, int event_types);

// exact log-likelihood of an event sequence under the exponential-kernel
// model above (includes the uniform-mark term log(1/K) per event)
double hawkes_exact_ll(const EventSequence& seq, double mu, double alpha, double beta,
                       int event_types);

// deterministic shuffled partition; ratios are normalized, remainders go to train
DatasetSplit split_dataset(std::size_t n, double train_ratio, double val_ratio,
                           double test_ratio, std::uint64_t seed);

template <class T>
std::vector<T> take_subset(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(all[i]);
    return out;
}

} // namespace gruwe

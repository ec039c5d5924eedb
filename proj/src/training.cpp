#include "gruwe/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gruwe {

using json = nlohmann::json;

// --- optimizer -------------------------------------------------------------------

void OptimizerState::init_for(const GruweParams& p) {
    m.clear();
    v.clear();
    step_count = 0;
    epoch = 0;
    p.visit([&](const Parameter& par) {
        m.emplace_back(par.value.rows, par.value.cols, 0.0);
        v.emplace_back(par.value.rows, par.value.cols, 0.0);
    });
}

double OptimizerState::effective_lr() const {
    return base_lr * std::pow(lr_decay, static_cast<double>(epoch));
}

double clip_global_norm(GruweParams& p, double max_norm) {
    if (!(max_norm > 0.0)) throw ConfigError("clip norm must be positive");
    double sq = 0.0;
    std::string bad;
    p.visit([&](const Parameter& par) {
        for (double g : par.grad.data) {
            if (!std::isfinite(g) && bad.empty()) bad = par.name;
            sq += g * g;
        }
    });
    if (!bad.empty())
        throw TrainingError("non-finite gradient in parameter '" + bad + "'");
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return 1.0;
    const double factor = max_norm / norm;
    p.visit([&](Parameter& par) {
        for (double& g : par.grad.data) g *= factor;
    });
    return factor;
}

void adam_step(GruweParams& p, OptimizerState& opt) {
    if (opt.m.empty()) throw InternalError("optimizer used before init_for");
    ++opt.step_count;
    const double lr = opt.effective_lr();
    const double b1c = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
    const double b2c = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
    std::size_t slot = 0;
    p.visit([&](Parameter& par) {
        DenseMatrix& m = opt.m[slot];
        DenseMatrix& v = opt.v[slot];
        ++slot;
        if (m.data.size() != par.value.data.size())
            throw InternalError("optimizer slot shape mismatch for '" + par.name + "'");
        for (std::size_t k = 0; k < par.value.data.size(); ++k) {
            const double g = par.grad.data[k];
            m.data[k] = opt.beta1 * m.data[k] + (1.0 - opt.beta1) * g;
            v.data[k] = opt.beta2 * v.data[k] + (1.0 - opt.beta2) * g * g;
            const double mhat = m.data[k] / b1c;
            const double vhat = v.data[k] / b2c;
            par.value.data[k] -= lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    });
}

// --- shared loop machinery -----------------------------------------------------------

namespace {

// seed streams: fixed tags keep shuffling, Monte-Carlo draws, and validation
// independent of each other and of worker scheduling
constexpr std::uint64_t kOrderStream = 0x0D;
constexpr std::uint64_t kMcStream = 0xE0;
constexpr std::uint64_t kValStream = 0x7A;

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    RngState rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);
    return idx;
}

struct MemberResult {
    double loss = 0.0;
    bool contributed = false;
};

// computes one batch: members evaluated independently (fanned out across
// workers when asked), gradients merged into p in fixed member order so the
// result does not depend on scheduling
template <class MemberFn>
std::vector<MemberResult> run_batch(GruweParams& p, const std::vector<std::size_t>& members,
                                    std::size_t workers, const MemberFn& member_fn) {
    const std::size_t B = members.size();
    std::vector<MemberResult> results(B);
    std::vector<GruweParams> locals(B, p); // value copies with grads to be overwritten
    std::vector<std::exception_ptr> errors(B); // exceptions may not cross the join

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(static_cast<int>(std::max<std::size_t>(1, workers))) if (workers > 1)
#endif
    for (long long b = 0; b < static_cast<long long>(B); ++b) {
        const auto i = static_cast<std::size_t>(b);
        try {
            locals[i].zero_grads();
            results[i] = member_fn(locals[i], members[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }

    for (std::size_t b = 0; b < B; ++b)
        if (errors[b]) std::rethrow_exception(errors[b]); // first in member order
    for (std::size_t b = 0; b < B; ++b)
        if (results[b].contributed) p.add_grads_from(locals[b]);
    return results;
}

template <class MemberFn, class ValFn>
TrainReport run_training(GruweParams& p, std::size_t n_train, const TrainOptions& opt,
                         const MemberFn& member_fn, const ValFn& val_fn) {
    if (n_train == 0) throw ConfigError("training set is empty");
    if (opt.epochs == 0) throw ConfigError("epochs must be at least 1 (nothing to select)");
    if (opt.batch_size == 0) throw ConfigError("batch size must be at least 1");
    if (!(opt.lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (!(opt.clip_norm > 0.0)) throw ConfigError("clip norm must be positive");

    OptimizerState optim;
    optim.base_lr = opt.lr;
    optim.lr_decay = opt.lr_decay;
    optim.init_for(p);

    TrainReport report;
    GruweParams best = p;
    double best_metric = 0.0;
    bool have_best = false;

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        optim.epoch = epoch;
        const std::uint64_t epoch_seed =
            derive_seed(derive_seed(opt.seed, kOrderStream), epoch);
        const auto order = shuffled_indices(n_train, epoch_seed);

        double loss_sum = 0.0;
        std::size_t contributed = 0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t stop = std::min(order.size(), start + opt.batch_size);
            const std::vector<std::size_t> members(order.begin() + start,
                                                   order.begin() + stop);
            p.zero_grads();
            auto results = run_batch(p, members, opt.workers,
                                     [&](GruweParams& local, std::size_t idx) {
                                         return member_fn(local, idx, epoch);
                                     });
            std::size_t n_contrib = 0;
            for (std::size_t b = 0; b < results.size(); ++b) {
                if (!results[b].contributed) continue;
                if (!std::isfinite(results[b].loss))
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                        ", sequence " + std::to_string(members[b]));
                loss_sum += results[b].loss;
                ++n_contrib;
            }
            contributed += n_contrib;
            if (n_contrib == 0) continue; // nothing to fit in this batch
            if (n_contrib > 1) {
                const double inv = 1.0 / static_cast<double>(n_contrib);
                p.visit([&](Parameter& par) {
                    for (double& g : par.grad.data) g *= inv;
                });
            }
            clip_global_norm(p, opt.clip_norm);
            adam_step(p, optim);
        }
        report.skipped_sequences += n_train - contributed;
        const double train_loss =
            contributed > 0 ? loss_sum / static_cast<double>(contributed) : 0.0;
        report.train_loss.push_back(train_loss);

        const double metric = val_fn(p, train_loss);
        if (!std::isfinite(metric))
            throw TrainingError("non-finite validation metric at epoch " +
                                std::to_string(epoch));
        report.val_metric.push_back(metric);
        if (!have_best || metric < best_metric) {
            have_best = true;
            best_metric = metric;
            best = p;
            report.best_epoch = epoch;
        }
        report.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    p = best;
    return report;
}

} // namespace

// --- task-specific losses --------------------------------------------------------------

double pooled_forecast_mse(const GruweParams& p,
                           const std::vector<ForecastProblem>& problems) {
    double num = 0.0, den = 0.0;
    for (const auto& prob : problems) {
        if (prob.n_targets() == 0) continue;
        const auto preds = forecast_predictions(p, prob);
        for (std::size_t i = 0; i < preds.size(); ++i)
            for (std::size_t d = 0; d < preds[i].size(); ++d) {
                const double r = preds[i][d] - prob.x[i][d];
                num += prob.m[i][d] * r * r;
                den += prob.m[i][d];
            }
    }
    if (den == 0.0) throw TrainingError("validation split has no observed targets");
    return num / den;
}

double mean_event_nll(GruweParams& p, const std::vector<EventSequence>& seqs,
                      std::size_t mc_samples, std::uint64_t seed) {
    if (seqs.empty()) throw TrainingError("validation split has no event sequences");
    double total = 0.0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        RngState rng(derive_seed(seed, i));
        total += tpp_nll(p, seqs[i], rng, {mc_samples, false}).nll;
    }
    return total / static_cast<double>(seqs.size());
}

double mean_inter_arrival(const std::vector<EventSequence>& seqs) {
    double gaps = 0.0, events = 0.0;
    for (const auto& s : seqs) {
        if (s.count() == 0) continue;
        gaps += s.times.back(); // sum of inter-arrival gaps telescopes
        events += static_cast<double>(s.count());
    }
    return events > 0.0 ? gaps / events : 0.0;
}

TrainReport train_forecast(GruweParams& p, const std::vector<IrregularSeries>& train_set,
                           const std::vector<IrregularSeries>& val_set,
                           const TrainOptions& opt) {
    std::vector<ForecastProblem> train_probs;
    train_probs.reserve(train_set.size());
    for (const auto& s : train_set)
        train_probs.push_back(
            make_forecast_problem(s, opt.observe_fraction, opt.one_step_prefix_targets));
    std::vector<ForecastProblem> val_probs;
    val_probs.reserve(val_set.size());
    for (const auto& s : val_set)
        val_probs.push_back(
            make_forecast_problem(s, opt.observe_fraction, opt.one_step_prefix_targets));

    const auto member = [&](GruweParams& local, std::size_t idx,
                            std::size_t /*epoch*/) -> MemberResult {
        const auto res = forecast_loss(local, train_probs[idx], true);
        return {res.loss, res.mask_total > 0.0};
    };
    const auto validate = [&](const GruweParams& cur, double train_loss) {
        return val_probs.empty() ? train_loss : pooled_forecast_mse(cur, val_probs);
    };
    return run_training(p, train_set.size(), opt, member, validate);
}

TrainReport train_tpp(GruweParams& p, const std::vector<EventSequence>& train_set,
                      const std::vector<EventSequence>& val_set, const TrainOptions& opt) {
    const std::uint64_t mc_base = derive_seed(opt.seed, kMcStream);
    const std::uint64_t val_seed = derive_seed(opt.seed, kValStream);

    const auto member = [&](GruweParams& local, std::size_t idx,
                            std::size_t epoch) -> MemberResult {
        RngState rng(derive_seed(derive_seed(mc_base, epoch), idx));
        const auto res = tpp_nll(local, train_set[idx], rng, {opt.mc_samples, true});
        return {res.nll, true};
    };
    const auto validate = [&](const GruweParams& cur, double train_loss) {
        if (val_set.empty()) return train_loss;
        GruweParams scratch = cur; // nll accumulates nothing here, but keep const-correct
        return mean_event_nll(scratch, val_set, opt.mc_samples, val_seed);
    };
    return run_training(p, train_set.size(), opt, member, validate);
}

// --- checkpointing -----------------------------------------------------------------

namespace {

const char* kHexDigits = "0123456789abcdef";

std::string encode_hex(const std::vector<double>& values) {
    std::string out;
    out.reserve(values.size() * 16);
    for (double d : values) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof d);
        std::memcpy(&bits, &d, sizeof bits);
        for (int shift = 60; shift >= 0; shift -= 4)
            out.push_back(kHexDigits[(bits >> shift) & 0xF]);
    }
    return out;
}

std::vector<double> decode_hex(const std::string& hex, std::size_t expected) {
    if (hex.size() != expected * 16)
        throw DataError("checkpoint tensor payload has wrong length");
    std::vector<double> out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        std::uint64_t bits = 0;
        for (std::size_t c = 0; c < 16; ++c) {
            const char ch = hex[i * 16 + c];
            std::uint64_t nib;
            if (ch >= '0' && ch <= '9') nib = static_cast<std::uint64_t>(ch - '0');
            else if (ch >= 'a' && ch <= 'f') nib = static_cast<std::uint64_t>(ch - 'a' + 10);
            else if (ch >= 'A' && ch <= 'F') nib = static_cast<std::uint64_t>(ch - 'A' + 10);
            else throw DataError("checkpoint tensor payload has a non-hex character");
            bits = (bits << 4) | nib;
        }
        std::memcpy(&out[i], &bits, sizeof bits);
    }
    return out;
}

} // namespace

void save_checkpoint(const std::string& path, const GruweParams& p,
                     const CheckpointMeta& meta) {
    json doc;
    doc["format"] = "gruwe-checkpoint";
    doc["version"] = 1;
    doc["task"] = meta.task;
    doc["seed"] = meta.seed;
    doc["input_dim"] = p.input_dim;
    doc["hidden_dim"] = p.hidden_dim;
    doc["target_dim"] = p.target_dim;
    doc["event_types"] = p.event_types;
    doc["mean_inter_arrival"] = meta.mean_inter_arrival;
    doc["standardization"] = {{"mean", meta.standardization.mean.data},
                              {"stdev", meta.standardization.stdev.data}};
    json tensors;
    p.visit([&](const Parameter& par) {
        tensors[par.name] = {{"rows", par.value.rows},
                             {"cols", par.value.cols},
                             {"hex", encode_hex(par.value.data)}};
    });
    doc["tensors"] = std::move(tensors);

    std::ofstream os(path);
    if (!os) throw DataError("cannot write checkpoint: " + path);
    os << doc.dump() << "\n";
    if (!os) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("unreadable checkpoint " + path + ": " + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "gruwe-checkpoint")
            throw DataError("not a checkpoint file: " + path);
        if (doc.at("version").get<int>() != 1)
            throw DataError("unsupported checkpoint version (expected 1)");

        Checkpoint ck;
        ck.params = GruweParams(doc.at("input_dim").get<std::size_t>(),
                                doc.at("hidden_dim").get<std::size_t>(),
                                doc.at("target_dim").get<std::size_t>(),
                                doc.at("event_types").get<std::size_t>());
        ck.meta.task = doc.at("task").get<std::string>();
        ck.meta.seed = doc.at("seed").get<std::uint64_t>();
        ck.meta.mean_inter_arrival = doc.at("mean_inter_arrival").get<double>();
        const auto& st = doc.at("standardization");
        ck.meta.standardization.mean.data = st.at("mean").get<std::vector<double>>();
        ck.meta.standardization.stdev.data = st.at("stdev").get<std::vector<double>>();

        const auto& tensors = doc.at("tensors");
        ck.params.visit([&](Parameter& par) {
            if (!tensors.contains(par.name))
                throw DataError("checkpoint is missing tensor '" + par.name + "'");
            const auto& t = tensors.at(par.name);
            if (t.at("rows").get<std::size_t>() != par.value.rows ||
                t.at("cols").get<std::size_t>() != par.value.cols)
                throw DataError("checkpoint tensor '" + par.name +
                                "' does not match the declared dimensions");
            par.value.data = decode_hex(t.at("hex").get<std::string>(), par.count());
        });
        return ck;
    } catch (const json::exception& e) {
        throw DataError("malformed checkpoint " + path + ": " + e.what());
    }
}

} // namespace gruwe

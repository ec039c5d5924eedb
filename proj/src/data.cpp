#include "gruwe/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace gruwe {

using json = nlohmann::json;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// collects per-line violations and raises a single DataError naming the
// first few, so a CLI run over a broken file reports actionable lines
struct ViolationLog {
    std::string path;
    std::vector<std::string> messages;

    void add(std::size_t line, const std::string& what) {
        messages.push_back(path + ":" + std::to_string(line) + ": " + what);
    }
    void raise_if_any() const {
        if (messages.empty()) return;
        std::ostringstream os;
        const std::size_t shown = std::min<std::size_t>(messages.size(), 10);
        os << messages.size() << " invalid record(s), first " << shown << ":";
        for (std::size_t i = 0; i < shown; ++i) os << "\n  " << messages[i];
        throw DataError(os.str());
    }
};

bool extract_finite_number(const json& j, double& out) {
    if (!j.is_number()) return false;
    out = j.get<double>();
    return std::isfinite(out);
}

// returns true when the first line is a header record; validates it
bool check_header(const json& j, const std::string& expected_format, std::size_t line,
                  ViolationLog& log) {
    if (!j.is_object() || !j.contains("format")) return false;
    for (const auto& [key, _] : j.items()) {
        if (key != "format" && key != "version") {
            log.add(line, "unknown header key '" + key + "'");
            return true;
        }
    }
    if (!j.at("format").is_string() || j.at("format").get<std::string>() != expected_format) {
        log.add(line, "header format is not '" + expected_format + "'");
        return true;
    }
    if (!j.contains("version") || !j.at("version").is_number_integer() ||
        j.at("version").get<int>() != 1) {
        log.add(line, "unsupported header version (expected 1)");
        return true;
    }
    return true;
}

bool parse_time_axis(const json& j, std::size_t line, ViolationLog& log,
                     std::vector<double>& times) {
    if (!j.is_array()) {
        log.add(line, "'times' must be an array of numbers");
        return false;
    }
    times.clear();
    times.reserve(j.size());
    for (const auto& el : j) {
        double t;
        if (!extract_finite_number(el, t)) {
            log.add(line, "'times' contains a non-numeric or non-finite entry");
            return false;
        }
        if (!times.empty() && !(t > times.back())) {
            log.add(line, "'times' not strictly increasing at value " + std::to_string(t));
            return false;
        }
        times.push_back(t);
    }
    return true;
}

} // namespace

std::vector<IrregularSeries> load_series_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open series file: " + path);

    std::vector<IrregularSeries> out;
    ViolationLog log{path, {}};
    std::string line;
    std::size_t lineno = 0;
    bool first_record = true;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            log.add(lineno, std::string("invalid JSON: ") + e.what());
            continue;
        }

        if (first_record) {
            first_record = false;
            if (j.is_object() && j.contains("format")) {
                check_header(j, "gruwe-series", lineno, log);
                continue;
            }
        }

        if (!j.is_object()) {
            log.add(lineno, "record is not a JSON object");
            continue;
        }
        bool bad_key = false;
        for (const auto& [key, _] : j.items()) {
            if (key != "times" && key != "values" && key != "mask") {
                log.add(lineno, "unknown key '" + key + "'");
                bad_key = true;
            }
        }
        if (bad_key) continue;
        if (!j.contains("times") || !j.contains("values")) {
            log.add(lineno, "record needs 'times' and 'values'");
            continue;
        }

        IrregularSeries seq;
        if (!parse_time_axis(j.at("times"), lineno, log, seq.times)) continue;

        const json& jv = j.at("values");
        if (!jv.is_array() || jv.size() != seq.times.size()) {
            log.add(lineno, "'values' must be an array with one row per time");
            continue;
        }
        bool ok = true;
        std::size_t dim = 0;
        for (const auto& row : jv) {
            if (!row.is_array() || (dim != 0 && row.size() != dim) ||
                (dim == 0 && row.empty())) {
                log.add(lineno, "ragged or empty 'values' row");
                ok = false;
                break;
            }
            dim = row.size();
            DenseVector v(dim);
            for (std::size_t i = 0; i < dim; ++i) {
                double x;
                if (!extract_finite_number(row[i], x)) {
                    log.add(lineno, "non-numeric or non-finite value entry");
                    ok = false;
                    break;
                }
                v[i] = x;
            }
            if (!ok) break;
            seq.values.push_back(std::move(v));
        }
        if (!ok) continue;

        if (j.contains("mask")) {
            const json& jm = j.at("mask");
            if (!jm.is_array() || jm.size() != seq.times.size()) {
                log.add(lineno, "'mask' must match the shape of 'values'");
                continue;
            }
            for (std::size_t r = 0; r < jm.size() && ok; ++r) {
                const auto& row = jm[r];
                if (!row.is_array() || row.size() != dim) {
                    log.add(lineno, "'mask' must match the shape of 'values'");
                    ok = false;
                    break;
                }
                DenseVector m(dim);
                for (std::size_t i = 0; i < dim; ++i) {
                    double b;
                    if (!extract_finite_number(row[i], b) || (b != 0.0 && b != 1.0)) {
                        log.add(lineno, "mask entries must be 0 or 1");
                        ok = false;
                        break;
                    }
                    m[i] = b;
                }
                if (ok) seq.mask.push_back(std::move(m));
            }
            if (!ok) continue;
        } else {
            for (std::size_t r = 0; r < seq.times.size(); ++r)
                seq.mask.emplace_back(dim, 1.0);
        }

        // masked-off values are stored as zero by convention
        for (std::size_t r = 0; r < seq.steps(); ++r)
            for (std::size_t i = 0; i < seq.values[r].size(); ++i)
                if (seq.mask[r][i] == 0.0) seq.values[r][i] = 0.0;

        out.push_back(std::move(seq));
    }

    log.raise_if_any();
    return out;
}

std::vector<EventSequence> load_events_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open events file: " + path);

    std::vector<EventSequence> out;
    ViolationLog log{path, {}};
    std::string line;
    std::size_t lineno = 0;
    bool first_record = true;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            log.add(lineno, std::string("invalid JSON: ") + e.what());
            continue;
        }

        if (first_record) {
            first_record = false;
            if (j.is_object() && j.contains("format")) {
                check_header(j, "gruwe-events", lineno, log);
                continue;
            }
        }

        if (!j.is_object()) {
            log.add(lineno, "record is not a JSON object");
            continue;
        }
        bool bad_key = false;
        for (const auto& [key, _] : j.items()) {
            if (key != "times" && key != "types" && key != "t_max") {
                log.add(lineno, "unknown key '" + key + "'");
                bad_key = true;
            }
        }
        if (bad_key) continue;
        if (!j.contains("times") || !j.contains("types") || !j.contains("t_max")) {
            log.add(lineno, "record needs 'times', 'types', 't_max'");
            continue;
        }

        EventSequence seq;
        if (!parse_time_axis(j.at("times"), lineno, log, seq.times)) continue;

        double tmax;
        if (!extract_finite_number(j.at("t_max"), tmax) || !(tmax > 0.0)) {
            log.add(lineno, "'t_max' must be a positive finite number");
            continue;
        }
        seq.t_max = tmax;
        if (!seq.times.empty() && (seq.times.front() < 0.0 || seq.times.back() > tmax)) {
            log.add(lineno, "event times must lie within [0, t_max]");
            continue;
        }

        const json& jt = j.at("types");
        if (!jt.is_array() || jt.size() != seq.times.size()) {
            log.add(lineno, "'types' must be an array with one entry per time");
            continue;
        }
        bool ok = true;
        for (const auto& el : jt) {
            if (!el.is_number_integer() || el.get<long long>() < 0) {
                log.add(lineno, "event types must be non-negative integers");
                ok = false;
                break;
            }
            seq.types.push_back(static_cast<int>(el.get<long long>()));
        }
        if (!ok) continue;

        out.push_back(std::move(seq));
    }

    log.raise_if_any();
    return out;
}

void write_series_jsonl(const std::string& path, const std::vector<IrregularSeries>& seqs) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write series file: " + path);
    os << json{{"format", "gruwe-series"}, {"version", 1}}.dump() << "\n";
    for (const auto& s : seqs) {
        json jv = json::array();
        json jm = json::array();
        for (std::size_t r = 0; r < s.steps(); ++r) {
            jv.push_back(s.values[r].data);
            jm.push_back(s.mask[r].data);
        }
        os << json{{"times", s.times}, {"values", jv}, {"mask", jm}}.dump() << "\n";
    }
    if (!os) throw DataError("write failed: " + path);
}

void write_events_jsonl(const std::string& path, const std::vector<EventSequence>& seqs) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write events file: " + path);
    os << json{{"format", "gruwe-events"}, {"version", 1}}.dump() << "\n";
    for (const auto& s : seqs)
        os << json{{"times", s.times}, {"types", s.types}, {"t_max", s.t_max}}.dump() << "\n";
    if (!os) throw DataError("write failed: " + path);
}

// --- standardization ----------------------------------------------------------

StandardizationStats compute_standardization(const std::vector<IrregularSeries>& seqs,
                                             const std::vector<std::size_t>& indices) {
    std::size_t dim = 0;
    for (auto i : indices)
        if (seqs[i].steps() > 0) { dim = seqs[i].dim(); break; }
    StandardizationStats st;
    st.mean = DenseVector(dim, 0.0);
    st.stdev = DenseVector(dim, 1.0);
    if (dim == 0) return st;

    std::vector<double> sum(dim, 0.0), sumsq(dim, 0.0), count(dim, 0.0);
    for (auto i : indices) {
        const auto& s = seqs[i];
        for (std::size_t r = 0; r < s.steps(); ++r)
            for (std::size_t d = 0; d < dim; ++d)
                if (s.mask[r][d] == 1.0) {
                    sum[d] += s.values[r][d];
                    sumsq[d] += s.values[r][d] * s.values[r][d];
                    count[d] += 1.0;
                }
    }
    for (std::size_t d = 0; d < dim; ++d) {
        if (count[d] > 0.0) {
            st.mean[d] = sum[d] / count[d];
            const double var = std::max(0.0, sumsq[d] / count[d] - st.mean[d] * st.mean[d]);
            st.stdev[d] = std::max(std::sqrt(var), 1e-8);
        }
    }
    return st;
}

void apply_standardization(std::vector<IrregularSeries>& seqs, const StandardizationStats& st) {
    for (auto& s : seqs) {
        if (s.steps() == 0) continue;
        if (s.dim() != st.mean.size())
            throw DataError("standardization stats dim " + std::to_string(st.mean.size()) +
                            " does not match series dim " + std::to_string(s.dim()));
        for (std::size_t r = 0; r < s.steps(); ++r)
            for (std::size_t d = 0; d < s.dim(); ++d)
                if (s.mask[r][d] == 1.0)
                    s.values[r][d] = (s.values[r][d] - st.mean[d]) / st.stdev[d];
    }
}

DenseVector destandardize(const DenseVector& y, const StandardizationStats& st) {
    if (y.size() != st.mean.size())
        throw ShapeError("destandardize: prediction dim does not match stats");
    DenseVector out(y.size());
    for (std::size_t d = 0; d < y.size(); ++d) out[d] = y[d] * st.stdev[d] + st.mean[d];
    return out;
}

// --- generators -----------------------------------------------------------------

double DecayProcessOracle::latent_value(std::size_t seq, std::size_t var, double t) const {
    const Seq& s = seqs.at(seq);
    return s.amp[var] * std::exp(-s.kappa[var] * t) * std::sin(s.omega[var] * t + s.phi[var]);
}

namespace {

// strictly increasing homogeneous Poisson arrivals on (0, span); duplicate
// floating-point collisions are resolved by redrawing the increment
std::vector<double> poisson_times(RngState& rng, double rate, double span) {
    std::vector<double> times;
    double t = 0.0;
    for (;;) {
        double next = t;
        do {
            next = t + rng.exponential(rate);
        } while (next == t);
        if (next >= span) break;
        times.push_back(next);
        t = next;
    }
    return times;
}

} // namespace

DecayProcessData gen_decay_process(RngState& rng, const DecayProcessConfig& cfg) {
    if (cfg.dim == 0) throw ConfigError("decay process: dim must be >= 1");
    if (!(cfg.rate > 0.0)) throw ConfigError("decay process: rate must be positive");
    if (!(cfg.t_span > 0.0)) throw ConfigError("decay process: t_span must be positive");
    if (!(cfg.p_miss >= 0.0 && cfg.p_miss < 1.0))
        throw ConfigError("decay process: p_miss must lie in [0, 1)");
    if (cfg.kappa_lo < 0.0) throw ConfigError("decay process: kappa must be non-negative");
    if (cfg.amp_lo > cfg.amp_hi || cfg.kappa_lo > cfg.kappa_hi || cfg.omega_lo > cfg.omega_hi)
        throw ConfigError("decay process: range lo must not exceed hi");
    if (!(cfg.amp_lo > 0.0)) throw ConfigError("decay process: amplitude must be positive");

    DecayProcessData out;
    out.series.reserve(cfg.n_seq);
    out.oracle.seqs.reserve(cfg.n_seq);

    for (std::size_t s = 0; s < cfg.n_seq; ++s) {
        for (;;) { // redraw until the sequence has at least two observations
            DecayProcessOracle::Seq osc{DenseVector(cfg.dim), DenseVector(cfg.dim),
                                        DenseVector(cfg.dim), DenseVector(cfg.dim)};
            for (std::size_t d = 0; d < cfg.dim; ++d) {
                osc.amp[d] = rng.uniform(cfg.amp_lo, cfg.amp_hi);
                osc.kappa[d] = rng.uniform(cfg.kappa_lo, cfg.kappa_hi);
                osc.omega[d] = rng.uniform(cfg.omega_lo, cfg.omega_hi);
                osc.phi[d] = rng.uniform(0.0, kTwoPi);
            }
            IrregularSeries seq;
            seq.times = poisson_times(rng, cfg.rate, cfg.t_span);
            if (seq.times.size() < 2) continue;
            for (double t : seq.times) {
                DenseVector v(cfg.dim), m(cfg.dim);
                for (std::size_t d = 0; d < cfg.dim; ++d) {
                    const bool observed = rng.next_unit() >= cfg.p_miss;
                    m[d] = observed ? 1.0 : 0.0;
                    v[d] = observed ? osc.amp[d] * std::exp(-osc.kappa[d] * t) *
                                          std::sin(osc.omega[d] * t + osc.phi[d])
                                    : 0.0;
                }
                seq.values.push_back(std::move(v));
                seq.mask.push_back(std::move(m));
            }
            out.series.push_back(std::move(seq));
            out.oracle.seqs.push_back(std::move(osc));
            break;
        }
    }
    return out;
}

PoissonEventData gen_poisson_events(RngState& rng, std::size_t n_seq, double lambda_star,
                                    double t_max) {
    if (!(lambda_star > 0.0)) throw ConfigError("poisson events: rate must be positive");
    if (!(t_max > 0.0)) throw ConfigError("poisson events: t_max must be positive");

    PoissonEventData out;
    out.lambda_star = lambda_star;
    for (std::size_t s = 0; s < n_seq; ++s) {
        EventSequence seq;
        seq.t_max = t_max;
        seq.times = poisson_times(rng, lambda_star, t_max);
        seq.types.assign(seq.times.size(), 0);
        out.oracle_ll.push_back(static_cast<double>(seq.count()) * std::log(lambda_star) -
                                lambda_star * t_max);
        out.sequences.push_back(std::move(seq));
    }
    return out;
}

double hawkes_exact_ll(const EventSequence& seq, double mu, double alpha, double beta,
                       int event_types) {
    // event term via the exponential-kernel recursion
    //   R_1 = 0,  R_j = e^{-beta (t_j - t_{j-1})} (R_{j-1} + 1)
    // compensator in closed form:
    //   mu T + (alpha/beta) sum_j (1 - e^{-beta (T - t_j)})
    double ll = 0.0;
    double r = 0.0;
    for (std::size_t j = 0; j < seq.count(); ++j) {
        if (j > 0) r = std::exp(-beta * (seq.times[j] - seq.times[j - 1])) * (r + 1.0);
        ll += std::log(mu + alpha * r);
    }
    double comp = mu * seq.t_max;
    for (double t : seq.times) comp += (alpha / beta) * (1.0 - std::exp(-beta * (seq.t_max - t)));
    ll -= comp;
    // marks are uniform over the K types
    if (event_types > 1)
        ll -= static_cast<double>(seq.count()) * std::log(static_cast<double>(event_types));
    return ll;
}

HawkesEventData gen_hawkes_events(RngState& rng, std::size_t n_seq, double mu, double alpha,
                                  double beta, double t_max, int event_types) {
    if (!(mu > 0.0)) throw ConfigError("hawkes events: mu must be positive");
    if (alpha < 0.0) throw ConfigError("hawkes events: alpha must be non-negative");
    if (!(beta > 0.0)) throw ConfigError("hawkes events: beta must be positive");
    if (!(alpha / beta < 1.0))
        throw ConfigError("hawkes events: unstable parameters (alpha/beta must be < 1)");
    if (event_types < 1) throw ConfigError("hawkes events: event_types must be >= 1");
    if (!(t_max > 0.0)) throw ConfigError("hawkes events: t_max must be positive");

    HawkesEventData out;
    out.mu = mu;
    out.alpha = alpha;
    out.beta = beta;
    out.event_types = event_types;

    for (std::size_t s = 0; s < n_seq; ++s) {
        EventSequence seq;
        seq.t_max = t_max;
        double t = 0.0;
        double excitation = 0.0; // sum of alpha e^{-beta (t - t_i)} over past events
        for (;;) {
            // intensity decays between events, so the current value dominates
            const double lam_bar = mu + excitation;
            double next = t;
            do {
                next = t + rng.exponential(lam_bar);
            } while (next == t);
            if (next > t_max) break;
            excitation *= std::exp(-beta * (next - t));
            t = next;
            const double lam_t = mu + excitation;
            if (rng.next_unit() * lam_bar <= lam_t) {
                seq.times.push_back(t);
                seq.types.push_back(static_cast<int>(rng.next_below(
                    static_cast<std::uint64_t>(event_types))));
                excitation += alpha;
            }
        }
        out.oracle_ll.push_back(hawkes_exact_ll(seq, mu, alpha, beta, event_types));
        out.sequences.push_back(std::move(seq));
    }
    return out;
}

DatasetSplit split_dataset(std::size_t n, double train_ratio, double val_ratio,
                           double test_ratio, std::uint64_t seed) {
    if (train_ratio < 0.0 || val_ratio < 0.0 || test_ratio < 0.0)
        throw ConfigError("split ratios must be non-negative");
    const double total = train_ratio + val_ratio + test_ratio;
    if (!(total > 0.0)) throw ConfigError("split ratios must not all be zero");

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    RngState rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.next_below(i);
        std::swap(idx[i - 1], idx[j]);
    }

    const auto n_val = static_cast<std::size_t>(std::floor(val_ratio / total * n));
    const auto n_test = static_cast<std::size_t>(std::floor(test_ratio / total * n));
    const std::size_t n_train = n - n_val - n_test; // remainder goes to train

    DatasetSplit sp;
    sp.seed = seed;
    sp.train.assign(idx.begin(), idx.begin() + n_train);
    sp.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    sp.test.assign(idx.begin() + n_train + n_val, idx.end());
    return sp;
}

} // namespace gruwe

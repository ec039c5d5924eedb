#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "gruwe/data.hpp"

using namespace gruwe;

namespace {

std::filesystem::path scratch_dir() {
    auto p = std::filesystem::temp_directory_path() / "gruwe_data_tests";
    std::filesystem::create_directories(p);
    return p;
}

std::string write_text(const std::string& name, const std::string& text) {
    auto p = (scratch_dir() / name).string();
    std::ofstream os(p);
    os << text;
    return p;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("series loader accepts a well-formed file with header") {
    auto path = write_text("ok_series.jsonl",
                           R"({"format":"gruwe-series","version":1})"
                           "\n"
                           R"({"times":[0.5,1.25],"values":[[1.0,2.0],[3.0,4.0]],"mask":[[1,0],[1,1]]})"
                           "\n"
                           R"({"times":[2.0],"values":[[5.0,6.0]]})"
                           "\n");
    auto seqs = load_series_jsonl(path);
    REQUIRE(seqs.size() == 2);
    CHECK(seqs[0].times == std::vector<double>{0.5, 1.25});
    CHECK(seqs[0].values[0][0] == 1.0);
    CHECK(seqs[0].values[0][1] == 0.0); // masked-off entries are zeroed
    CHECK(seqs[0].mask[0][1] == 0.0);
    CHECK(seqs[0].values[1][1] == 4.0);
    // absent mask means fully observed
    CHECK(seqs[1].mask[0][0] == 1.0);
    CHECK(seqs[1].mask[0][1] == 1.0);
}

TEST_CASE("series loader accepts a headerless file and skips blank lines") {
    auto path = write_text("headerless.jsonl",
                           "\n"
                           R"({"times":[1.0],"values":[[2.5]]})"
                           "\n\n");
    auto seqs = load_series_jsonl(path);
    REQUIRE(seqs.size() == 1);
    CHECK(seqs[0].values[0][0] == 2.5);
}

TEST_CASE("empty file loads to an empty collection; missing file raises") {
    auto path = write_text("empty.jsonl", "");
    CHECK(load_series_jsonl(path).empty());
    CHECK(load_events_jsonl(write_text("empty2.jsonl", "")).empty());
    CHECK_THROWS_AS(load_series_jsonl("/nonexistent/nope.jsonl"), DataError);
    CHECK_THROWS_AS(load_events_jsonl("/nonexistent/nope.jsonl"), DataError);
}

TEST_CASE("series violations name the offending line") {
    struct Case {
        const char* record;
        const char* needle;
    };
    const Case cases[] = {
        {R"({"times":[1.0,0.5],"values":[[1],[2]]})", "not strictly increasing"},
        {R"({"times":[1.0],"values":[[1]],"extra":3})", "unknown key 'extra'"},
        {R"({"times":[1.0,2.0],"values":[[1]]})", "one row per time"},
        {R"({"times":[1.0,2.0],"values":[[1],[2,3]]})", "ragged"},
        {R"({"times":[1.0],"values":[[1]],"mask":[[2]]})", "must be 0 or 1"},
        {R"({"times":[1.0],"values":[["x"]]})", "non-numeric"},
        {R"({"times":"bad","values":[[1]]})", "'times' must be an array"},
        {R"([1,2,3])", "not a JSON object"},
        {R"({"values":[[1]]})", "needs 'times' and 'values'"},
        {"{nonsense", "invalid JSON"},
    };
    int n = 0;
    for (const auto& c : cases) {
        auto path = write_text("bad_series_" + std::to_string(n++) + ".jsonl",
                               std::string(R"({"times":[0.5],"values":[[9]]})") + "\n" +
                                   c.record + "\n");
        const std::string msg =
            message_of([&] { (void)load_series_jsonl(path); });
        INFO("record: ", c.record, " message: ", msg);
        CHECK(msg.find(path + ":2:") != std::string::npos);
        CHECK(msg.find(c.needle) != std::string::npos);
    }
}

TEST_CASE("many violations are counted but only the first ten are listed") {
    std::string text;
    for (int i = 0; i < 12; ++i) text += "{broken\n";
    auto path = write_text("many_bad.jsonl", text);
    const std::string msg = message_of([&] { (void)load_series_jsonl(path); });
    CHECK(msg.find("12 invalid record(s), first 10") != std::string::npos);
    CHECK(msg.find(path + ":1:") != std::string::npos);
    CHECK(msg.find(path + ":10:") != std::string::npos);
    CHECK(msg.find(path + ":11:") == std::string::npos);
}

TEST_CASE("header validation: format, version, unknown keys") {
    auto wrong_format = write_text("hdr1.jsonl",
                                   R"({"format":"gruwe-events","version":1})"
                                   "\n");
    CHECK(message_of([&] { (void)load_series_jsonl(wrong_format); })
              .find("header format is not 'gruwe-series'") != std::string::npos);

    auto bad_version = write_text("hdr2.jsonl",
                                  R"({"format":"gruwe-series","version":2})"
                                  "\n");
    CHECK(message_of([&] { (void)load_series_jsonl(bad_version); })
              .find("unsupported header version") != std::string::npos);

    auto extra_key = write_text("hdr3.jsonl",
                                R"({"format":"gruwe-series","version":1,"x":0})"
                                "\n");
    CHECK(message_of([&] { (void)load_series_jsonl(extra_key); })
              .find("unknown header key 'x'") != std::string::npos);
}

TEST_CASE("events loader accepts a well-formed file") {
    auto path = write_text("ok_events.jsonl",
                           R"({"format":"gruwe-events","version":1})"
                           "\n"
                           R"({"times":[0.25,1.5],"types":[0,2],"t_max":3.0})"
                           "\n"
                           R"({"times":[],"types":[],"t_max":1.0})"
                           "\n");
    auto seqs = load_events_jsonl(path);
    REQUIRE(seqs.size() == 2);
    CHECK(seqs[0].times == std::vector<double>{0.25, 1.5});
    CHECK(seqs[0].types == std::vector<int>{0, 2});
    CHECK(seqs[0].t_max == 3.0);
    CHECK(seqs[1].count() == 0); // empty sequences are legal
}

TEST_CASE("events violations name the offending line") {
    struct Case {
        const char* record;
        const char* needle;
    };
    const Case cases[] = {
        {R"({"times":[1.0],"types":[0],"t_max":0.0})", "'t_max' must be a positive"},
        {R"({"times":[5.0],"types":[0],"t_max":2.0})", "within [0, t_max]"},
        {R"({"times":[1.0],"types":[-1],"t_max":2.0})", "non-negative integers"},
        {R"({"times":[1.0],"types":[0.5],"t_max":2.0})", "non-negative integers"},
        {R"({"times":[1.0],"types":[0,1],"t_max":2.0})", "one entry per time"},
        {R"({"times":[1.0],"types":[0],"t_max":2.0,"q":1})", "unknown key 'q'"},
        {R"({"times":[1.0],"t_max":2.0})", "needs 'times', 'types', 't_max'"},
    };
    int n = 0;
    for (const auto& c : cases) {
        auto path = write_text("bad_events_" + std::to_string(n++) + ".jsonl",
                               std::string(c.record) + "\n");
        const std::string msg = message_of([&] { (void)load_events_jsonl(path); });
        INFO("record: ", c.record, " message: ", msg);
        CHECK(msg.find(path + ":1:") != std::string::npos);
        CHECK(msg.find(c.needle) != std::string::npos);
    }
}

TEST_CASE("series write-then-load round trip is exact") {
    RngState rng(101);
    DecayProcessConfig cfg;
    cfg.n_seq = 5;
    cfg.dim = 2;
    cfg.t_span = 4.0;
    auto data = gen_decay_process(rng, cfg);
    auto path = (scratch_dir() / "roundtrip_series.jsonl").string();
    write_series_jsonl(path, data.series);
    auto loaded = load_series_jsonl(path);
    REQUIRE(loaded.size() == data.series.size());
    for (std::size_t s = 0; s < loaded.size(); ++s) {
        CHECK(loaded[s].times == data.series[s].times);
        for (std::size_t r = 0; r < loaded[s].steps(); ++r) {
            CHECK(loaded[s].values[r] == data.series[s].values[r]);
            CHECK(loaded[s].mask[r] == data.series[s].mask[r]);
        }
    }
}

TEST_CASE("events write-then-load round trip is exact") {
    RngState rng(102);
    auto data = gen_hawkes_events(rng, 6, 0.4, 0.5, 1.2, 20.0, 3);
    auto path = (scratch_dir() / "roundtrip_events.jsonl").string();
    write_events_jsonl(path, data.sequences);
    auto loaded = load_events_jsonl(path);
    REQUIRE(loaded.size() == data.sequences.size());
    for (std::size_t s = 0; s < loaded.size(); ++s) {
        CHECK(loaded[s].times == data.sequences[s].times);
        CHECK(loaded[s].types == data.sequences[s].types);
        CHECK(loaded[s].t_max == data.sequences[s].t_max);
    }
}

TEST_CASE("standardization stats from a hand-worked example") {
    // variable 0 observed entries: {1, 3} -> mean 2, population var 1
    // variable 1 observed entries: {4}    -> mean 4, var 0 -> floored stdev
    IrregularSeries a;
    a.times = {0.0, 1.0};
    a.values = {DenseVector::checked({1.0, 0.0}), DenseVector::checked({3.0, 4.0})};
    a.mask = {DenseVector::checked({1.0, 0.0}), DenseVector::checked({1.0, 1.0})};
    std::vector<IrregularSeries> all{a};
    auto st = compute_standardization(all, {0});
    CHECK(st.mean[0] == doctest::Approx(2.0));
    CHECK(st.stdev[0] == doctest::Approx(1.0));
    CHECK(st.mean[1] == doctest::Approx(4.0));
    CHECK(st.stdev[1] == 1e-8); // zero-variance floor

    apply_standardization(all, st);
    CHECK(all[0].values[0][0] == doctest::Approx(-1.0));
    CHECK(all[0].values[1][0] == doctest::Approx(1.0));
    CHECK(all[0].values[0][1] == 0.0); // masked-off entries untouched

    // destandardize inverts the observed-entry transform
    auto back = destandardize(DenseVector::checked({-1.0, 0.0}), st);
    CHECK(back[0] == doctest::Approx(1.0));
    CHECK(back[1] == doctest::Approx(4.0));
}

TEST_CASE("standardization with no observed entries falls back to identity") {
    IrregularSeries a;
    a.times = {0.0};
    a.values = {DenseVector::checked({7.0})};
    a.mask = {DenseVector::checked({0.0})};
    std::vector<IrregularSeries> all{a};
    auto st = compute_standardization(all, {0});
    CHECK(st.mean[0] == 0.0);
    CHECK(st.stdev[0] == 1.0);
}

TEST_CASE("decay-process generator: determinism, support, oracle consistency") {
    DecayProcessConfig cfg;
    cfg.n_seq = 50;
    cfg.dim = 3;
    cfg.p_miss = 0.3;

    RngState r1(7), r2(7), r3(8);
    auto a = gen_decay_process(r1, cfg);
    auto b = gen_decay_process(r2, cfg);
    auto c = gen_decay_process(r3, cfg);
    REQUIRE(a.series.size() == 50);
    CHECK(a.series[0].times == b.series[0].times); // same seed, same data
    CHECK(a.series[10].values[0] == b.series[10].values[0]);
    CHECK(a.series[0].times != c.series[0].times); // different seed differs

    std::size_t observed = 0, total = 0;
    for (std::size_t s = 0; s < a.series.size(); ++s) {
        const auto& seq = a.series[s];
        REQUIRE(seq.steps() >= 2);
        for (std::size_t r = 0; r < seq.steps(); ++r) {
            CHECK(seq.times[r] > 0.0);
            CHECK(seq.times[r] < cfg.t_span);
            if (r > 0) CHECK(seq.times[r] > seq.times[r - 1]);
            for (std::size_t d = 0; d < cfg.dim; ++d) {
                ++total;
                if (seq.mask[r][d] == 1.0) {
                    ++observed;
                    // noiseless generator: observed entries equal the latent path
                    CHECK(seq.values[r][d] ==
                          doctest::Approx(a.oracle.latent_value(s, d, seq.times[r]))
                              .epsilon(1e-14));
                } else {
                    CHECK(seq.values[r][d] == 0.0);
                }
            }
        }
    }
    const double frac = static_cast<double>(observed) / static_cast<double>(total);
    CHECK(frac == doctest::Approx(1.0 - cfg.p_miss).epsilon(0.05));
}

TEST_CASE("decay-process generator rejects bad configs") {
    RngState rng(1);
    DecayProcessConfig cfg;
    cfg.dim = 0;
    CHECK_THROWS_AS(gen_decay_process(rng, cfg), ConfigError);
    cfg = {};
    cfg.rate = 0.0;
    CHECK_THROWS_AS(gen_decay_process(rng, cfg), ConfigError);
    cfg = {};
    cfg.p_miss = 1.0;
    CHECK_THROWS_AS(gen_decay_process(rng, cfg), ConfigError);
    cfg = {};
    cfg.amp_lo = 2.0;
    cfg.amp_hi = 1.0;
    CHECK_THROWS_AS(gen_decay_process(rng, cfg), ConfigError);
    cfg = {};
    cfg.amp_lo = 0.0;
    CHECK_THROWS_AS(gen_decay_process(rng, cfg), ConfigError);
}

TEST_CASE("constant-rate event generator matches its expected count and oracle") {
    RngState rng(55);
    const double lam = 0.8, T = 50.0;
    auto data = gen_poisson_events(rng, 500, lam, T);
    REQUIRE(data.sequences.size() == 500);
    double total = 0.0;
    for (std::size_t s = 0; s < data.sequences.size(); ++s) {
        const auto& seq = data.sequences[s];
        for (std::size_t j = 0; j < seq.count(); ++j) {
            CHECK(seq.times[j] > 0.0);
            CHECK(seq.times[j] < T);
            CHECK(seq.types[j] == 0);
            if (j > 0) CHECK(seq.times[j] > seq.times[j - 1]);
        }
        total += static_cast<double>(seq.count());
        CHECK(data.oracle_ll[s] ==
              doctest::Approx(seq.count() * std::log(lam) - lam * T).epsilon(1e-12));
    }
    // mean count over 500 sequences: SE = sqrt(40/500) ~ 0.28, so +-3% is ~4 SE
    CHECK(total / 500.0 == doctest::Approx(lam * T).epsilon(0.03));

    CHECK_THROWS_AS(gen_poisson_events(rng, 1, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(gen_poisson_events(rng, 1, 1.0, 0.0), ConfigError);
}

TEST_CASE("self-exciting likelihood: closed-form constant-rate reduction") {
    EventSequence seq;
    seq.times = {0.5, 1.5};
    seq.types = {0, 0};
    seq.t_max = 2.0;
    // alpha = 0 collapses to the constant-rate likelihood n log(mu) - mu T
    CHECK(hawkes_exact_ll(seq, 1.0, 0.0, 1.0, 1) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(hawkes_exact_ll(seq, 0.5, 0.0, 2.0, 1) ==
          doctest::Approx(2.0 * std::log(0.5) - 1.0).epsilon(1e-14));
    // uniform marks subtract n log K
    CHECK(hawkes_exact_ll(seq, 1.0, 0.0, 1.0, 4) ==
          doctest::Approx(-2.0 - 2.0 * std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("self-exciting likelihood matches direct sums and quadrature") {
    // independent oracle: event term by direct O(n^2) kernel sums, compensator
    // by piecewise-exact integration of the intensity between events
    RngState rng(77);
    const double mu = 0.3, alpha = 0.6, beta = 1.1;
    auto data = gen_hawkes_events(rng, 20, mu, alpha, beta, 30.0, 2);
    for (const auto& seq : data.sequences) {
        if (seq.count() == 0) continue;
        double event_term = 0.0;
        for (std::size_t j = 0; j < seq.count(); ++j) {
            double lam = mu;
            for (std::size_t i = 0; i < j; ++i)
                lam += alpha * std::exp(-beta * (seq.times[j] - seq.times[i]));
            event_term += std::log(lam);
        }
        // integral of alpha e^{-beta(t - t_i)} from t_i to T, summed exactly
        double comp = mu * seq.t_max;
        for (double ti : seq.times)
            comp += (alpha / beta) * (1.0 - std::exp(-beta * (seq.t_max - ti)));
        const double marks = seq.count() * std::log(2.0);
        const double expected = event_term - comp - marks;
        CHECK(hawkes_exact_ll(seq, mu, alpha, beta, 2) ==
              doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("self-exciting data is more likely under its generator than any constant rate") {
    RngState rng(90);
    const double mu = 0.2, alpha = 0.8, beta = 1.0, T = 50.0;
    auto data = gen_hawkes_events(rng, 300, mu, alpha, beta, T, 1);

    double events = 0.0;
    for (const auto& s : data.sequences) events += static_cast<double>(s.count());
    // stationary intensity mu / (1 - alpha/beta) = 1.0
    CHECK(events / (300.0 * T) == doctest::Approx(1.0).epsilon(0.1));

    // best-possible constant-rate fit is the maximum-likelihood rate
    const double lam_hat = events / (300.0 * T);
    double true_ll = 0.0, const_ll = 0.0;
    for (std::size_t s = 0; s < data.sequences.size(); ++s) {
        true_ll += data.oracle_ll[s];
        const_ll += data.sequences[s].count() * std::log(lam_hat) - lam_hat * T;
    }
    CHECK(true_ll / 300.0 > const_ll / 300.0 + 1.0); // decisively better per sequence
}

TEST_CASE("self-exciting generator rejects bad configs") {
    RngState rng(1);
    CHECK_THROWS_AS(gen_hawkes_events(rng, 1, 0.0, 0.5, 1.0, 10.0, 1), ConfigError);
    CHECK_THROWS_AS(gen_hawkes_events(rng, 1, 0.2, -0.1, 1.0, 10.0, 1), ConfigError);
    CHECK_THROWS_AS(gen_hawkes_events(rng, 1, 0.2, 0.5, 0.0, 10.0, 1), ConfigError);
    CHECK_THROWS_AS(gen_hawkes_events(rng, 1, 0.2, 1.0, 1.0, 10.0, 1), ConfigError); // unstable
    CHECK_THROWS_AS(gen_hawkes_events(rng, 1, 0.2, 0.5, 1.0, 10.0, 0), ConfigError);
    CHECK_THROWS_AS(gen_hawkes_events(rng, 1, 0.2, 0.5, 1.0, 0.0, 1), ConfigError);
}

TEST_CASE("dataset split: partition, sizes, determinism") {
    auto sp = split_dataset(103, 0.7, 0.15, 0.15, 9);
    CHECK(sp.val.size() == 15);
    CHECK(sp.test.size() == 15);
    CHECK(sp.train.size() == 73); // remainder goes to train

    std::vector<bool> seen(103, false);
    for (auto bucket : {&sp.train, &sp.val, &sp.test})
        for (auto i : *bucket) {
            REQUIRE(i < 103);
            CHECK(!seen[i]);
            seen[i] = true;
        }
    for (bool b : seen) CHECK(b);

    auto sp2 = split_dataset(103, 0.7, 0.15, 0.15, 9);
    CHECK(sp.train == sp2.train);
    CHECK(sp.val == sp2.val);
    CHECK(sp.test == sp2.test);
    auto sp3 = split_dataset(103, 0.7, 0.15, 0.15, 10);
    CHECK(sp.train != sp3.train);

    // un-normalized ratios give the same partition sizes
    auto sp4 = split_dataset(103, 7.0, 1.5, 1.5, 9);
    CHECK(sp4.train == sp.train);

    auto all_train = split_dataset(10, 1.0, 0.0, 0.0, 1);
    CHECK(all_train.train.size() == 10);
    CHECK(all_train.val.empty());
    CHECK(all_train.test.empty());

    auto none = split_dataset(0, 0.7, 0.15, 0.15, 1);
    CHECK(none.train.empty());

    CHECK_THROWS_AS(split_dataset(10, -0.1, 0.5, 0.5, 1), ConfigError);
    CHECK_THROWS_AS(split_dataset(10, 0.0, 0.0, 0.0, 1), ConfigError);
}

TEST_CASE("take_subset keeps the requested rows in order") {
    std::vector<int> all{10, 11, 12, 13};
    auto sub = take_subset(all, {3, 1});
    REQUIRE(sub.size() == 2);
    CHECK(sub[0] == 13);
    CHECK(sub[1] == 11);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <sys/wait.h>

#include "gruwe/training.hpp"

using namespace gruwe;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out; // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(GRUWE_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) r.code = 1000 + WTERMSIG(status); // crash marker
    return r;
}

fs::path scratch_dir() {
    static bool cleaned = false;
    const fs::path p = fs::temp_directory_path() / "gruwe_cli_tests";
    if (!cleaned) {
        fs::remove_all(p);
        cleaned = true;
    }
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string q(const fs::path& p) { return p.string(); }

// a small forecast dataset on disk, created once per process
fs::path forecast_data() {
    static fs::path path;
    if (path.empty()) {
        path = scratch_dir() / "dp.jsonl";
        auto r = run_cli("synth --set generator=decay-process --set out=" + q(path) +
                         " --set n_seq=16 --set dim=2 --set seed=11 --set t_span=6");
        REQUIRE(r.code == 0);
    }
    return path;
}

fs::path event_data() {
    static fs::path path;
    if (path.empty()) {
        path = scratch_dir() / "pois.jsonl";
        auto r = run_cli("synth --set generator=poisson --set out=" + q(path) +
                         " --set n_seq=14 --set lambda=1.2 --set t_max=12 --set seed=12");
        REQUIRE(r.code == 0);
    }
    return path;
}

} // namespace

TEST_CASE("help is exit 0 and documents every config key of the command") {
    auto top = run_cli("--help");
    CHECK(top.code == 0);
    for (const char* sub :
         {"train", "eval", "predict", "synth", "inspect", "bench-online"})
        CHECK(top.out.find(sub) != std::string::npos);

    auto tr = run_cli("train --help");
    CHECK(tr.code == 0);
    for (const char* key : {"task", "data", "checkpoint", "lr_decay", "clip_norm",
                            "mc_samples", "observe_fraction", "workers", "split_ratios"})
        CHECK_MESSAGE(tr.out.find(key) != std::string::npos, "missing key: ", key);
}

TEST_CASE("configuration mistakes exit 2 with a one-line category diagnostic") {
    const auto ck = scratch_dir() / "none.json";
    auto unknown = run_cli("train --set task=forecast --set data=x --set checkpoint=" +
                           q(ck) + " --set not_a_key=1");
    CHECK(unknown.code == 2);
    CHECK(unknown.out.find("error (config)") != std::string::npos);
    CHECK(unknown.out.find("not_a_key") != std::string::npos);

    auto epochs0 = run_cli("train --set task=forecast --set data=" + q(forecast_data()) +
                           " --set checkpoint=" + q(ck) + " --set epochs=0");
    CHECK(epochs0.code == 2);
    CHECK(epochs0.out.find("error (config)") != std::string::npos);

    auto badtask = run_cli("train --set task=nonsense --set data=x --set checkpoint=y");
    CHECK(badtask.code == 2);

    auto badset = run_cli("train --set no_equals_sign");
    CHECK(badset.code == 2);

    auto badflag = run_cli("train --frobnicate");
    CHECK(badflag.code == 2);

    auto badgen = run_cli("synth --set generator=fractal --set out=" +
                          q(scratch_dir() / "z.jsonl"));
    CHECK(badgen.code == 2);
    auto inapplicable = run_cli("synth --set generator=poisson --set mu=1 --set out=" +
                                q(scratch_dir() / "z2.jsonl"));
    CHECK(inapplicable.code == 2);
    CHECK(inapplicable.out.find("does not apply") != std::string::npos);
}

TEST_CASE("data problems exit 3, never crash") {
    auto missing = run_cli("train --set task=forecast --set data=/nonexistent.jsonl "
                           "--set checkpoint=" + q(scratch_dir() / "c.json"));
    CHECK(missing.code == 3);
    CHECK(missing.out.find("error (data)") != std::string::npos);

    const auto corrupt = scratch_dir() / "corrupt.jsonl";
    std::ofstream(corrupt) << "{\"times\": [1, 2], \"values\": [[0.1]]}\n";
    auto r = run_cli("train --set task=forecast --set data=" + q(corrupt) +
                     " --set checkpoint=" + q(scratch_dir() / "c.json"));
    CHECK(r.code == 3);
    CHECK(r.out.find("error (data)") != std::string::npos);
    CHECK(r.out.find(":1:") != std::string::npos); // names the offending line
}

TEST_CASE("training end to end writes a checkpoint and a schema-stable report") {
    const auto ck = scratch_dir() / "fc.json";
    const auto rep = scratch_dir() / "fc.report.json";
    auto r = run_cli("train --set task=forecast --set data=" + q(forecast_data()) +
                     " --set checkpoint=" + q(ck) + " --set report=" + q(rep) +
                     " --set epochs=3 --set hidden_dim=6 --set seed=4");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("epoch 0:") != std::string::npos);
    CHECK(r.out.find("best epoch") != std::string::npos);

    const auto doc = nlohmann::json::parse(slurp(rep));
    CHECK(doc.at("format") == "gruwe-report");
    CHECK(doc.at("version") == 1);
    CHECK(doc.at("command") == "train");
    CHECK(doc.at("task") == "forecast");
    CHECK(doc.at("train_loss").size() == 3);
    CHECK(doc.at("val_metric").size() == 3);
    CHECK(doc.at("best_epoch").get<std::size_t>() < 3);
    CHECK(doc.contains("test"));
    CHECK(doc.at("test").contains("mse"));
    CHECK(!doc.contains("epoch_seconds")); // timing never enters the report

    const auto loaded = load_checkpoint(q(ck));
    CHECK(loaded.meta.task == "forecast");
    CHECK(loaded.params.hidden_dim == 6);
    CHECK(!loaded.meta.standardization.stdev.data.empty());
}

TEST_CASE("same config and seed reproduce checkpoint and report byte for byte") {
    const auto ck1 = scratch_dir() / "det1.json";
    const auto ck2 = scratch_dir() / "det2.json";
    const auto rep1 = scratch_dir() / "det1.report.json";
    const auto rep2 = scratch_dir() / "det2.report.json";
    const std::string common = "train --set task=forecast --set data=" + q(forecast_data()) +
                               " --set epochs=2 --set hidden_dim=5 --set seed=77";
    REQUIRE(run_cli(common + " --set checkpoint=" + q(ck1) + " --set report=" + q(rep1))
                .code == 0);
    REQUIRE(run_cli(common + " --set checkpoint=" + q(ck2) + " --set report=" + q(rep2))
                .code == 0);
    CHECK(slurp(ck1) == slurp(ck2));
    CHECK(slurp(rep1) == slurp(rep2));
}

TEST_CASE("event-stream training round trip, and evaluation is byte-deterministic") {
    const auto ck = scratch_dir() / "tpp.json";
    auto r = run_cli("train --set task=tpp --set data=" + q(event_data()) +
                     " --set checkpoint=" + q(ck) +
                     " --set epochs=2 --set hidden_dim=5 --set seed=6 --set mc_samples=6");
    REQUIRE(r.code == 0);

    const auto rep1 = scratch_dir() / "ev1.json";
    const auto rep2 = scratch_dir() / "ev2.json";
    const std::string common = "eval --set checkpoint=" + q(ck) + " --set data=" +
                               q(event_data()) + " --set mc_samples=6 --set split=all";
    REQUIRE(run_cli(common + " --set report=" + q(rep1)).code == 0);
    REQUIRE(run_cli(common + " --set report=" + q(rep2)).code == 0);
    CHECK(slurp(rep1) == slurp(rep2));

    const auto doc = nlohmann::json::parse(slurp(rep1));
    CHECK(doc.at("metrics").contains("rmse_time"));
    CHECK(doc.at("metrics").contains("error_rate"));
    CHECK(doc.at("metrics").contains("mean_ll"));

    auto mismatch = run_cli("eval --set checkpoint=" + q(ck) + " --set data=" +
                            q(event_data()) + " --set task=forecast");
    CHECK(mismatch.code == 2);
}

TEST_CASE("inspect prints one regime row per hidden unit, all three regimes") {
    // hand-built checkpoint spanning the three decay behaviours
    GruweParams p(1, 3, 1, 1);
    p.w_gamma.value.data = {1.0, 0.0, -1.0};
    CheckpointMeta meta;
    meta.task = "forecast";
    const auto ck = scratch_dir() / "regimes.json";
    save_checkpoint(q(ck), p, meta);

    auto r = run_cli("inspect --set checkpoint=" + q(ck));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("StateReset") != std::string::npos);
    CHECK(r.out.find("ConstantDecay") != std::string::npos);
    CHECK(r.out.find("NoDecay") != std::string::npos);
    CHECK(r.out.find("hidden=3") != std::string::npos);

    // exactly H data rows: lines that start with a unit index
    std::size_t rows = 0;
    std::size_t pos = 0;
    while ((pos = r.out.find('\n', pos)) != std::string::npos) {
        ++pos;
        if (pos < r.out.size() && std::isdigit(static_cast<unsigned char>(r.out[pos])))
            ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE("predict keeps horizon order and converges to the output bias far out") {
    // model whose prediction at huge horizons collapses onto the output bias
    GruweParams p(1, 2, 1, 1);
    p.w_gamma.value.data = {0.5, 0.5};
    p.W_out.value.data = {1.0, 1.0};
    p.b_out.value.data = {0.75};
    p.W_z.value.data = {0.3, -0.2};
    p.U_z.value.data = {0.1, 0.0, 0.0, 0.1};
    CheckpointMeta meta;
    meta.task = "forecast";
    meta.standardization.mean = DenseVector::checked({2.0});
    meta.standardization.stdev = DenseVector::checked({4.0});
    const auto ck = scratch_dir() / "pred.json";
    save_checkpoint(q(ck), p, meta);

    const auto data = scratch_dir() / "pred_in.jsonl";
    std::ofstream(data) << "{\"times\":[0.0,1.0,2.5],\"values\":[[0.2],[0.5],[-0.1]],"
                           "\"mask\":[[1],[1],[1]]}\n";

    const auto out = scratch_dir() / "pred_out.jsonl";
    auto r = run_cli("predict --set checkpoint=" + q(ck) + " --set data=" + q(data) +
                     " --set out=" + q(out) + " --set horizons=[2.0,0.0,1000.0]");
    REQUIRE(r.code == 0);

    std::ifstream in(out);
    std::string header, line;
    REQUIRE(std::getline(in, header));
    CHECK(nlohmann::json::parse(header).at("format") == "gruwe-predictions");
    REQUIRE(std::getline(in, line));
    const auto rec = nlohmann::json::parse(line);
    const auto hs = rec.at("horizons").get<std::vector<double>>();
    CHECK(hs == std::vector<double>{2.0, 0.0, 1000.0}); // user order, never sorted

    // far horizon: decay erases the state, leaving b_out, then de-standardization
    const double far = rec.at("predictions")[2][0].get<double>();
    CHECK(far == doctest::Approx(0.75 * 4.0 + 2.0).epsilon(1e-12));

    // horizon 0 must agree exactly with the library decode path on the same inputs
    IrregularSeries s;
    s.times = {0.0, 1.0, 2.5};
    s.values = {DenseVector::checked({0.2}), DenseVector::checked({0.5}),
                DenseVector::checked({-0.1})};
    s.mask = {DenseVector(1, 1.0), DenseVector(1, 1.0), DenseVector(1, 1.0)};
    std::vector<IrregularSeries> all = {s};
    apply_standardization(all, meta.standardization);
    const auto fwd = forward_sequence(p, all[0]);
    const auto direct = destandardize(predict_at(p, fwd.states.back(), 0.0),
                                      meta.standardization);
    CHECK(rec.at("predictions")[1][0].get<double>() == direct[0]);

    auto wrong_task_ck = scratch_dir() / "tppck.json";
    CheckpointMeta m2;
    m2.task = "tpp";
    save_checkpoint(q(wrong_task_ck), p, m2);
    auto wrong = run_cli("predict --set checkpoint=" + q(wrong_task_ck) + " --set data=" +
                         q(data) + " --set out=" + q(scratch_dir() / "no.jsonl"));
    CHECK(wrong.code == 2);
}

TEST_CASE("synth is seed-deterministic and writes the oracle sidecar") {
    const auto a = scratch_dir() / "synth_a.jsonl";
    const auto b = scratch_dir() / "synth_b.jsonl";
    const std::string common =
        "synth --set generator=hawkes --set n_seq=6 --set seed=33 --set t_max=15 "
        "--set mu=0.3 --set alpha=0.5 --set beta=1.0 --set event_types=2 --set out=";
    REQUIRE(run_cli(common + q(a)).code == 0);
    REQUIRE(run_cli(common + q(b)).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a.string() + ".oracle.json") == slurp(b.string() + ".oracle.json"));

    const auto oracle = nlohmann::json::parse(slurp(a.string() + ".oracle.json"));
    CHECK(oracle.at("generator") == "hawkes");
    CHECK(oracle.at("oracle_ll").size() == 6);
    CHECK(oracle.at("alpha") == 0.5);
}

TEST_CASE("bench-online emits a schema-stable report with constant state size") {
    const auto ck = scratch_dir() / "bench_ck.json";
    GruweParams p(2, 8, 2, 1);
    RngState rng(5);
    init_params(p, rng);
    CheckpointMeta meta;
    meta.task = "forecast";
    save_checkpoint(q(ck), p, meta);

    const auto rep = scratch_dir() / "bench.json";
    auto r = run_cli("bench-online --set checkpoint=" + q(ck) +
                     " --set steps=800 --set predict_every=5 --set report=" + q(rep));
    REQUIRE(r.code == 0);

    const auto doc = nlohmann::json::parse(slurp(rep));
    CHECK(doc.at("format") == "gruwe-bench");
    CHECK(doc.at("steps") == 800);
    CHECK(doc.at("update_deciles").size() == 10);
    CHECK(doc.at("predict_deciles").size() == 10);
    const auto bytes = doc.at("state_bytes").get<std::vector<std::size_t>>();
    REQUIRE(bytes.size() == 10);
    for (auto v : bytes) CHECK(v == bytes.front());
    CHECK(doc.at("param_checksum").get<std::uint64_t>() != 0);
}

// command-line entry point. exit codes are the contract scripts build on:
//   0 success | 2 configuration | 3 data | 4 training/numerical | 5 internal

#include <cstdio>
#include <functional>

#include <CLI11.hpp>

#include "cli_commands.hpp"

namespace {

struct Command {
    const char* name;
    const char* blurb;
    const std::vector<gruwe::cli::KeyDoc>& keys;
    int (*run)(const gruwe::cli::ConfigMap&);
};

} // namespace

int main(int argc, char** argv) {
    using namespace gruwe;

    CLI::App app{"gruwe - continuous-time recurrent model for irregularly sampled "
                 "sequences: forecasting and event-stream prediction"};
    app.require_subcommand(1);

    const Command commands[] = {
        {"train", "fit a model and write a checkpoint plus a report", cli::train_keys(),
         &cli::cmd_train},
        {"eval", "score a checkpoint on a held-out split", cli::eval_keys(), &cli::cmd_eval},
        {"predict", "decode future values at chosen horizons", cli::predict_keys(),
         &cli::cmd_predict},
        {"synth", "generate synthetic datasets with oracle sidecars", cli::synth_keys(),
         &cli::cmd_synth},
        {"inspect", "print a checkpoint's per-unit decay regime table", cli::inspect_keys(),
         &cli::cmd_inspect},
        {"bench-online", "measure streaming update/predict latency and state size",
         cli::bench_keys(), &cli::cmd_bench_online},
    };

    std::string config_path;
    std::vector<std::string> sets;
    const Command* chosen = nullptr;

    for (const Command& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.blurb);
        sub->add_option("--config", config_path, "JSON config file (single flat object)");
        sub->add_option("--set", sets, "override one key, e.g. --set lr=0.01")
            ->take_all();
        sub->footer(cli::describe_keys(c.keys));
        sub->callback([&chosen, &c]() { chosen = &c; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints help or the parse diagnostic
        return code == 0 ? 0 : 2;     // bad flags are configuration errors
    }

    try {
        const auto cfg = cli::ConfigMap::load(config_path, sets, chosen->keys);
        return chosen->run(cfg);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error (config): %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error (data): %s\n", e.what());
        return 3;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "error (training): %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error (internal): %s\n", e.what());
        return 5;
    }
}

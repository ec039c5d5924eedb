#pragma once

// the six subcommands. each takes the merged configuration and returns the
// process exit code (0 on success); categorized failures are thrown as the
// library's error types and mapped to exit codes by main.

#include "cli_config.hpp"

namespace gruwe::cli {

// key registries consumed by ConfigMap::load and rendered into --help
const std::vector<KeyDoc>& train_keys();
const std::vector<KeyDoc>& eval_keys();
const std::vector<KeyDoc>& predict_keys();
const std::vector<KeyDoc>& synth_keys();
const std::vector<KeyDoc>& inspect_keys();
const std::vector<KeyDoc>& bench_keys();

int cmd_train(const ConfigMap& cfg);
int cmd_eval(const ConfigMap& cfg);
int cmd_predict(const ConfigMap& cfg);
int cmd_synth(const ConfigMap& cfg);
int cmd_inspect(const ConfigMap& cfg);
int cmd_bench_online(const ConfigMap& cfg);

} // namespace gruwe::cli

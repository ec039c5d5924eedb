#pragma once

// flat key/value configuration shared by every command: a single JSON object
// loaded from --config, then overridden key-by-key with --set. each command
// declares the keys it understands; anything else is rejected up front so a
// typo cannot silently fall back to a default.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gruwe/errors.hpp"

namespace gruwe::cli {

struct KeyDoc {
    const char* name;
    const char* summary; // one line, shown by --help
};

class ConfigMap {
  public:
    // path may be empty (defaults + overrides only). sets are raw
    // "key=value" strings; values parse as JSON where possible and fall back
    // to plain strings (so --set task=forecast and --set lr=0.01 both work).
    static ConfigMap load(const std::string& path, const std::vector<std::string>& sets,
                          const std::vector<KeyDoc>& allowed);

    bool has(const std::string& key) const { return values_.contains(key); }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const;

  private:
    nlohmann::json values_ = nlohmann::json::object();
};

// renders the key table for a command's --help text
std::string describe_keys(const std::vector<KeyDoc>& keys);

} // namespace gruwe::cli

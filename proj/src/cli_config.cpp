#include "cli_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace gruwe::cli {

using json = nlohmann::json;

namespace {

bool known(const std::vector<KeyDoc>& allowed, const std::string& key) {
    return std::any_of(allowed.begin(), allowed.end(),
                       [&](const KeyDoc& k) { return key == k.name; });
}

[[noreturn]] void wrong_type(const std::string& key, const char* expected) {
    throw ConfigError("config key '" + key + "' must be " + expected);
}

} // namespace

ConfigMap ConfigMap::load(const std::string& path, const std::vector<std::string>& sets,
                          const std::vector<KeyDoc>& allowed) {
    ConfigMap cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
        }
        if (!doc.is_object())
            throw ConfigError("config file " + path + " must hold a single JSON object");
        cfg.values_ = std::move(doc);
    }

    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string raw = kv.substr(eq + 1);
        json value = json::parse(raw, nullptr, false); // no exceptions
        if (value.is_discarded()) value = raw;         // plain string fallback
        cfg.values_[key] = std::move(value);
    }

    for (const auto& [key, value] : cfg.values_.items()) {
        (void)value;
        if (!known(allowed, key))
            throw ConfigError("unknown config key '" + key + "' for this command");
    }
    return cfg;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    if (!values_.contains(key)) return fallback;
    const auto& v = values_.at(key);
    if (!v.is_string()) wrong_type(key, "a string");
    return v.get<std::string>();
}

std::string ConfigMap::require_string(const std::string& key) const {
    if (!values_.contains(key))
        throw ConfigError("missing required config key '" + key + "'");
    return get_string(key, "");
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    if (!values_.contains(key)) return fallback;
    const auto& v = values_.at(key);
    if (!v.is_number()) wrong_type(key, "a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) wrong_type(key, "a finite number");
    return d;
}

std::size_t ConfigMap::get_size(const std::string& key, std::size_t fallback) const {
    if (!values_.contains(key)) return fallback;
    const auto& v = values_.at(key);
    // json stores every non-negative integer as unsigned, so anything signed
    // here is a negative literal
    if (!v.is_number_unsigned()) wrong_type(key, "a non-negative integer");
    return v.get<std::size_t>();
}

std::uint64_t ConfigMap::get_seed(const std::string& key, std::uint64_t fallback) const {
    if (!values_.contains(key)) return fallback;
    const auto& v = values_.at(key);
    if (!v.is_number_unsigned()) wrong_type(key, "a non-negative integer");
    return v.get<std::uint64_t>();
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    if (!values_.contains(key)) return fallback;
    const auto& v = values_.at(key);
    if (!v.is_boolean()) wrong_type(key, "true or false");
    return v.get<bool>();
}

std::vector<double> ConfigMap::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) const {
    if (!values_.contains(key)) return fallback;
    const auto& v = values_.at(key);
    if (!v.is_array()) wrong_type(key, "an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) wrong_type(key, "an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::string describe_keys(const std::vector<KeyDoc>& keys) {
    std::string out = "Config keys (set in --config JSON or via --set key=value):\n";
    for (const auto& k : keys) {
        out += "  ";
        out += k.name;
        const std::size_t pad = std::string(k.name).size() < 22
                                    ? 22 - std::string(k.name).size()
                                    : 1;
        out.append(pad, ' ');
        out += k.summary;
        out += "\n";
    }
    return out;
}

} // namespace gruwe::cli

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "covbalance/run_config.hpp"

namespace covbalance {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: '" + value + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a non-negative integer: '" + value + "'");
    }
}

inline long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not an integer: '" + value + "'");
    }
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_double(key, trim(item)));
    }
    if (out.empty()) {
        throw ConfigError(key + ": empty list");
    }
    return out;
}

inline DecaySpec parse_decay(const std::string& key, const std::string& value) {
    if (value == "full") return DecaySpec::full_history();
    const double f = parse_double(key, value);
    if (!(f > 1.0)) {
        throw ConfigError(key + ": fixed factor must be > 1 (or 'full')");
    }
    return DecaySpec::fixed_factor(f);
}

}  // namespace detail

/// Parses the flat sectioned key-value format:
///
///   [problem]
///   kind = quadratic_shared
///   losses = 2
///   [strategy]
///   kind = cov
///   decay = full
///
/// Sections [problem], [strategy], [optimizer], [run]; '#' starts a comment.
/// Unknown sections or keys are errors naming the offender.
inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(line_no));
            }
            section = line.substr(1, line.size() - 2);
            if (section != "problem" && section != "strategy" && section != "optimizer" &&
                section != "run") {
                throw ConfigError("config: unknown section '[" + section + "]' at line " +
                                  std::to_string(line_no));
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected key = value at line " + std::to_string(line_no));
        }
        if (section.empty()) {
            throw ConfigError("config: key before any section at line " +
                              std::to_string(line_no));
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string full = section + "." + key;

        if (section == "problem") {
            if (key == "kind") cfg.problem.kind = value;
            else if (key == "losses") cfg.problem.losses = detail::parse_u64(full, value);
            else if (key == "dim") cfg.problem.dim = detail::parse_u64(full, value);
            else if (key == "noise") cfg.problem.noise = detail::parse_double(full, value);
            else if (key == "gen_seed") cfg.problem.gen_seed = detail::parse_u64(full, value);
            else if (key == "trend") cfg.problem.trend = detail::parse_double(full, value);
            else if (key == "scales") cfg.problem.scales = detail::parse_u64(full, value);
            else if (key == "sides") cfg.problem.sides = detail::parse_u64(full, value);
            else if (key == "designated") cfg.problem.designated = detail::parse_long(full, value);
            else if (key == "base") cfg.problem.base = value;
            else if (key == "target") cfg.problem.target = value;
            else if (key == "width") cfg.problem.width = detail::parse_u64(full, value);
            else if (key == "height") cfg.problem.height = detail::parse_u64(full, value);
            else throw ConfigError(full + ": unknown key");
        } else if (section == "strategy") {
            if (key == "kind") cfg.strategy.kind = value;
            else if (key == "variant") cfg.strategy.variant = parse_variant(value);
            else if (key == "decay") cfg.strategy.decay = detail::parse_decay(full, value);
            else if (key == "temperature") {
                cfg.strategy.temperature = detail::parse_double(full, value);
            } else if (key == "weights") {
                cfg.strategy.fixed_weights = detail::parse_double_list(full, value);
            } else {
                throw ConfigError(full + ": unknown key");
            }
        } else if (section == "optimizer") {
            if (key == "kind") cfg.optimizer.kind = value;
            else if (key == "lr") cfg.optimizer.lr = detail::parse_double(full, value);
            else if (key == "momentum") cfg.optimizer.momentum = detail::parse_double(full, value);
            else if (key == "beta1") cfg.optimizer.beta1 = detail::parse_double(full, value);
            else if (key == "beta2") cfg.optimizer.beta2 = detail::parse_double(full, value);
            else if (key == "epsilon") cfg.optimizer.epsilon = detail::parse_double(full, value);
            else throw ConfigError(full + ": unknown key");
        } else {
            if (key == "iterations") cfg.iterations = detail::parse_u64(full, value);
            else if (key == "seed") cfg.seed = detail::parse_u64(full, value);
            else if (key == "record_every") cfg.record_every = detail::parse_u64(full, value);
            else if (key == "experiment") cfg.experiment = value;
            else throw ConfigError(full + ": unknown key");
        }
    }
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

}  // namespace covbalance

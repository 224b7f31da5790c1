#include "factgraph/config.hpp"

#include "factgraph/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace factgraph {

namespace {

int parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int parsed = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not an integer: '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double parsed = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
    }
}

std::string unquote(std::string value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        return value.substr(1, value.size() - 2);
    }
    return value;
}

// Environment variables are FACTGRAPH_ + the upper-cased config key; only
// connection settings come from the environment, never run parameters.
const std::vector<std::string> kEnvKeys = {
    "llm_endpoint",    "llm_model",      "llm_api_key",    "search_endpoint",
    "search_api_key",  "search_fixtures", "templates_dir",
};

}  // namespace

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "mode",          "budget",         "max_inflight",    "node_timeout_s",
        "strategy",      "top_k",          "max_plan_nodes",  "llm_endpoint",
        "llm_model",     "llm_api_key",    "search_endpoint", "search_api_key",
        "search_fixtures", "templates_dir", "corpus",          "script",
        "out",
    };
    return keys;
}

KeyValues parse_config_text(const std::string& text) {
    const std::vector<std::string>& known = known_config_keys();
    KeyValues values;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = unquote(trim(stripped.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                              key + "'");
        }
        values[key] = value;
    }
    return values;
}

KeyValues load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

KeyValues environment_overrides() {
    KeyValues values;
    for (const std::string& key : kEnvKeys) {
        std::string var = "FACTGRAPH_" + to_upper(key);
        const char* raw = std::getenv(var.c_str());
        if (raw != nullptr && raw[0] != '\0') values[key] = raw;
    }
    return values;
}

CliConfig resolve_config(const KeyValues& file, const KeyValues& env, const KeyValues& flags) {
    const std::vector<std::string>& known = known_config_keys();
    KeyValues merged;
    for (const KeyValues* layer : {&file, &env, &flags}) {
        for (const auto& [key, value] : *layer) {
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw ConfigError("unknown config key '" + key + "'");
            }
            merged[key] = value;
        }
    }

    CliConfig config;
    auto get = [&](const char* key) -> const std::string* {
        auto it = merged.find(key);
        return it == merged.end() ? nullptr : &it->second;
    };

    if (const std::string* v = get("mode")) {
        auto mode = graph_mode_from_string(to_upper(*v));
        if (!mode) throw ConfigError("config key 'mode': expected static or dynamic, got '" +
                                     *v + "'");
        config.run.mode = *mode;
    }
    const bool dynamic = config.run.mode == GraphMode::DYNAMIC;
    config.run.budget = dynamic ? 3 : 0;
    config.run.strategy = dynamic ? SearchStrategy::WEB : SearchStrategy::WIKI;

    if (const std::string* v = get("budget")) config.run.budget = parse_int("budget", *v);
    if (const std::string* v = get("strategy")) {
        auto strategy = search_strategy_from_string(to_upper(*v));
        if (!strategy) {
            throw ConfigError("config key 'strategy': expected wiki or web, got '" + *v + "'");
        }
        config.run.strategy = *strategy;
    }
    if (const std::string* v = get("max_inflight")) {
        config.run.max_inflight = parse_int("max_inflight", *v);
    }
    if (const std::string* v = get("node_timeout_s")) {
        config.run.node_timeout_s = parse_double("node_timeout_s", *v);
    }
    if (const std::string* v = get("top_k")) config.run.top_k = parse_int("top_k", *v);
    if (const std::string* v = get("max_plan_nodes")) {
        config.run.max_plan_nodes = parse_int("max_plan_nodes", *v);
    }
    if (const std::string* v = get("llm_endpoint")) config.llm_endpoint = *v;
    if (const std::string* v = get("llm_model")) config.llm_model = *v;
    if (const std::string* v = get("llm_api_key")) config.llm_api_key = *v;
    if (const std::string* v = get("search_endpoint")) config.search_endpoint = *v;
    if (const std::string* v = get("search_api_key")) config.search_api_key = *v;
    if (const std::string* v = get("search_fixtures")) config.search_fixtures = *v;
    if (const std::string* v = get("templates_dir")) config.templates_dir = *v;
    if (const std::string* v = get("corpus")) config.corpus_path = *v;
    if (const std::string* v = get("script")) config.script_path = *v;
    if (const std::string* v = get("out")) config.out_dir = *v;

    try {
        check_config(config.run);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return config;
}

}  // namespace factgraph

#pragma once

#include "factgraph/errors.hpp"
#include "factgraph/executor.hpp"

#include <map>
#include <string>
#include <vector>

namespace factgraph {

class ConfigError : public Error {
public:
    using Error::Error;
};

using KeyValues = std::map<std::string, std::string>;

/// Keys accepted in config files, FACTGRAPH_* environment variables, and as
/// CLI flags. Anything else is rejected.
const std::vector<std::string>& known_config_keys();

/// Parses a flat `key = value` file: one pair per line, `#` comments, blank
/// lines, optional double quotes around the value. Unknown keys and malformed
/// lines throw ConfigError with the line number.
KeyValues parse_config_text(const std::string& text);
KeyValues load_config_file(const std::string& path);

/// FACTGRAPH_<KEY> environment variables mapped back to config keys.
KeyValues environment_overrides();

struct CliConfig {
    RunConfig run;
    std::string llm_endpoint;
    std::string llm_model = "default";
    std::string llm_api_key;
    std::string search_endpoint;
    std::string search_api_key;
    std::string search_fixtures;
    std::string templates_dir;
    std::string corpus_path;
    std::string script_path;
    std::string out_dir;
};

/// Layered resolution, highest precedence last in the argument list is NOT
/// the rule here: flags beat env, env beats file, file beats defaults.
/// Mode-coupled defaults apply only when the key was never set: STATIC gets
/// budget 0 and WIKI retrieval, DYNAMIC gets budget 3 and WEB retrieval.
/// Throws ConfigError on unknown keys or unparseable values.
CliConfig resolve_config(const KeyValues& file, const KeyValues& env, const KeyValues& flags);

}  // namespace factgraph

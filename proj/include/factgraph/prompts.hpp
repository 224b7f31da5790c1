#pragma once

#include "factgraph/errors.hpp"

#include <map>
#include <string>
#include <vector>

namespace factgraph {

/// Replaces {key} placeholders with values from `vars`. Brace sequences that
/// do not name a provided key are copied through untouched, so JSON examples
/// can live inside templates.
std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& vars);

/// Named prompt templates. Compiled-in defaults are byte-identical to the
/// files shipped under templates/; a directory can override any of them.
class TemplateStore {
public:
    static TemplateStore builtin();
    /// Loads every *.txt in `dir` (stem = template name) on top of the
    /// builtin set. Throws Error when the directory cannot be read.
    static TemplateStore from_dir(const std::string& dir);

    const std::string& raw(const std::string& name) const;  // throws Error on unknown name
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& vars) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, std::string> templates_;
};

}  // namespace factgraph

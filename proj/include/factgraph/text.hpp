#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace factgraph {

/// Lowercase, split on non-alphanumeric bytes, drop empties.
/// This is the one tokenizer used by the corpus index; no stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string trim(std::string_view s);

/// Collapse whitespace runs to single spaces and lowercase; used as the
/// normalized half of the evidence dedupe key.
std::string normalize_ws(std::string_view s);

/// Trim and strip one pair of symmetric wrapping quotes, for single-line
/// model outputs (search queries, refined queries).
std::string clean_line_output(std::string_view s);

/// Extract the first complete JSON value of the requested opening bracket
/// ('[' or '{') from free-form text, skipping code fences and prose.
/// Returns the raw JSON substring, or nullopt if none parses.
std::optional<std::string> extract_first_json(std::string_view text, char open);

}  // namespace factgraph

#include "factgraph/text.hpp"

#include <nlohmann/json.hpp>

#include <cctype>

namespace factgraph {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // leading whitespace dropped
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out.push_back(' ');
            in_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    return out;
}

std::string clean_line_output(std::string_view s) {
    std::string t = trim(s);
    if (t.size() >= 2) {
        char a = t.front();
        char b = t.back();
        if ((a == '"' && b == '"') || (a == '\'' && b == '\'')) {
            t = trim(std::string_view(t).substr(1, t.size() - 2));
        }
    }
    return t;
}

namespace {

// Finds the end index (one past) of a balanced JSON value starting at `start`,
// honoring string literals and escapes. Returns npos when unbalanced.
size_t match_bracket(std::string_view text, size_t start, char open, char close) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close) {
            --depth;
            if (depth == 0) return i + 1;
            if (depth < 0) return std::string_view::npos;
        }
    }
    return std::string_view::npos;
}

}  // namespace

std::optional<std::string> extract_first_json(std::string_view text, char open) {
    const char close = (open == '[') ? ']' : '}';
    for (size_t pos = text.find(open); pos != std::string_view::npos;
         pos = text.find(open, pos + 1)) {
        size_t end = match_bracket(text, pos, open, close);
        if (end == std::string_view::npos) continue;
        std::string candidate(text.substr(pos, end - pos));
        auto parsed = nlohmann::json::parse(candidate, nullptr, /*allow_exceptions=*/false);
        if (!parsed.is_discarded()) return candidate;
    }
    return std::nullopt;
}

}  // namespace factgraph

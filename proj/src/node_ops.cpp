#include "factgraph/node_ops.hpp"

#include "factgraph/text.hpp"

#include <sstream>

namespace factgraph {

std::string to_string(VerdictLabel label) {
    switch (label) {
        case VerdictLabel::SUPPORTS: return "SUPPORTS";
        case VerdictLabel::REFUTES: return "REFUTES";
        case VerdictLabel::UNCERTAIN: return "UNCERTAIN";
    }
    return "UNCERTAIN";
}

std::optional<VerdictLabel> verdict_label_from_string(const std::string& s) {
    std::string lower = to_lower(trim(s));
    if (lower == "supports") return VerdictLabel::SUPPORTS;
    if (lower == "refutes") return VerdictLabel::REFUTES;
    if (lower == "uncertain") return VerdictLabel::UNCERTAIN;
    return std::nullopt;
}

nlohmann::ordered_json verdict_to_json(const Verdict& v) {
    nlohmann::ordered_json j;
    j["label"] = to_string(v.label);
    j["explanation"] = v.explanation;
    j["forced"] = v.forced;
    return j;
}

Verdict verdict_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("verdict: expected a JSON object");
    Verdict v;
    auto label = verdict_label_from_string(j.value("label", std::string()));
    if (!label) throw Error("verdict: missing or unknown label");
    v.label = *label;
    v.explanation = j.value("explanation", std::string());
    v.forced = j.value("forced", false);
    return v;
}

namespace {

std::string first_line(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string cleaned = clean_line_output(line);
        if (!cleaned.empty()) return cleaned;
    }
    return "";
}

std::string claim_json(const std::string& claim) {
    return nlohmann::json(claim).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::map<std::string, std::string> base_vars(const NodeInput& input, const std::string& claim) {
    return {{"claim", claim},
            {"claim_json", claim_json(claim)},
            {"context", render_node_input(input)}};
}

constexpr const char* kReaskNote =
    "\n\nYour previous response was not the requested JSON object. Respond with exactly one "
    "JSON object in the specified format and no other text.";

}  // namespace

SearchExecution exec_search(const NodeInput& input, const std::string& claim, Gateway& gateway,
                            Retriever& retriever, const TemplateStore& templates, int k) {
    std::string prompt = templates.render("search_query", base_vars(input, claim));
    std::string response = gateway.call(make_request(GatewayRole::SEARCH_QUERY, prompt));
    SearchExecution result;
    result.query = first_line(response);
    if (result.query.empty()) result.query = input.original;

    result.raw_results = retriever.search(result.query, k);
    result.merged = merge_evidence({result.raw_results, input.parent_evidence});

    std::ostringstream summary;
    summary << result.query << " (" << result.raw_results.size() << " results";
    if (!result.raw_results.empty()) summary << ", top: " << result.raw_results.front().source;
    summary << ")";
    result.output = summary.str();
    return result;
}

std::string exec_refine(const NodeInput& input, const std::string& claim, Gateway& gateway,
                        const TemplateStore& templates) {
    if (input.parent_outputs.empty() && input.parent_evidence.empty()) {
        throw RefinePrecondition("refine: no parent context to disambiguate from");
    }
    std::string prompt = templates.render("refine", base_vars(input, claim));
    std::string response = gateway.call(make_request(GatewayRole::REFINE, prompt));
    std::string refined = first_line(response);
    if (refined.empty()) throw Error("refine: model returned an empty rewrite");
    return refined;
}

std::optional<ThinkOutcome> parse_think_response(const std::string& raw) {
    auto extracted = extract_first_json(raw, '{');
    if (!extracted) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(*extracted, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    if (!j.contains("sufficient") || !j["sufficient"].is_boolean()) return std::nullopt;
    ThinkOutcome outcome;
    outcome.sufficient = j["sufficient"].get<bool>();
    if (outcome.sufficient) {
        if (!j.contains("conclusion") || !j["conclusion"].is_string() ||
            j["conclusion"].get<std::string>().empty()) {
            return std::nullopt;
        }
        outcome.conclusion = j["conclusion"].get<std::string>();
    } else {
        if (!j.contains("missing") || !j["missing"].is_string() ||
            j["missing"].get<std::string>().empty()) {
            return std::nullopt;
        }
        outcome.missing = j["missing"].get<std::string>();
    }
    return outcome;
}

ThinkOutcome exec_think(const NodeInput& input, const std::string& claim, GraphMode mode,
                        Gateway& gateway, const TemplateStore& templates) {
    auto vars = base_vars(input, claim);
    vars["mode"] = to_string(mode);
    std::string prompt = templates.render("think", vars);
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string asked = attempt == 0 ? prompt : prompt + kReaskNote;
        std::string response = gateway.call(make_request(GatewayRole::THINK, asked));
        if (auto outcome = parse_think_response(response)) return *outcome;
    }
    ThinkOutcome fail_safe;
    fail_safe.sufficient = false;
    fail_safe.missing = "reasoning unparseable";
    return fail_safe;
}

std::optional<Verdict> parse_judge_response(const std::string& raw) {
    auto extracted = extract_first_json(raw, '{');
    if (!extracted) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(*extracted, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    if (!j.contains("label") || !j["label"].is_string()) return std::nullopt;
    auto label = verdict_label_from_string(j["label"].get<std::string>());
    if (!label) return std::nullopt;
    Verdict v;
    v.label = *label;
    v.explanation = j.value("explanation", std::string());
    return v;
}

Verdict exec_judge(const NodeInput& input, const std::string& claim, Gateway& gateway,
                   const TemplateStore& templates, bool forced) {
    std::string prompt =
        templates.render(forced ? "judge_forced" : "judge", base_vars(input, claim));
    std::optional<Verdict> parsed;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string asked = attempt == 0 ? prompt : prompt + kReaskNote;
        std::string response = gateway.call(make_request(GatewayRole::JUDGE, asked));
        parsed = parse_judge_response(response);
        if (!parsed) continue;
        if (forced && parsed->label == VerdictLabel::UNCERTAIN) continue;
        break;
    }
    Verdict verdict;
    verdict.forced = forced;
    if (parsed) {
        verdict.label = parsed->label;
        verdict.explanation = parsed->explanation;
        if (forced && verdict.label == VerdictLabel::UNCERTAIN) {
            verdict.label = VerdictLabel::REFUTES;
        }
    } else {
        verdict.label = forced ? VerdictLabel::REFUTES : VerdictLabel::UNCERTAIN;
        verdict.explanation = "verdict unparseable";
    }
    return verdict;
}

}  // namespace factgraph

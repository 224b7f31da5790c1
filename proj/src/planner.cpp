#include "factgraph/planner.hpp"

#include "factgraph/text.hpp"

#include <sstream>

namespace factgraph {

std::string to_string(PlanPurpose purpose) {
    return purpose == PlanPurpose::INITIAL ? "INITIAL" : "SUBTREE";
}

std::string to_string(PlanErrorKind kind) {
    switch (kind) {
        case PlanErrorKind::NOT_PARSEABLE: return "NOT_PARSEABLE";
        case PlanErrorKind::SCHEMA_VIOLATION: return "SCHEMA_VIOLATION";
        case PlanErrorKind::GRAPH_INVALID: return "GRAPH_INVALID";
    }
    return "NOT_PARSEABLE";
}

std::string plan_node_schema() {
    return R"({"id": "short unique id", "type": "SEARCH" | "REFINE" | "THINK" | "JUDGE", "input": "what this step does", "dependencies": ["ids this step needs"], "hint": "optional integration guidance"})";
}

namespace {

void check_request(const PlanRequest& request) {
    if (request.claim.empty()) throw Error("planner: claim must be non-empty");
    if (request.purpose == PlanPurpose::INITIAL) {
        if (request.failure_context) {
            throw Error("planner: INITIAL request must not carry failure context");
        }
        if (request.sink_type != NodeType::JUDGE) {
            throw Error("planner: INITIAL plans terminate in JUDGE");
        }
    } else if (!request.failure_context) {
        throw Error("planner: SUBTREE request requires failure context");
    }
}

}  // namespace

std::string build_plan_prompt(const PlanRequest& request, const TemplateStore& templates) {
    check_request(request);
    std::map<std::string, std::string> vars;
    vars["claim"] = request.claim;
    vars["claim_json"] = nlohmann::json(request.claim)
                             .dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    vars["schema"] = plan_node_schema();
    vars["max_nodes"] = std::to_string(request.max_nodes);
    vars["sink_type"] = to_string(request.sink_type);
    if (request.purpose == PlanPurpose::SUBTREE) {
        vars["failure_context"] =
            request.failure_context->rendered_input + "failure reason: " +
            request.failure_context->reason;
        return templates.render("plan_subtree", vars);
    }
    return templates.render("plan_initial", vars);
}

VerificationGraph parse_plan(const std::string& raw, const PlanRequest& request) {
    check_request(request);
    auto extracted = extract_first_json(raw, '[');
    if (!extracted) {
        throw PlanParseError(PlanErrorKind::NOT_PARSEABLE, "no JSON array in response");
    }
    nlohmann::json arr = nlohmann::json::parse(*extracted, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) {
        throw PlanParseError(PlanErrorKind::NOT_PARSEABLE, "extracted text is not a JSON array");
    }

    VerificationGraph g;
    g.claim = request.claim;
    g.mode = request.mode;
    g.modification_count = 0;
    for (size_t i = 0; i < arr.size(); ++i) {
        const auto& entry = arr[i];
        std::string where = "node " + std::to_string(i);
        if (!entry.is_object()) {
            throw PlanParseError(PlanErrorKind::SCHEMA_VIOLATION, where + " is not an object");
        }
        if (!entry.contains("id") || !entry["id"].is_string() ||
            entry["id"].get<std::string>().empty()) {
            throw PlanParseError(PlanErrorKind::SCHEMA_VIOLATION,
                                 where + " lacks a non-empty string id");
        }
        Node n;
        n.id = entry["id"].get<std::string>();
        if (!entry.contains("type") || !entry["type"].is_string()) {
            throw PlanParseError(PlanErrorKind::SCHEMA_VIOLATION, where + " lacks a type");
        }
        auto type = node_type_from_string(entry["type"].get<std::string>());
        if (!type) {
            throw PlanParseError(PlanErrorKind::SCHEMA_VIOLATION,
                                 where + " has unknown type '" +
                                     entry["type"].get<std::string>() + "'");
        }
        n.type = *type;
        if (!entry.contains("input") || !entry["input"].is_string() ||
            entry["input"].get<std::string>().empty()) {
            throw PlanParseError(PlanErrorKind::SCHEMA_VIOLATION,
                                 where + " lacks a non-empty string input");
        }
        n.input = entry["input"].get<std::string>();
        if (entry.contains("dependencies")) {
            if (!entry["dependencies"].is_array()) {
                throw PlanParseError(PlanErrorKind::SCHEMA_VIOLATION,
                                     where + " dependencies must be an array");
            }
            for (const auto& dep : entry["dependencies"]) {
                if (!dep.is_string()) {
                    throw PlanParseError(PlanErrorKind::SCHEMA_VIOLATION,
                                         where + " has a non-string dependency");
                }
                n.dependencies.push_back(dep.get<std::string>());
            }
        }
        if (entry.contains("hint")) {
            if (!entry["hint"].is_string()) {
                throw PlanParseError(PlanErrorKind::SCHEMA_VIOLATION,
                                     where + " hint must be a string");
            }
            n.hint = entry["hint"].get<std::string>();
        }
        n.status = NodeStatus::PENDING;
        g.nodes.push_back(std::move(n));
    }

    if (static_cast<int>(g.nodes.size()) > request.max_nodes) {
        throw PlanParseError(PlanErrorKind::GRAPH_INVALID,
                             "plan has " + std::to_string(g.nodes.size()) + " nodes, limit " +
                                 std::to_string(request.max_nodes));
    }
    if (request.purpose == PlanPurpose::INITIAL) {
        ValidationReport report = validate(g);
        if (!report.ok()) {
            throw PlanParseError(PlanErrorKind::GRAPH_INVALID, report.summary());
        }
    } else {
        ValidationReport report = validate_subgraph(g);
        if (!report.ok()) {
            throw PlanParseError(PlanErrorKind::GRAPH_INVALID, report.summary());
        }
        for (const Node& n : g.nodes) {
            if (children_of(g, n.id).empty() && n.type != request.sink_type) {
                throw PlanParseError(PlanErrorKind::GRAPH_INVALID,
                                     "terminal step '" + n.id + "' has type " +
                                         to_string(n.type) + ", required " +
                                         to_string(request.sink_type));
            }
        }
    }
    return g;
}

VerificationGraph fallback_plan(const PlanRequest& request) {
    check_request(request);
    VerificationGraph g;
    g.claim = request.claim;
    g.mode = request.mode;
    g.modification_count = 0;
    if (request.purpose == PlanPurpose::INITIAL) {
        Node search;
        search.id = "s1";
        search.type = NodeType::SEARCH;
        search.input = request.claim;
        Node judge;
        judge.id = "j1";
        judge.type = NodeType::JUDGE;
        judge.input = request.claim;
        judge.dependencies = {"s1"};
        g.nodes = {std::move(search), std::move(judge)};
    } else {
        std::string reason = request.failure_context->reason;
        if (reason.empty()) reason = request.claim;
        Node search;
        search.id = "f1";
        search.type = NodeType::SEARCH;
        search.input = reason;
        Node sink;
        sink.id = "f2";
        sink.type = request.sink_type;
        sink.input = request.sink_type == NodeType::JUDGE ? request.claim : reason;
        sink.dependencies = {"f1"};
        g.nodes = {std::move(search), std::move(sink)};
    }
    ValidationReport report = request.purpose == PlanPurpose::INITIAL ? validate(g)
                                                                      : validate_subgraph(g);
    if (!report.ok()) throw Error("planner: fallback plan invalid: " + report.summary());
    return g;
}

GeneratePlanResult generate_plan(const PlanRequest& request, Gateway& gateway,
                                 const TemplateStore& templates) {
    GeneratePlanResult result;
    std::string base_prompt = build_plan_prompt(request, templates);
    std::string prompt = base_prompt;
    std::string last_error;
    for (int attempt = 0; attempt < 3; ++attempt) {
        if (attempt > 0) {
            prompt = base_prompt + "\n\nYour previous response was rejected: " + last_error +
                     "\nRespond again with only the corrected JSON array.";
        }
        std::string response;
        try {
            response = gateway.call(make_request(GatewayRole::PLANNER, prompt));
        } catch (const GatewayError& e) {
            throw PlannerUnavailable(std::string("planner: gateway failure: ") + e.what());
        }
        ++result.gateway_calls;
        try {
            result.graph = parse_plan(response, request);
            return result;
        } catch (const PlanParseError& e) {
            last_error = e.what();
        }
    }
    result.graph = fallback_plan(request);
    result.used_fallback = true;
    return result;
}

}  // namespace factgraph

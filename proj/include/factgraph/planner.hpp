#pragma once

#include "factgraph/errors.hpp"
#include "factgraph/gateway.hpp"
#include "factgraph/graph.hpp"
#include "factgraph/prompts.hpp"

#include <optional>
#include <string>

namespace factgraph {

enum class PlanPurpose { INITIAL, SUBTREE };
std::string to_string(PlanPurpose purpose);

/// What was known when a node failed, handed to the planner so the
/// replacement sub-graph targets the actual gap.
struct PlanFailureContext {
    std::string rendered_input;  // render_node_input of the failed node
    std::string reason;          // missing-information text or error message
};

struct PlanRequest {
    std::string claim;
    PlanPurpose purpose = PlanPurpose::INITIAL;
    std::optional<PlanFailureContext> failure_context;  // present iff SUBTREE
    NodeType sink_type = NodeType::JUDGE;  // required terminal type (JUDGE for INITIAL)
    int max_nodes = 12;
    GraphMode mode = GraphMode::STATIC;  // stamped into the produced graph
};

enum class PlanErrorKind { NOT_PARSEABLE, SCHEMA_VIOLATION, GRAPH_INVALID };
std::string to_string(PlanErrorKind kind);

class PlanParseError : public Error {
public:
    PlanParseError(PlanErrorKind kind, std::string detail)
        : Error(to_string(kind) + ": " + detail), kind(kind), detail(std::move(detail)) {}
    PlanErrorKind kind;
    std::string detail;
};

/// The planner's gateway is unreachable; nothing can run without a plan.
class PlannerUnavailable : public Error {
public:
    using Error::Error;
};

/// The node-object schema embedded in planning prompts.
std::string plan_node_schema();

/// Renders the planning prompt for a request. Throws Error when the
/// failure-context presence does not match the purpose.
std::string build_plan_prompt(const PlanRequest& request, const TemplateStore& templates);

/// Extracts the first JSON array from `raw`, maps entries to PENDING nodes,
/// and validates the result (full graph rules for INITIAL, structural rules
/// plus sink-type match for SUBTREE). Throws PlanParseError.
VerificationGraph parse_plan(const std::string& raw, const PlanRequest& request);

/// The deterministic plan used when the model cannot produce a valid one:
/// SEARCH feeding a single sink of the required type.
VerificationGraph fallback_plan(const PlanRequest& request);

struct GeneratePlanResult {
    VerificationGraph graph;
    bool used_fallback = false;
    int gateway_calls = 0;
};

/// Prompts, parses, and repairs: one initial attempt plus up to two repair
/// prompts carrying the parse error, then the fallback plan. The returned
/// graph always validates. Throws PlannerUnavailable on gateway failure.
GeneratePlanResult generate_plan(const PlanRequest& request, Gateway& gateway,
                                 const TemplateStore& templates);

/// Seam for the executor: production planning goes through the gateway,
/// tests may substitute canned plans.
class PlannerIface {
public:
    virtual ~PlannerIface() = default;
    virtual GeneratePlanResult plan(const PlanRequest& request) = 0;
};

class LlmPlanner : public PlannerIface {
public:
    LlmPlanner(Gateway& gateway, TemplateStore templates)
        : gateway_(&gateway), templates_(std::move(templates)) {}
    GeneratePlanResult plan(const PlanRequest& request) override {
        return generate_plan(request, *gateway_, templates_);
    }

private:
    Gateway* gateway_;
    TemplateStore templates_;
};

}  // namespace factgraph

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factgraph/planner.hpp"
#include "support/builders.hpp"

#include <random>

using namespace factgraph;

namespace {

PlanRequest initial_request(const std::string& claim = "the sky is blue") {
    PlanRequest request;
    request.claim = claim;
    request.purpose = PlanPurpose::INITIAL;
    request.mode = GraphMode::STATIC;
    return request;
}

PlanRequest subtree_request(NodeType sink_type = NodeType::THINK) {
    PlanRequest request;
    request.claim = "the sky is blue";
    request.purpose = PlanPurpose::SUBTREE;
    request.failure_context = PlanFailureContext{"task: weigh evidence\n", "missing the year"};
    request.sink_type = sink_type;
    request.mode = GraphMode::DYNAMIC;
    return request;
}

const char* kGoodPlan = R"([
  {"id": "s1", "type": "SEARCH", "input": "look up the sky"},
  {"id": "t1", "type": "THINK", "input": "weigh it", "dependencies": ["s1"]},
  {"id": "j1", "type": "JUDGE", "input": "decide", "dependencies": ["t1"], "hint": "be strict"}
])";

}  // namespace

TEST_CASE("plan prompts embed the claim, schema, and limits") {
    TemplateStore templates = TemplateStore::builtin();
    std::string prompt = build_plan_prompt(initial_request("water boils at 100C"), templates);
    CHECK(prompt.find("water boils at 100C") != std::string::npos);
    CHECK(prompt.find(plan_node_schema()) != std::string::npos);
    CHECK(prompt.find("12") != std::string::npos);

    std::string subtree = build_plan_prompt(subtree_request(), templates);
    CHECK(subtree.find("task: weigh evidence") != std::string::npos);
    CHECK(subtree.find("failure reason: missing the year") != std::string::npos);
    CHECK(subtree.find("THINK") != std::string::npos);
}

TEST_CASE("plan requests are checked for internal consistency") {
    TemplateStore templates = TemplateStore::builtin();
    PlanRequest bad_initial = initial_request();
    bad_initial.failure_context = PlanFailureContext{"x", "y"};
    CHECK_THROWS_AS(build_plan_prompt(bad_initial, templates), Error);

    PlanRequest judge_required = initial_request();
    judge_required.sink_type = NodeType::THINK;
    CHECK_THROWS_AS(build_plan_prompt(judge_required, templates), Error);

    PlanRequest bare_subtree = subtree_request();
    bare_subtree.failure_context.reset();
    CHECK_THROWS_AS(build_plan_prompt(bare_subtree, templates), Error);

    CHECK_THROWS_AS(build_plan_prompt(initial_request(""), templates), Error);
}

TEST_CASE("parse_plan builds a PENDING graph from a JSON array") {
    VerificationGraph g = parse_plan(kGoodPlan, initial_request());
    REQUIRE(g.nodes.size() == 3);
    CHECK(g.claim == "the sky is blue");
    CHECK(g.mode == GraphMode::STATIC);
    CHECK(g.modification_count == 0);
    CHECK(g.at("j1").hint == "be strict");
    CHECK(g.at("t1").dependencies == std::vector<NodeId>{"s1"});
    for (const Node& n : g.nodes) CHECK(n.status == NodeStatus::PENDING);
    CHECK(validate(g).ok());
}

TEST_CASE("parse_plan digs the array out of prose and code fences") {
    std::string wrapped = "Here is the plan:\n```json\n" + std::string(kGoodPlan) +
                          "\n```\nLet me know if you need changes.";
    CHECK(parse_plan(wrapped, initial_request()).nodes.size() == 3);
}

TEST_CASE("parse_plan classifies failures") {
    const PlanRequest request = initial_request();
    auto kind_of = [&](const std::string& raw, const PlanRequest& req) {
        try {
            parse_plan(raw, req);
            return std::string("no error");
        } catch (const PlanParseError& e) {
            return to_string(e.kind);
        }
    };

    CHECK(kind_of("no brackets here", request) == "NOT_PARSEABLE");
    CHECK(kind_of("{\"id\": \"s1\"}", request) == "NOT_PARSEABLE");

    CHECK(kind_of("[1, 2]", request) == "SCHEMA_VIOLATION");
    CHECK(kind_of("[{\"type\": \"SEARCH\", \"input\": \"x\"}]", request) == "SCHEMA_VIOLATION");
    CHECK(kind_of("[{\"id\": \"a\", \"input\": \"x\"}]", request) == "SCHEMA_VIOLATION");
    CHECK(kind_of("[{\"id\": \"a\", \"type\": \"GUESS\", \"input\": \"x\"}]", request) ==
          "SCHEMA_VIOLATION");
    CHECK(kind_of("[{\"id\": \"a\", \"type\": \"JUDGE\"}]", request) == "SCHEMA_VIOLATION");
    CHECK(kind_of("[{\"id\": \"a\", \"type\": \"JUDGE\", \"input\": \"x\","
                  " \"dependencies\": [1]}]",
                  request) == "SCHEMA_VIOLATION");

    // structurally broken graphs
    CHECK(kind_of("[{\"id\": \"a\", \"type\": \"SEARCH\", \"input\": \"x\"}]", request) ==
          "GRAPH_INVALID");
    CHECK(kind_of("[{\"id\": \"a\", \"type\": \"JUDGE\", \"input\": \"x\","
                  " \"dependencies\": [\"ghost\"]}]",
                  request) == "GRAPH_INVALID");

    // schema errors name the offending entry
    try {
        parse_plan("[{\"id\": \"ok\", \"type\": \"SEARCH\", \"input\": \"x\"}, 5]", request);
        FAIL("expected PlanParseError");
    } catch (const PlanParseError& e) {
        CHECK(std::string(e.what()).find("node 1") != std::string::npos);
    }
}

TEST_CASE("parse_plan enforces the node budget") {
    PlanRequest request = initial_request();
    request.max_nodes = 2;
    CHECK_THROWS_AS(parse_plan(kGoodPlan, request), PlanParseError);
    try {
        parse_plan(kGoodPlan, request);
    } catch (const PlanParseError& e) {
        CHECK(e.kind == PlanErrorKind::GRAPH_INVALID);
    }
}

TEST_CASE("subtree plans must terminate in the required type") {
    const char* think_sink = R"([
      {"id": "f1", "type": "SEARCH", "input": "find the year"},
      {"id": "f2", "type": "THINK", "input": "recheck", "dependencies": ["f1"]}
    ])";
    VerificationGraph g = parse_plan(think_sink, subtree_request(NodeType::THINK));
    CHECK(g.nodes.size() == 2);
    CHECK(g.mode == GraphMode::DYNAMIC);

    try {
        parse_plan(think_sink, subtree_request(NodeType::SEARCH));
        FAIL("expected PlanParseError");
    } catch (const PlanParseError& e) {
        CHECK(e.kind == PlanErrorKind::GRAPH_INVALID);
        CHECK(std::string(e.what()).find("SEARCH") != std::string::npos);
    }

    // subtrees do not need a JUDGE, but they need exactly one sink
    const char* two_sinks = R"([
      {"id": "f1", "type": "THINK", "input": "a"},
      {"id": "f2", "type": "THINK", "input": "b"}
    ])";
    CHECK_THROWS_AS(parse_plan(two_sinks, subtree_request(NodeType::THINK)), PlanParseError);
}

TEST_CASE("fallback plans are minimal and always valid") {
    VerificationGraph g = fallback_plan(initial_request("claim text"));
    REQUIRE(g.nodes.size() == 2);
    CHECK(g.nodes[0].type == NodeType::SEARCH);
    CHECK(g.nodes[0].input == "claim text");
    CHECK(g.nodes[1].type == NodeType::JUDGE);
    CHECK(g.nodes[1].dependencies == std::vector<NodeId>{g.nodes[0].id});
    CHECK(validate(g).ok());

    VerificationGraph sub = fallback_plan(subtree_request(NodeType::THINK));
    REQUIRE(sub.nodes.size() == 2);
    CHECK(sub.nodes[0].type == NodeType::SEARCH);
    CHECK(sub.nodes[0].input == "missing the year");
    CHECK(sub.nodes[1].type == NodeType::THINK);
    CHECK(validate_subgraph(sub).ok());

    VerificationGraph judge_sub = fallback_plan(subtree_request(NodeType::JUDGE));
    CHECK(judge_sub.nodes[1].input == "the sky is blue");
}

TEST_CASE("generate_plan accepts a good first answer") {
    ScriptedBackend backend;
    backend.add_response(GatewayRole::PLANNER, kGoodPlan);
    Gateway gateway(backend);
    GeneratePlanResult result =
        generate_plan(initial_request(), gateway, TemplateStore::builtin());
    CHECK_FALSE(result.used_fallback);
    CHECK(result.gateway_calls == 1);
    CHECK(result.graph.nodes.size() == 3);
}

TEST_CASE("generate_plan repairs with the parse error in the prompt") {
    ScriptedBackend backend;
    backend.add_response(GatewayRole::PLANNER, "garbage");
    backend.add_response(GatewayRole::PLANNER, kGoodPlan);
    Gateway gateway(backend);
    GeneratePlanResult result =
        generate_plan(initial_request(), gateway, TemplateStore::builtin());
    CHECK_FALSE(result.used_fallback);
    CHECK(result.gateway_calls == 2);

    auto records = gateway.transcript().records();
    REQUIRE(records.size() == 2);
    CHECK(records[1].prompt.find("previous response was rejected") != std::string::npos);
    CHECK(records[1].prompt.find("NOT_PARSEABLE") != std::string::npos);
}

TEST_CASE("generate_plan falls back after three bad answers") {
    ScriptedBackend backend;
    backend.add_response(GatewayRole::PLANNER, "bad one");
    backend.add_response(GatewayRole::PLANNER, "[{\"id\": \"x\"}]");
    backend.add_response(GatewayRole::PLANNER, "[]");
    Gateway gateway(backend);
    GeneratePlanResult result =
        generate_plan(initial_request(), gateway, TemplateStore::builtin());
    CHECK(result.used_fallback);
    CHECK(result.gateway_calls == 3);
    CHECK(validate(result.graph).ok());
    CHECK(backend.remaining() == 0);
}

TEST_CASE("generate_plan surfaces gateway failures as PlannerUnavailable") {
    ScriptedBackend backend;  // empty script: the first call already misses
    Gateway gateway(backend);
    CHECK_THROWS_AS(generate_plan(initial_request(), gateway, TemplateStore::builtin()),
                    PlannerUnavailable);
}

TEST_CASE("generate_plan never yields an invalid graph under fuzzed responses") {
    std::mt19937 rng(4242);
    TemplateStore templates = TemplateStore::builtin();
    for (int round = 0; round < 100; ++round) {
        ScriptedBackend backend;
        for (int i = 0; i < 3; ++i) {
            const int len = std::uniform_int_distribution<int>(0, 120)(rng);
            std::string noise;
            for (int c = 0; c < len; ++c) {
                noise.push_back(static_cast<char>(
                    std::uniform_int_distribution<int>(1, 255)(rng)));
            }
            backend.add_response(GatewayRole::PLANNER, noise);
        }
        Gateway gateway(backend);
        GeneratePlanResult result = generate_plan(initial_request(), gateway, templates);
        CHECK(result.gateway_calls <= 3);
        CHECK(validate(result.graph).ok());
    }
}

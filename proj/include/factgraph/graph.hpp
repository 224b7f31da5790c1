#pragma once

#include "factgraph/errors.hpp"
#include "factgraph/evidence.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace factgraph {

using NodeId = std::string;

enum class NodeType { SEARCH, REFINE, THINK, JUDGE };
enum class NodeStatus { PENDING, READY, RUNNING, DONE, FAILED, SKIPPED };
enum class GraphMode { STATIC, DYNAMIC };

std::string to_string(NodeType type);
std::string to_string(NodeStatus status);
std::string to_string(GraphMode mode);
std::optional<NodeType> node_type_from_string(const std::string& s);
std::optional<NodeStatus> node_status_from_string(const std::string& s);
std::optional<GraphMode> graph_mode_from_string(const std::string& s);

/// One verification action. `output` is non-empty iff status is DONE;
/// `evidence` accumulates everything the node has seen or retrieved.
struct Node {
    NodeId id;
    NodeType type = NodeType::SEARCH;
    std::string input;  // the instruction the node executes
    std::string hint;   // integration / strategy context, may be empty
    std::vector<NodeId> dependencies;
    NodeStatus status = NodeStatus::PENDING;
    std::string output;
    EvidenceSet evidence;
};

class UnknownNode : public Error {
public:
    using Error::Error;
};
class NotReady : public Error {
public:
    using Error::Error;
};
class BudgetExhausted : public Error {
public:
    using Error::Error;
};
class GraftRejected : public Error {
public:
    using Error::Error;
};
class IllegalTransition : public Error {
public:
    using Error::Error;
};

/// Legal transitions: PENDING->READY->RUNNING->{DONE|FAILED};
/// PENDING->SKIPPED; SKIPPED->PENDING (graft re-wiring only);
/// FAILED->READY (forced terminal-JUDGE re-run only).
bool transition_legal(NodeStatus from, NodeStatus to);

/// Applies a transition, throwing IllegalTransition when the pair is not legal.
void set_node_status(Node& node, NodeStatus to);

/// The dependency DAG for one claim. Nodes keep insertion order; everything
/// about edges is derived from the per-node dependency lists.
struct VerificationGraph {
    std::string claim;
    GraphMode mode = GraphMode::STATIC;
    int modification_count = 0;
    std::vector<Node> nodes;

    Node* find(const NodeId& id);
    const Node* find(const NodeId& id) const;
    bool contains(const NodeId& id) const { return find(id) != nullptr; }
    Node& at(const NodeId& id);              // throws UnknownNode
    const Node& at(const NodeId& id) const;  // throws UnknownNode
};

struct Violation {
    NodeId node_id;  // offending node, empty for graph-level violations
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

/// Full validity: unique non-empty ids, resolved deps, acyclic, at most one
/// REFINE parent per node, output non-empty iff DONE, duplicate-free evidence,
/// and exactly one JUDGE sink among non-FAILED nodes (the terminal verdict).
ValidationReport validate(const VerificationGraph& graph);

/// Structural validity for a graft candidate: same rules minus the terminal
/// JUDGE requirement, plus "exactly one sink node".
ValidationReport validate_subgraph(const VerificationGraph& sub);

/// PENDING nodes whose dependencies are all DONE, in insertion order.
std::vector<NodeId> ready_frontier(const VerificationGraph& graph);

/// Direct children (nodes listing `id` as a dependency), insertion order.
std::vector<NodeId> children_of(const VerificationGraph& graph, const NodeId& id);

/// Transitive closure over child edges, excluding `id` itself.
std::set<NodeId> descendants(const VerificationGraph& graph, const NodeId& id);

/// The single non-FAILED JUDGE sink, if the graph has one.
std::optional<NodeId> terminal_judge(const VerificationGraph& graph);

/// Everything a node sees when it executes.
struct NodeInput {
    std::string original;  // own input, or the REFINE parent's output verbatim
    std::vector<std::pair<NodeId, std::string>> parent_outputs;  // dependency order
    EvidenceSet parent_evidence;                                 // deduplicated
    std::string hint;
};

/// Assembles a node's execution input. Requires every dependency DONE.
NodeInput assemble_input(const VerificationGraph& graph, const NodeId& id);

/// Lenient variant used for failure context: collects whatever DONE parents
/// exist and never throws NotReady.
NodeInput assemble_context(const VerificationGraph& graph, const NodeId& id);

/// Deterministic text rendering of a NodeInput, used in prompts and in the
/// context block a graft writes into subtree roots.
std::string render_node_input(const NodeInput& input);

/// Integrates a replacement sub-graph at a FAILED node. Sub ids are
/// namespaced "m<round>/", subtree roots receive the failed node's context
/// (hint block + accumulated evidence), the failed node's outgoing edges are
/// rewired to the sub's sink, SKIPPED descendants return to PENDING, and the
/// modification count is incremented. The input graph is left untouched.
VerificationGraph graft(const VerificationGraph& graph, const NodeId& failed,
                        const VerificationGraph& sub, int budget);

std::map<NodeType, int> count_nodes_by_type(const VerificationGraph& graph);

nlohmann::ordered_json graph_to_json(const VerificationGraph& graph);
std::string graph_to_string(const VerificationGraph& graph);  // canonical form
VerificationGraph graph_from_json(const nlohmann::json& j);
VerificationGraph graph_from_string(const std::string& text);

/// Frontier membership maintained incrementally: per-node unmet-dependency
/// counters updated as nodes finish, rebuilt after structural changes.
class IncrementalFrontier {
public:
    IncrementalFrontier() = default;
    explicit IncrementalFrontier(const VerificationGraph& graph) { rebuild(graph); }

    void rebuild(const VerificationGraph& graph);
    /// Call once right after `id` transitions to DONE.
    void on_done(const VerificationGraph& graph, const NodeId& id);
    std::vector<NodeId> ready(const VerificationGraph& graph) const;

private:
    std::unordered_map<NodeId, int> unmet_;
};

}  // namespace factgraph

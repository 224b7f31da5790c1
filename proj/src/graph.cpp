#include "factgraph/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_set>

namespace factgraph {

std::string to_string(NodeType type) {
    switch (type) {
        case NodeType::SEARCH: return "SEARCH";
        case NodeType::REFINE: return "REFINE";
        case NodeType::THINK: return "THINK";
        case NodeType::JUDGE: return "JUDGE";
    }
    return "SEARCH";
}

std::string to_string(NodeStatus status) {
    switch (status) {
        case NodeStatus::PENDING: return "PENDING";
        case NodeStatus::READY: return "READY";
        case NodeStatus::RUNNING: return "RUNNING";
        case NodeStatus::DONE: return "DONE";
        case NodeStatus::FAILED: return "FAILED";
        case NodeStatus::SKIPPED: return "SKIPPED";
    }
    return "PENDING";
}

std::string to_string(GraphMode mode) {
    return mode == GraphMode::STATIC ? "STATIC" : "DYNAMIC";
}

std::optional<NodeType> node_type_from_string(const std::string& s) {
    if (s == "SEARCH") return NodeType::SEARCH;
    if (s == "REFINE") return NodeType::REFINE;
    if (s == "THINK") return NodeType::THINK;
    if (s == "JUDGE") return NodeType::JUDGE;
    return std::nullopt;
}

std::optional<NodeStatus> node_status_from_string(const std::string& s) {
    if (s == "PENDING") return NodeStatus::PENDING;
    if (s == "READY") return NodeStatus::READY;
    if (s == "RUNNING") return NodeStatus::RUNNING;
    if (s == "DONE") return NodeStatus::DONE;
    if (s == "FAILED") return NodeStatus::FAILED;
    if (s == "SKIPPED") return NodeStatus::SKIPPED;
    return std::nullopt;
}

std::optional<GraphMode> graph_mode_from_string(const std::string& s) {
    if (s == "STATIC") return GraphMode::STATIC;
    if (s == "DYNAMIC") return GraphMode::DYNAMIC;
    return std::nullopt;
}

bool transition_legal(NodeStatus from, NodeStatus to) {
    switch (from) {
        case NodeStatus::PENDING:
            return to == NodeStatus::READY || to == NodeStatus::SKIPPED;
        case NodeStatus::READY:
            return to == NodeStatus::RUNNING;
        case NodeStatus::RUNNING:
            return to == NodeStatus::DONE || to == NodeStatus::FAILED;
        case NodeStatus::SKIPPED:
            return to == NodeStatus::PENDING;
        case NodeStatus::FAILED:
            return to == NodeStatus::READY;
        case NodeStatus::DONE:
            return false;
    }
    return false;
}

void set_node_status(Node& node, NodeStatus to) {
    if (!transition_legal(node.status, to)) {
        throw IllegalTransition("illegal status transition for node '" + node.id + "': " +
                                to_string(node.status) + " -> " + to_string(to));
    }
    node.status = to;
}

Node* VerificationGraph::find(const NodeId& id) {
    for (Node& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

const Node* VerificationGraph::find(const NodeId& id) const {
    for (const Node& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

Node& VerificationGraph::at(const NodeId& id) {
    Node* n = find(id);
    if (!n) throw UnknownNode("unknown node '" + id + "'");
    return *n;
}

const Node& VerificationGraph::at(const NodeId& id) const {
    const Node* n = find(id);
    if (!n) throw UnknownNode("unknown node '" + id + "'");
    return *n;
}

std::string ValidationReport::summary() const {
    std::ostringstream out;
    for (size_t i = 0; i < violations.size(); ++i) {
        if (i > 0) out << "; ";
        if (!violations[i].node_id.empty()) out << "node '" << violations[i].node_id << "': ";
        out << violations[i].message;
    }
    return out.str();
}

namespace {

// Id/dependency/shape checks shared by both validation entry points.
// Returns false when ids or edges are too broken for the cycle check to
// be meaningful.
bool structural_checks(const VerificationGraph& graph, ValidationReport& report) {
    bool edges_usable = true;
    std::unordered_set<std::string> seen;
    for (const Node& n : graph.nodes) {
        if (n.id.empty()) {
            report.violations.push_back({n.id, "empty node id"});
            edges_usable = false;
        }
        if (!seen.insert(n.id).second) {
            report.violations.push_back({n.id, "duplicate node id"});
            edges_usable = false;
        }
    }
    for (const Node& n : graph.nodes) {
        std::unordered_set<std::string> dep_seen;
        int refine_parents = 0;
        for (const NodeId& dep : n.dependencies) {
            if (!dep_seen.insert(dep).second) {
                report.violations.push_back({n.id, "duplicate dependency '" + dep + "'"});
            }
            if (dep == n.id) {
                report.violations.push_back({n.id, "depends on itself"});
                edges_usable = false;
                continue;
            }
            const Node* parent = graph.find(dep);
            if (!parent) {
                report.violations.push_back({n.id, "unresolved dependency '" + dep + "'"});
                edges_usable = false;
                continue;
            }
            if (parent->type == NodeType::REFINE) ++refine_parents;
        }
        if (refine_parents > 1) {
            report.violations.push_back({n.id, "more than one REFINE parent"});
        }
        if ((n.status == NodeStatus::DONE) != !n.output.empty()) {
            report.violations.push_back(
                {n.id, n.status == NodeStatus::DONE ? "DONE node with empty output"
                                                    : "output set on a node that is not DONE"});
        }
        std::unordered_set<std::string> ev_keys;
        for (const EvidenceItem& e : n.evidence) {
            if (!ev_keys.insert(evidence_key(e)).second) {
                report.violations.push_back({n.id, "duplicate evidence entry"});
                break;
            }
        }
    }
    return edges_usable;
}

void cycle_check(const VerificationGraph& graph, ValidationReport& report) {
    std::unordered_map<std::string, int> unmet;
    std::unordered_map<std::string, std::vector<std::string>> child_edges;
    for (const Node& n : graph.nodes) {
        unmet[n.id] = static_cast<int>(n.dependencies.size());
        for (const NodeId& dep : n.dependencies) child_edges[dep].push_back(n.id);
    }
    std::deque<std::string> queue;
    for (const Node& n : graph.nodes) {
        if (unmet[n.id] == 0) queue.push_back(n.id);
    }
    size_t resolved = 0;
    while (!queue.empty()) {
        std::string id = queue.front();
        queue.pop_front();
        ++resolved;
        for (const std::string& child : child_edges[id]) {
            if (--unmet[child] == 0) queue.push_back(child);
        }
    }
    if (resolved < graph.nodes.size()) {
        std::vector<std::string> cyclic;
        for (const Node& n : graph.nodes) {
            if (unmet[n.id] > 0) cyclic.push_back(n.id);
        }
        std::sort(cyclic.begin(), cyclic.end());
        std::ostringstream msg;
        msg << "dependency cycle involving:";
        for (const std::string& id : cyclic) msg << " " << id;
        report.violations.push_back({"", msg.str()});
    }
}

std::vector<NodeId> sink_nodes(const VerificationGraph& graph) {
    std::unordered_set<std::string> has_child;
    for (const Node& n : graph.nodes) {
        for (const NodeId& dep : n.dependencies) has_child.insert(dep);
    }
    std::vector<NodeId> sinks;
    for (const Node& n : graph.nodes) {
        if (!has_child.count(n.id)) sinks.push_back(n.id);
    }
    return sinks;
}

}  // namespace

ValidationReport validate(const VerificationGraph& graph) {
    ValidationReport report;
    if (graph.nodes.empty()) {
        report.violations.push_back({"", "graph has no nodes"});
        return report;
    }
    if (graph.modification_count < 0) {
        report.violations.push_back({"", "negative modification count"});
    }
    bool edges_usable = structural_checks(graph, report);
    if (!edges_usable) return report;
    cycle_check(graph, report);

    int judge_sinks = 0;
    for (const NodeId& id : sink_nodes(graph)) {
        const Node& n = graph.at(id);
        if (n.type == NodeType::JUDGE && n.status != NodeStatus::FAILED) ++judge_sinks;
    }
    if (judge_sinks == 0) {
        report.violations.push_back({"", "no JUDGE sink to produce the verdict"});
    } else if (judge_sinks > 1) {
        report.violations.push_back({"", "multiple JUDGE sinks"});
    }
    return report;
}

ValidationReport validate_subgraph(const VerificationGraph& sub) {
    ValidationReport report;
    if (sub.nodes.empty()) {
        report.violations.push_back({"", "sub-graph has no nodes"});
        return report;
    }
    bool edges_usable = structural_checks(sub, report);
    if (!edges_usable) return report;
    cycle_check(sub, report);
    std::vector<NodeId> sinks = sink_nodes(sub);
    if (sinks.size() != 1) {
        std::ostringstream msg;
        msg << "sub-graph must have exactly one sink, found " << sinks.size() << ":";
        for (const NodeId& id : sinks) msg << " " << id;
        report.violations.push_back({"", msg.str()});
    }
    return report;
}

std::vector<NodeId> ready_frontier(const VerificationGraph& graph) {
    std::vector<NodeId> out;
    for (const Node& n : graph.nodes) {
        if (n.status != NodeStatus::PENDING) continue;
        bool ready = true;
        for (const NodeId& dep : n.dependencies) {
            const Node* parent = graph.find(dep);
            if (!parent || parent->status != NodeStatus::DONE) {
                ready = false;
                break;
            }
        }
        if (ready) out.push_back(n.id);
    }
    return out;
}

std::vector<NodeId> children_of(const VerificationGraph& graph, const NodeId& id) {
    std::vector<NodeId> out;
    for (const Node& n : graph.nodes) {
        if (std::find(n.dependencies.begin(), n.dependencies.end(), id) != n.dependencies.end()) {
            out.push_back(n.id);
        }
    }
    return out;
}

std::set<NodeId> descendants(const VerificationGraph& graph, const NodeId& id) {
    if (!graph.contains(id)) throw UnknownNode("descendants: unknown node '" + id + "'");
    std::set<NodeId> out;
    std::deque<NodeId> queue{id};
    while (!queue.empty()) {
        NodeId current = queue.front();
        queue.pop_front();
        for (const NodeId& child : children_of(graph, current)) {
            if (out.insert(child).second) queue.push_back(child);
        }
    }
    out.erase(id);
    return out;
}

std::optional<NodeId> terminal_judge(const VerificationGraph& graph) {
    std::optional<NodeId> found;
    for (const NodeId& id : sink_nodes(graph)) {
        const Node& n = graph.at(id);
        if (n.type == NodeType::JUDGE && n.status != NodeStatus::FAILED) {
            if (found) return std::nullopt;
            found = id;
        }
    }
    return found;
}

namespace {

NodeInput assemble(const VerificationGraph& graph, const NodeId& id, bool lenient) {
    const Node& node = graph.at(id);
    NodeInput in;
    in.hint = node.hint;
    std::vector<EvidenceSet> sets;
    const Node* refine_parent = nullptr;
    for (const NodeId& dep : node.dependencies) {
        const Node* parent = graph.find(dep);
        if (!parent || parent->status != NodeStatus::DONE) {
            if (lenient) continue;
            throw NotReady("assemble_input: dependency '" + dep + "' of '" + id + "' is " +
                           (parent ? to_string(parent->status) : std::string("missing")));
        }
        in.parent_outputs.emplace_back(dep, parent->output);
        sets.push_back(parent->evidence);
        if (parent->type == NodeType::REFINE && !refine_parent) refine_parent = parent;
    }
    sets.push_back(node.evidence);
    in.parent_evidence = merge_evidence(sets);
    in.original = refine_parent ? refine_parent->output : node.input;
    return in;
}

}  // namespace

NodeInput assemble_input(const VerificationGraph& graph, const NodeId& id) {
    return assemble(graph, id, false);
}

NodeInput assemble_context(const VerificationGraph& graph, const NodeId& id) {
    return assemble(graph, id, true);
}

std::string render_node_input(const NodeInput& input) {
    std::ostringstream out;
    out << "task: " << input.original << "\n";
    if (!input.hint.empty()) out << "hint: " << input.hint << "\n";
    if (!input.parent_outputs.empty()) {
        out << "parent outputs:\n";
        for (const auto& [id, text] : input.parent_outputs) {
            out << "- (" << id << ") " << text << "\n";
        }
    }
    if (!input.parent_evidence.empty()) {
        out << "evidence:\n";
        for (const EvidenceItem& e : input.parent_evidence) {
            out << "- [" << e.source << "] " << e.content << "\n";
        }
    }
    return out.str();
}

VerificationGraph graft(const VerificationGraph& graph, const NodeId& failed_id,
                        const VerificationGraph& sub, int budget) {
    const Node* failed = graph.find(failed_id);
    if (!failed) throw UnknownNode("graft: unknown node '" + failed_id + "'");
    if (failed->status != NodeStatus::FAILED) {
        throw GraftRejected("graft: node '" + failed_id + "' is " + to_string(failed->status) +
                            ", not FAILED");
    }
    if (graph.modification_count >= budget) {
        throw BudgetExhausted("graft: modification budget " + std::to_string(budget) +
                              " exhausted");
    }
    ValidationReport sub_report = validate_subgraph(sub);
    if (!sub_report.ok()) {
        throw GraftRejected("graft: invalid sub-graph: " + sub_report.summary());
    }
    for (const Node& n : sub.nodes) {
        if (n.status != NodeStatus::PENDING) {
            throw GraftRejected("graft: sub-graph node '" + n.id + "' is " + to_string(n.status) +
                                ", expected PENDING");
        }
    }
    std::vector<NodeId> sinks = sink_nodes(sub);
    const Node& sink = sub.at(sinks.front());
    if (sink.type != failed->type) {
        throw GraftRejected("graft: sink type " + to_string(sink.type) +
                            " does not match failed node type " + to_string(failed->type));
    }

    int round = graph.modification_count + 1;
    std::string prefix = "m" + std::to_string(round) + "/";
    for (const Node& n : sub.nodes) {
        if (graph.contains(prefix + n.id)) {
            throw GraftRejected("graft: id collision on '" + prefix + n.id + "'");
        }
    }

    NodeInput context = assemble_context(graph, failed_id);
    std::ostringstream block;
    block << "recovery context for failed step '" << failed_id << "' (" << to_string(failed->type)
          << "):\n"
          << render_node_input(context);
    std::string context_block = block.str();

    VerificationGraph result = graph;
    for (const Node& n : sub.nodes) {
        Node copy = n;
        copy.id = prefix + n.id;
        for (NodeId& dep : copy.dependencies) dep = prefix + dep;
        if (copy.dependencies.empty()) {
            copy.hint = copy.hint.empty() ? context_block : copy.hint + "\n\n" + context_block;
            copy.evidence = merge_evidence({context.parent_evidence, copy.evidence});
        }
        result.nodes.push_back(std::move(copy));
    }

    NodeId ns_sink = prefix + sink.id;
    for (Node& n : result.nodes) {
        for (NodeId& dep : n.dependencies) {
            if (dep == failed_id) dep = ns_sink;
        }
    }

    for (const NodeId& id : descendants(graph, failed_id)) {
        Node& n = result.at(id);
        if (n.status == NodeStatus::SKIPPED) set_node_status(n, NodeStatus::PENDING);
    }

    result.modification_count = round;
    ValidationReport post = validate(result);
    if (!post.ok()) {
        throw GraftRejected("graft: result graph invalid: " + post.summary());
    }
    return result;
}

std::map<NodeType, int> count_nodes_by_type(const VerificationGraph& graph) {
    std::map<NodeType, int> counts{{NodeType::SEARCH, 0},
                                   {NodeType::REFINE, 0},
                                   {NodeType::THINK, 0},
                                   {NodeType::JUDGE, 0}};
    for (const Node& n : graph.nodes) counts[n.type] += 1;
    return counts;
}

nlohmann::ordered_json graph_to_json(const VerificationGraph& graph) {
    nlohmann::ordered_json j;
    j["claim"] = graph.claim;
    j["mode"] = to_string(graph.mode);
    j["modification_count"] = graph.modification_count;
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const Node& n : graph.nodes) {
        nlohmann::ordered_json nj;
        nj["id"] = n.id;
        nj["type"] = to_string(n.type);
        nj["input"] = n.input;
        nj["hint"] = n.hint;
        nj["dependencies"] = n.dependencies;
        nj["status"] = to_string(n.status);
        nj["output"] = n.output;
        nj["evidence"] = evidence_to_json(n.evidence);
        nodes.push_back(std::move(nj));
    }
    j["nodes"] = std::move(nodes);
    return j;
}

std::string graph_to_string(const VerificationGraph& graph) {
    return graph_to_json(graph).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) +
           "\n";
}

VerificationGraph graph_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("graph: expected a JSON object");
    VerificationGraph g;
    g.claim = j.value("claim", std::string());
    std::string mode = j.value("mode", std::string("STATIC"));
    auto parsed_mode = graph_mode_from_string(mode);
    if (!parsed_mode) throw Error("graph: unknown mode '" + mode + "'");
    g.mode = *parsed_mode;
    g.modification_count = j.value("modification_count", 0);
    if (!j.contains("nodes") || !j["nodes"].is_array()) {
        throw Error("graph: missing nodes array");
    }
    for (const auto& nj : j["nodes"]) {
        if (!nj.is_object() || !nj.contains("id") || !nj["id"].is_string()) {
            throw Error("graph: node without string id");
        }
        Node n;
        n.id = nj["id"].get<std::string>();
        std::string type = nj.value("type", std::string());
        auto parsed_type = node_type_from_string(type);
        if (!parsed_type) throw Error("graph: node '" + n.id + "' has unknown type '" + type + "'");
        n.type = *parsed_type;
        n.input = nj.value("input", std::string());
        n.hint = nj.value("hint", std::string());
        if (nj.contains("dependencies")) {
            if (!nj["dependencies"].is_array()) {
                throw Error("graph: node '" + n.id + "' dependencies must be an array");
            }
            for (const auto& dep : nj["dependencies"]) {
                if (!dep.is_string()) {
                    throw Error("graph: node '" + n.id + "' has a non-string dependency");
                }
                n.dependencies.push_back(dep.get<std::string>());
            }
        }
        std::string status = nj.value("status", std::string("PENDING"));
        auto parsed_status = node_status_from_string(status);
        if (!parsed_status) {
            throw Error("graph: node '" + n.id + "' has unknown status '" + status + "'");
        }
        n.status = *parsed_status;
        n.output = nj.value("output", std::string());
        if (nj.contains("evidence")) n.evidence = evidence_from_json(nj["evidence"]);
        g.nodes.push_back(std::move(n));
    }
    return g;
}

VerificationGraph graph_from_string(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error("graph: malformed JSON");
    return graph_from_json(j);
}

void IncrementalFrontier::rebuild(const VerificationGraph& graph) {
    unmet_.clear();
    for (const Node& n : graph.nodes) {
        int count = 0;
        for (const NodeId& dep : n.dependencies) {
            const Node* parent = graph.find(dep);
            if (!parent || parent->status != NodeStatus::DONE) ++count;
        }
        unmet_[n.id] = count;
    }
}

void IncrementalFrontier::on_done(const VerificationGraph& graph, const NodeId& id) {
    for (const NodeId& child : children_of(graph, id)) {
        auto it = unmet_.find(child);
        if (it != unmet_.end() && it->second > 0) --it->second;
    }
}

std::vector<NodeId> IncrementalFrontier::ready(const VerificationGraph& graph) const {
    std::vector<NodeId> out;
    for (const Node& n : graph.nodes) {
        if (n.status != NodeStatus::PENDING) continue;
        auto it = unmet_.find(n.id);
        if (it != unmet_.end() && it->second == 0) out.push_back(n.id);
    }
    return out;
}

}  // namespace factgraph

#pragma once

#include "factgraph/graph.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace factgraph::testing {

Node make_node(NodeId id, NodeType type, std::string input, std::vector<NodeId> deps,
               NodeStatus status = NodeStatus::PENDING, std::string output = "");

VerificationGraph make_graph(std::string claim, GraphMode mode, std::vector<Node> nodes,
                             int modification_count = 0);

/// SEARCH -> THINK -> JUDGE over a claim, all PENDING.
VerificationGraph linear_plan(const std::string& claim, GraphMode mode);

/// Random DAG: 2..max_nodes nodes, edges only from earlier nodes (acyclic by
/// construction), at most one REFINE parent per node, exactly one JUDGE and
/// it is the unique sink over the last node. All PENDING.
VerificationGraph random_dag(std::mt19937& rng, int max_nodes);

/// Random replacement sub-graph: 1..max_nodes PENDING nodes, single sink of
/// `sink_type`, non-sink nodes SEARCH/THINK/REFINE.
VerificationGraph random_subgraph(std::mt19937& rng, int max_nodes, NodeType sink_type);

/// Self-deleting unique temp directory.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// Environment lookups used by tests (source tree, CLI binary location).
std::string require_env(const char* name);

}  // namespace factgraph::testing

#pragma once

#include "factgraph/events.hpp"
#include "factgraph/gateway.hpp"
#include "factgraph/graph.hpp"
#include "factgraph/node_ops.hpp"
#include "factgraph/planner.hpp"
#include "factgraph/prompts.hpp"
#include "factgraph/retrieval.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace factgraph {

struct RunConfig {
    GraphMode mode = GraphMode::STATIC;
    int budget = 0;  // max graph modifications; 0 for STATIC, default 3 for DYNAMIC
    int max_inflight = 4;
    double node_timeout_s = 60.0;
    SearchStrategy strategy = SearchStrategy::WIKI;
    int top_k = 10;
    int max_plan_nodes = 12;
};

/// Throws Error when the config breaks an invariant (STATIC requires
/// budget 0 and WIKI retrieval; counts must be positive).
void check_config(const RunConfig& config);

struct RunStats {
    std::map<NodeType, int> initial_counts;
    std::map<NodeType, int> final_counts;
    int modification_count = 0;
    std::int64_t wall_ms = 0;
    std::map<NodeId, std::int64_t> node_latency_ms;
    bool planner_fallback_used = false;
    int planner_calls = 0;
};

struct RunResult {
    Verdict verdict;
    VerificationGraph final_graph;
    RunStats stats;
    std::vector<Event> transcript;
};

/// Which frontier nodes to start given free worker slots: the frontier
/// prefix of size min(|frontier|, slots), preserving frontier order.
std::vector<NodeId> select_dispatch(const std::vector<NodeId>& frontier, int slots);

/// Canonical RunResult JSON. Volatile fields (wall time, latencies) are
/// excluded so identical scripted runs serialize byte-identically.
nlohmann::ordered_json run_result_json(const RunResult& result);
std::string run_result_to_string(const RunResult& result);

/// Fixed-size thread pool executing submitted tasks FIFO.
class WorkerPool {
public:
    explicit WorkerPool(int threads);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void submit(std::function<void()> task);

private:
    void worker_loop();

    std::vector<std::thread> threads_;
    std::deque<std::function<void()>> tasks_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stop_ = false;
};

/// Drives one claim to a verdict: plans, dispatches ready nodes to a worker
/// pool, applies the graft-and-continue failure policy under the modification
/// budget, and forces a binary verdict when the budget is exhausted.
/// The gateway and retriever must be exclusive to this runner while run()
/// executes; the graph is mutated only on the coordinator thread.
class ClaimRunner {
public:
    ClaimRunner(RunConfig config, PlannerIface& planner, Gateway& gateway, Retriever& retriever,
                TemplateStore templates);
    ~ClaimRunner();
    ClaimRunner(const ClaimRunner&) = delete;
    ClaimRunner& operator=(const ClaimRunner&) = delete;

    RunResult run(const std::string& claim);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

RunResult run_claim(const std::string& claim, const RunConfig& config, PlannerIface& planner,
                    Gateway& gateway, Retriever& retriever, const TemplateStore& templates);

}  // namespace factgraph

#include "factgraph/executor.hpp"

#include <algorithm>
#include <chrono>
#include <optional>
#include <sstream>

namespace factgraph {

void check_config(const RunConfig& config) {
    if (config.mode == GraphMode::STATIC) {
        if (config.budget != 0) throw Error("config: STATIC mode requires budget 0");
        if (config.strategy != SearchStrategy::WIKI) {
            throw Error("config: STATIC mode requires WIKI retrieval");
        }
    }
    if (config.budget < 0) throw Error("config: budget must be >= 0");
    if (config.max_inflight < 1) throw Error("config: max_inflight must be >= 1");
    if (config.node_timeout_s <= 0.0) throw Error("config: node timeout must be positive");
    if (config.top_k < 1) throw Error("config: top_k must be >= 1");
    if (config.max_plan_nodes < 2) throw Error("config: max_plan_nodes must be >= 2");
}

std::vector<NodeId> select_dispatch(const std::vector<NodeId>& frontier, int slots) {
    if (slots <= 0) return {};
    size_t take = std::min(frontier.size(), static_cast<size_t>(slots));
    return std::vector<NodeId>(frontier.begin(), frontier.begin() + take);
}

namespace {

nlohmann::ordered_json type_counts_json(const std::map<NodeType, int>& counts) {
    nlohmann::ordered_json j;
    for (NodeType type : {NodeType::SEARCH, NodeType::REFINE, NodeType::THINK, NodeType::JUDGE}) {
        auto it = counts.find(type);
        j[to_string(type)] = it == counts.end() ? 0 : it->second;
    }
    return j;
}

}  // namespace

nlohmann::ordered_json run_result_json(const RunResult& result) {
    nlohmann::ordered_json j;
    j["claim"] = result.final_graph.claim;
    j["mode"] = to_string(result.final_graph.mode);
    j["verdict"] = verdict_to_json(result.verdict);
    j["modification_count"] = result.stats.modification_count;
    j["planner_fallback_used"] = result.stats.planner_fallback_used;
    j["planner_calls"] = result.stats.planner_calls;
    j["node_counts"] = nlohmann::ordered_json{
        {"initial", type_counts_json(result.stats.initial_counts)},
        {"final", type_counts_json(result.stats.final_counts)}};
    nlohmann::ordered_json statuses;
    for (NodeStatus status :
         {NodeStatus::PENDING, NodeStatus::READY, NodeStatus::RUNNING, NodeStatus::DONE,
          NodeStatus::FAILED, NodeStatus::SKIPPED}) {
        int count = 0;
        for (const Node& n : result.final_graph.nodes) {
            if (n.status == status) ++count;
        }
        statuses[to_string(status)] = count;
    }
    j["node_statuses"] = std::move(statuses);
    return j;
}

std::string run_result_to_string(const RunResult& result) {
    return run_result_json(result).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) +
           "\n";
}

WorkerPool::WorkerPool(int threads) {
    if (threads < 1) threads = 1;
    threads_.reserve(static_cast<size_t>(threads));
    for (int i = 0; i < threads; ++i) {
        threads_.emplace_back([this] { worker_loop(); });
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    for (std::thread& t : threads_) t.join();
}

void WorkerPool::submit(std::function<void()> task) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        tasks_.push_back(std::move(task));
    }
    cv_.notify_one();
}

void WorkerPool::worker_loop() {
    while (true) {
        std::function<void()> task;
        {
            std::unique_lock<std::mutex> lock(mutex_);
            cv_.wait(lock, [this] { return stop_ || !tasks_.empty(); });
            if (tasks_.empty()) {
                if (stop_) return;
                continue;
            }
            task = std::move(tasks_.front());
            tasks_.pop_front();
        }
        task();
    }
}

namespace {

using SteadyClock = std::chrono::steady_clock;

std::int64_t ms_since(SteadyClock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - start)
        .count();
}

struct Completion {
    NodeId id;
    std::uint64_t token = 0;
    bool ok = false;
    std::string output;
    EvidenceSet evidence;
    std::optional<ThinkOutcome> think;
    std::optional<Verdict> verdict;
    std::string error;
};

class CompletionQueue {
public:
    void push(Completion c) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            queue_.push_back(std::move(c));
        }
        cv_.notify_one();
    }

    std::optional<Completion> pop_until(SteadyClock::time_point deadline) {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait_until(lock, deadline, [this] { return !queue_.empty(); });
        if (queue_.empty()) return std::nullopt;
        Completion c = std::move(queue_.front());
        queue_.pop_front();
        return c;
    }

    void clear() {
        std::lock_guard<std::mutex> lock(mutex_);
        queue_.clear();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Completion> queue_;
};

/// Streams every retrieval (and retrieval failure) into the event log so a
/// recorded run can be replayed without the corpus or the network.
class RecordingRetriever : public Retriever {
public:
    RecordingRetriever(Retriever& inner, EventLog& log) : inner_(&inner), log_(&log) {}

    EvidenceSet search(const std::string& query, int k) override {
        EvidenceSet results;
        try {
            results = inner_->search(query, k);
        } catch (const SearchFailed& e) {
            nlohmann::ordered_json detail;
            detail["query"] = query;
            detail["strategy"] = inner_->strategy();
            detail["error"] = e.what();
            log_->emit("search_failed", "", std::move(detail));
            throw;
        }
        log_->emit("search_call", "", search_call_detail(query, inner_->strategy(), results));
        return results;
    }

    std::string strategy() const override { return inner_->strategy(); }

private:
    Retriever* inner_;
    EventLog* log_;
};

}  // namespace

struct ClaimRunner::Impl {
    RunConfig config;
    PlannerIface* planner;
    Gateway* gateway;
    Retriever* retriever;
    TemplateStore templates;

    EventLog log;
    VerificationGraph graph;
    IncrementalFrontier frontier;
    CompletionQueue queue;
    struct Inflight {
        std::uint64_t token = 0;
        SteadyClock::time_point deadline;
        SteadyClock::time_point started;
    };
    std::map<NodeId, Inflight> inflight;
    std::uint64_t next_token = 1;
    RunStats stats;
    std::optional<Verdict> final_verdict;
    std::unique_ptr<WorkerPool> pool;  // declared last: destroyed (joined) first

    Impl(RunConfig cfg, PlannerIface& p, Gateway& g, Retriever& r, TemplateStore t)
        : config(cfg), planner(&p), gateway(&g), retriever(&r), templates(std::move(t)) {}

    RunResult run(const std::string& claim);
    void dispatch(const std::string& claim, Retriever& rec);
    void start_node(const NodeId& id, const std::string& claim, Retriever& rec);
    void wait_one(const std::string& claim);
    void handle_timeouts(const std::string& claim);
    void apply_completion(Completion c, const std::string& claim);
    void handle_failure(const NodeId& id, const std::string& reason, const std::string& claim);
    void forced_judgment(const std::string& claim);
    void skip_pending_descendants(const NodeId& id, const std::optional<NodeId>& spare);
};

void ClaimRunner::Impl::dispatch(const std::string& claim, Retriever& rec) {
    std::vector<NodeId> ready = frontier.ready(graph);
    int slots = config.max_inflight - static_cast<int>(inflight.size());
    for (const NodeId& id : select_dispatch(ready, slots)) start_node(id, claim, rec);
}

void ClaimRunner::Impl::start_node(const NodeId& id, const std::string& claim, Retriever& rec) {
    Node& node = graph.at(id);
    set_node_status(node, NodeStatus::READY);
    set_node_status(node, NodeStatus::RUNNING);
    NodeInput input = assemble_input(graph, id);

    std::uint64_t token = next_token++;
    SteadyClock::time_point now = SteadyClock::now();
    auto timeout = std::chrono::duration_cast<SteadyClock::duration>(
        std::chrono::duration<double>(config.node_timeout_s));
    inflight[id] = Inflight{token, now + timeout, now};
    log.emit("node_start", id,
             {{"type", to_string(node.type)}, {"attempt", token}});

    NodeType type = node.type;
    GraphMode mode = graph.mode;
    pool->submit([this, id, token, type, mode, claim, input = std::move(input), &rec]() {
        Completion c;
        c.id = id;
        c.token = token;
        try {
            switch (type) {
                case NodeType::SEARCH: {
                    SearchExecution r =
                        exec_search(input, claim, *gateway, rec, templates, config.top_k);
                    c.ok = true;
                    c.output = std::move(r.output);
                    c.evidence = std::move(r.merged);
                    break;
                }
                case NodeType::REFINE: {
                    c.output = exec_refine(input, claim, *gateway, templates);
                    c.ok = true;
                    c.evidence = input.parent_evidence;
                    break;
                }
                case NodeType::THINK: {
                    ThinkOutcome outcome = exec_think(input, claim, mode, *gateway, templates);
                    c.ok = true;
                    c.think = outcome;
                    c.evidence = input.parent_evidence;
                    if (outcome.sufficient) c.output = outcome.conclusion;
                    break;
                }
                case NodeType::JUDGE: {
                    Verdict v = exec_judge(input, claim, *gateway, templates, false);
                    c.ok = true;
                    c.verdict = v;
                    c.evidence = input.parent_evidence;
                    c.output = to_string(v.label) + ": " + v.explanation;
                    break;
                }
            }
        } catch (const std::exception& e) {
            c.ok = false;
            c.error = e.what();
        }
        queue.push(std::move(c));
    });
}

void ClaimRunner::Impl::wait_one(const std::string& claim) {
    SteadyClock::time_point deadline = SteadyClock::time_point::max();
    for (const auto& [id, info] : inflight) deadline = std::min(deadline, info.deadline);
    std::optional<Completion> completion = queue.pop_until(deadline);
    if (!completion) {
        handle_timeouts(claim);
        return;
    }
    apply_completion(std::move(*completion), claim);
}

void ClaimRunner::Impl::handle_timeouts(const std::string& claim) {
    SteadyClock::time_point now = SteadyClock::now();
    std::vector<NodeId> expired;
    for (const auto& [id, info] : inflight) {
        if (info.deadline <= now) expired.push_back(id);
    }
    for (const NodeId& id : expired) {
        Inflight info = inflight.at(id);
        inflight.erase(id);
        stats.node_latency_ms[id] = ms_since(info.started);
        set_node_status(graph.at(id), NodeStatus::FAILED);
        log.emit("node_timeout", id, {{"seconds", config.node_timeout_s}});
        std::ostringstream reason;
        reason << "timeout after " << config.node_timeout_s << "s";
        handle_failure(id, reason.str(), claim);
    }
}

void ClaimRunner::Impl::apply_completion(Completion c, const std::string& claim) {
    auto it = inflight.find(c.id);
    if (it == inflight.end() || it->second.token != c.token) {
        log.emit("stale_completion", c.id, {{"attempt", c.token}});
        return;
    }
    stats.node_latency_ms[c.id] = ms_since(it->second.started);
    inflight.erase(it);

    Node& node = graph.at(c.id);
    if (!c.ok) {
        // keep whatever evidence the node already carried (graft seeding)
        set_node_status(node, NodeStatus::FAILED);
        handle_failure(c.id, c.error, claim);
        return;
    }
    node.evidence = std::move(c.evidence);
    switch (node.type) {
        case NodeType::SEARCH:
        case NodeType::REFINE: {
            node.output = std::move(c.output);
            set_node_status(node, NodeStatus::DONE);
            frontier.on_done(graph, c.id);
            log.emit("node_done", c.id,
                     {{"type", to_string(node.type)},
                      {"output", node.output},
                      {"evidence_count", static_cast<int>(node.evidence.size())}});
            break;
        }
        case NodeType::THINK: {
            if (c.think->sufficient) {
                node.output = c.think->conclusion;
                set_node_status(node, NodeStatus::DONE);
                frontier.on_done(graph, c.id);
                log.emit("node_done", c.id,
                         {{"type", "THINK"},
                          {"output", node.output},
                          {"evidence_count", static_cast<int>(node.evidence.size())}});
            } else {
                set_node_status(node, NodeStatus::FAILED);
                handle_failure(c.id, c.think->missing, claim);
            }
            break;
        }
        case NodeType::JUDGE: {
            if (c.verdict->label == VerdictLabel::UNCERTAIN) {
                set_node_status(node, NodeStatus::FAILED);
                std::string reason = c.verdict->explanation.empty()
                                         ? std::string("verdict uncertain")
                                         : c.verdict->explanation;
                handle_failure(c.id, reason, claim);
            } else {
                node.output = std::move(c.output);
                set_node_status(node, NodeStatus::DONE);
                frontier.on_done(graph, c.id);
                auto terminal = terminal_judge(graph);
                if (terminal && *terminal == c.id) final_verdict = *c.verdict;
                log.emit("node_done", c.id,
                         {{"type", "JUDGE"},
                          {"output", node.output},
                          {"evidence_count", static_cast<int>(node.evidence.size())}});
            }
            break;
        }
    }
}

void ClaimRunner::Impl::skip_pending_descendants(const NodeId& id,
                                                 const std::optional<NodeId>& spare) {
    for (const NodeId& d : descendants(graph, id)) {
        if (spare && d == *spare) continue;
        Node& n = graph.at(d);
        if (n.status == NodeStatus::PENDING) set_node_status(n, NodeStatus::SKIPPED);
    }
}

void ClaimRunner::Impl::handle_failure(const NodeId& id, const std::string& reason,
                                       const std::string& claim) {
    log.emit("node_failed", id, {{"reason", reason}});
    const Node& failed = graph.at(id);

    if (graph.mode == GraphMode::DYNAMIC && graph.modification_count < config.budget) {
        skip_pending_descendants(id, std::nullopt);

        PlanRequest request;
        request.claim = claim;
        request.purpose = PlanPurpose::SUBTREE;
        request.failure_context =
            PlanFailureContext{render_node_input(assemble_context(graph, id)), reason};
        request.sink_type = failed.type;
        request.max_nodes = config.max_plan_nodes;
        request.mode = graph.mode;

        bool budget_hit = false;
        for (int attempt = 0; attempt < 2 && !budget_hit; ++attempt) {
            GeneratePlanResult sub = planner->plan(request);
            stats.planner_calls += sub.gateway_calls;
            stats.planner_fallback_used = stats.planner_fallback_used || sub.used_fallback;
            try {
                graph = graft(graph, id, sub.graph, config.budget);
                stats.modification_count = graph.modification_count;
                frontier.rebuild(graph);
                log.emit("graft", id,
                         {{"round", graph.modification_count},
                          {"added", static_cast<int>(sub.graph.nodes.size())},
                          {"fallback", sub.used_fallback}});
                return;
            } catch (const GraftRejected& e) {
                log.emit("graft_rejected", id, {{"error", e.what()}, {"attempt", attempt + 1}});
            } catch (const BudgetExhausted&) {
                budget_hit = true;
            }
        }
    }

    // No modification possible: shed the blocked part of the graph but keep
    // the terminal JUDGE runnable for the forced verdict.
    std::optional<NodeId> terminal = terminal_judge(graph);
    skip_pending_descendants(id, terminal);
    if (terminal) {
        Node& tj = graph.at(*terminal);
        if (tj.status == NodeStatus::SKIPPED) set_node_status(tj, NodeStatus::PENDING);
    }
}

void ClaimRunner::Impl::forced_judgment(const std::string& claim) {
    NodeId target;
    if (auto terminal = terminal_judge(graph)) {
        target = *terminal;
    } else {
        for (const Node& n : graph.nodes) {
            if (n.type == NodeType::JUDGE && children_of(graph, n.id).empty()) {
                target = n.id;
                break;
            }
        }
        if (target.empty()) throw Error("run: no JUDGE sink available for the forced verdict");
    }

    Node& judge = graph.at(target);
    if (judge.status == NodeStatus::SKIPPED) set_node_status(judge, NodeStatus::PENDING);
    if (judge.status == NodeStatus::PENDING || judge.status == NodeStatus::FAILED) {
        set_node_status(judge, NodeStatus::READY);
    }
    set_node_status(judge, NodeStatus::RUNNING);

    SteadyClock::time_point started = SteadyClock::now();
    log.emit("node_start", target, {{"type", "JUDGE"}, {"forced", true}});

    NodeInput input = assemble_context(graph, target);
    std::vector<EvidenceSet> sets;
    sets.push_back(std::move(input.parent_evidence));
    for (const Node& n : graph.nodes) sets.push_back(n.evidence);
    input.parent_evidence = merge_evidence(sets);

    Verdict verdict;
    try {
        verdict = exec_judge(input, claim, *gateway, templates, true);
    } catch (const GatewayError& e) {
        // The forced path must still deliver a binary label.
        verdict.label = VerdictLabel::REFUTES;
        verdict.explanation = std::string("forced verdict unavailable: ") + e.what();
        verdict.forced = true;
    }

    judge.evidence = std::move(input.parent_evidence);
    judge.output = to_string(verdict.label) + ": " + verdict.explanation;
    set_node_status(judge, NodeStatus::DONE);
    frontier.on_done(graph, target);
    stats.node_latency_ms[target] = ms_since(started);
    final_verdict = verdict;
    log.emit("forced_judgment", target,
             {{"label", to_string(verdict.label)}, {"explanation", verdict.explanation}});
    log.emit("node_done", target,
             {{"type", "JUDGE"},
              {"output", judge.output},
              {"evidence_count", static_cast<int>(judge.evidence.size())}});
}

RunResult ClaimRunner::Impl::run(const std::string& claim) {
    check_config(config);
    if (claim.empty()) throw Error("run: claim must be non-empty");

    log.clear();
    graph = VerificationGraph{};
    frontier = IncrementalFrontier{};
    queue.clear();
    inflight.clear();
    next_token = 1;
    stats = RunStats{};
    final_verdict.reset();

    SteadyClock::time_point t0 = SteadyClock::now();
    RecordingRetriever rec(*retriever, log);
    gateway->on_call = [this](const CallRecord& r) {
        log.emit("gateway_call", "", call_record_detail(r));
    };
    pool = std::make_unique<WorkerPool>(config.max_inflight);

    try {
        log.emit("run_start", "",
                 {{"claim", claim},
                  {"mode", to_string(config.mode)},
                  {"budget", config.budget},
                  {"strategy", to_string(config.strategy)},
                  {"max_inflight", config.max_inflight}});

        PlanRequest request;
        request.claim = claim;
        request.purpose = PlanPurpose::INITIAL;
        request.sink_type = NodeType::JUDGE;
        request.max_nodes = config.max_plan_nodes;
        request.mode = config.mode;
        GeneratePlanResult plan = planner->plan(request);
        stats.planner_fallback_used = plan.used_fallback;
        stats.planner_calls = plan.gateway_calls;
        graph = std::move(plan.graph);
        log.emit("plan_ready", "",
                 {{"nodes", static_cast<int>(graph.nodes.size())},
                  {"used_fallback", plan.used_fallback},
                  {"gateway_calls", plan.gateway_calls}});
        stats.initial_counts = count_nodes_by_type(graph);
        frontier.rebuild(graph);

        while (true) {
            std::optional<NodeId> terminal = terminal_judge(graph);
            bool terminal_done =
                terminal && graph.at(*terminal).status == NodeStatus::DONE;
            if (!terminal_done) dispatch(claim, rec);
            if (inflight.empty()) {
                if (terminal_done) break;
                forced_judgment(claim);
                break;
            }
            wait_one(claim);
        }
    } catch (...) {
        pool.reset();
        gateway->on_call = nullptr;
        throw;
    }

    pool.reset();  // join workers before touching shared state further
    gateway->on_call = nullptr;

    Verdict verdict;
    if (final_verdict) {
        verdict = *final_verdict;
    } else {
        throw Error("run: finished without a recorded verdict");
    }

    stats.final_counts = count_nodes_by_type(graph);
    stats.modification_count = graph.modification_count;
    stats.wall_ms = ms_since(t0);
    log.emit("run_end", "",
             {{"label", to_string(verdict.label)},
              {"forced", verdict.forced},
              {"modification_count", graph.modification_count}});

    RunResult result;
    result.verdict = verdict;
    result.final_graph = graph;
    result.stats = stats;
    result.transcript = log.events();
    return result;
}

ClaimRunner::ClaimRunner(RunConfig config, PlannerIface& planner, Gateway& gateway,
                         Retriever& retriever, TemplateStore templates)
    : impl_(std::make_unique<Impl>(config, planner, gateway, retriever, std::move(templates))) {}

ClaimRunner::~ClaimRunner() = default;

RunResult ClaimRunner::run(const std::string& claim) { return impl_->run(claim); }

RunResult run_claim(const std::string& claim, const RunConfig& config, PlannerIface& planner,
                    Gateway& gateway, Retriever& retriever, const TemplateStore& templates) {
    ClaimRunner runner(config, planner, gateway, retriever, templates);
    return runner.run(claim);
}

}  // namespace factgraph

#pragma once

#include "factgraph/errors.hpp"
#include "factgraph/executor.hpp"
#include "factgraph/node_ops.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace factgraph {

enum class DatasetKind { HOVER, FEVEROUS, CUSTOM };
std::string to_string(DatasetKind kind);
std::optional<DatasetKind> dataset_kind_from_string(const std::string& s);

struct ClaimRecord {
    std::string id;
    std::string claim;
    VerdictLabel gold = VerdictLabel::SUPPORTS;  // binary only
    std::optional<int> hops;
    DatasetKind dataset = DatasetKind::CUSTOM;
};

struct RejectedRecord {
    int line = 0;
    std::string reason;
};

struct DatasetLoadResult {
    std::vector<ClaimRecord> records;
    std::vector<RejectedRecord> rejected;  // non-binary labels, kept out of the run
};

/// Parses a JSONL dataset. Field mappings: HOVER uses uid/claim/label/num_hops
/// with SUPPORTED -> SUPPORTS and NOT_SUPPORTED -> REFUTES; FEVEROUS and
/// CUSTOM use id/claim/label with literal SUPPORTS/REFUTES. Records with any
/// other label are rejected with a reason; malformed lines throw Error with
/// the line number.
DatasetLoadResult load_dataset(const std::string& path, DatasetKind kind);
DatasetLoadResult parse_dataset(const std::string& text, DatasetKind kind);

/// Unweighted mean of per-class F1 over {SUPPORTS, REFUTES}. A class with no
/// true positives, false positives, or false negatives contributes F1 = 0.
/// Throws Error on empty or length-mismatched input.
double macro_f1(const std::vector<VerdictLabel>& preds, const std::vector<VerdictLabel>& golds);

/// One claim's evaluation outcome. `error` is set when the engine threw; such
/// outcomes are excluded from every average and reported separately.
struct ClaimOutcome {
    std::string id;
    std::string claim;
    VerdictLabel gold = VerdictLabel::SUPPORTS;
    VerdictLabel predicted = VerdictLabel::UNCERTAIN;
    bool forced = false;
    bool correct = false;
    int modification_count = 0;
    std::map<NodeType, int> initial_counts;
    std::map<NodeType, int> final_counts;
    std::int64_t wall_ms = 0;
    std::optional<int> hops;
    DatasetKind dataset = DatasetKind::CUSTOM;
    std::string error;
};

struct TypeAverage {
    double initial = 0.0;
    double final_ = 0.0;
};

struct EvalReport {
    std::string dataset_name;
    std::vector<ClaimOutcome> outcomes;  // dataset order
    int completed = 0;
    int failed = 0;
    double macro_f1_score = 0.0;
    std::map<int, double> per_hop_macro_f1;
    int uncertainty_count = 0;  // verdicts produced in forced (binary) mode
    double avg_modification_count = 0.0;
    std::map<NodeType, TypeAverage> avg_node_counts;
    std::int64_t total_wall_ms = 0;
    double mean_wall_ms = 0.0;
};

using ClaimEngine = std::function<RunResult(const ClaimRecord&)>;

struct EvalConfig {
    int claim_parallelism = 2;
    std::string dataset_name = "custom";
    /// When set, per-claim artifacts are written under
    /// <out_dir>/runs/<dataset>/<claim-id>/ by the sink below.
    std::function<void(const ClaimRecord&, const RunResult&)> persist;
};

/// Runs every claim through the engine with bounded parallelism and
/// aggregates the report. Engine exceptions become failed outcomes; the sweep
/// itself never aborts.
EvalReport run_eval(const std::vector<ClaimRecord>& dataset, const EvalConfig& config,
                    const ClaimEngine& engine);

/// First n incorrectly-predicted completed claims, in dataset order,
/// reconstructed as ClaimRecords. Returns fewer when there are fewer.
std::vector<ClaimRecord> select_hard_subset(const std::vector<ClaimOutcome>& outcomes, int n);

nlohmann::ordered_json eval_report_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

/// Human-readable summary whose node-count rows use the
/// "<type>  <initial> -> <final>" layout.
std::string render_eval_report(const EvalReport& report);

}  // namespace factgraph

#include "factgraph/eval.hpp"

#include "factgraph/text.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace factgraph {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<NodeType> kAllTypes = {NodeType::SEARCH, NodeType::REFINE, NodeType::THINK,
                                         NodeType::JUDGE};

std::string field_as_string(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
    if (value.is_number_unsigned()) return std::to_string(value.get<std::uint64_t>());
    return value.dump();
}

struct FieldNames {
    const char* id;
    const char* claim;
    const char* label;
    const char* hops;  // nullptr when the format carries no hop count
};

FieldNames fields_for(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::HOVER:
            return {"uid", "claim", "label", "num_hops"};
        case DatasetKind::FEVEROUS:
        case DatasetKind::CUSTOM:
            return {"id", "claim", "label", nullptr};
    }
    throw Error("unknown dataset kind");
}

std::optional<VerdictLabel> map_label(DatasetKind kind, const std::string& raw) {
    if (kind == DatasetKind::HOVER) {
        if (raw == "SUPPORTED") return VerdictLabel::SUPPORTS;
        if (raw == "NOT_SUPPORTED") return VerdictLabel::REFUTES;
        return std::nullopt;
    }
    if (raw == "SUPPORTS") return VerdictLabel::SUPPORTS;
    if (raw == "REFUTES") return VerdictLabel::REFUTES;
    return std::nullopt;
}

struct ClassTally {
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

double f1_of(const ClassTally& t) {
    const int denom = 2 * t.tp + t.fp + t.fn;
    if (denom == 0) return 0.0;
    return 2.0 * t.tp / denom;
}

int count_type(const std::map<NodeType, int>& counts, NodeType type) {
    auto it = counts.find(type);
    return it == counts.end() ? 0 : it->second;
}

}  // namespace

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::HOVER:
            return "HOVER";
        case DatasetKind::FEVEROUS:
            return "FEVEROUS";
        case DatasetKind::CUSTOM:
            return "CUSTOM";
    }
    return "CUSTOM";
}

std::optional<DatasetKind> dataset_kind_from_string(const std::string& s) {
    std::string lower = to_lower(s);
    if (lower == "hover") return DatasetKind::HOVER;
    if (lower == "feverous") return DatasetKind::FEVEROUS;
    if (lower == "custom") return DatasetKind::CUSTOM;
    return std::nullopt;
}

DatasetLoadResult parse_dataset(const std::string& text, DatasetKind kind) {
    DatasetLoadResult result;
    const FieldNames names = fields_for(kind);
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error("dataset line " + std::to_string(line_no) + ": not a JSON object");
        }
        if (!j.contains(names.id)) {
            throw Error("dataset line " + std::to_string(line_no) + ": missing field '" +
                        names.id + "'");
        }
        if (!j.contains(names.claim) || !j[names.claim].is_string() ||
            j[names.claim].get<std::string>().empty()) {
            throw Error("dataset line " + std::to_string(line_no) + ": missing field '" +
                        names.claim + "'");
        }
        if (!j.contains(names.label) || !j[names.label].is_string()) {
            throw Error("dataset line " + std::to_string(line_no) + ": missing field '" +
                        names.label + "'");
        }
        const std::string raw_label = j[names.label].get<std::string>();
        std::optional<VerdictLabel> gold = map_label(kind, raw_label);
        if (!gold) {
            result.rejected.push_back(
                {line_no, "label '" + raw_label + "' is not binary, claim excluded"});
            continue;
        }
        ClaimRecord record;
        record.id = field_as_string(j[names.id]);
        record.claim = j[names.claim].get<std::string>();
        record.gold = *gold;
        record.dataset = kind;
        if (names.hops != nullptr && j.contains(names.hops) &&
            j[names.hops].is_number_integer()) {
            record.hops = j[names.hops].get<int>();
        }
        result.records.push_back(std::move(record));
    }
    return result;
}

DatasetLoadResult load_dataset(const std::string& path, DatasetKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), kind);
}

double macro_f1(const std::vector<VerdictLabel>& preds, const std::vector<VerdictLabel>& golds) {
    if (preds.size() != golds.size()) {
        throw Error("macro_f1: " + std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(golds.size()) + " golds");
    }
    if (preds.empty()) throw Error("macro_f1: empty input");
    ClassTally supports;
    ClassTally refutes;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        for (VerdictLabel cls : {VerdictLabel::SUPPORTS, VerdictLabel::REFUTES}) {
            ClassTally& t = cls == VerdictLabel::SUPPORTS ? supports : refutes;
            const bool pred_is = preds[i] == cls;
            const bool gold_is = golds[i] == cls;
            if (pred_is && gold_is) ++t.tp;
            if (pred_is && !gold_is) ++t.fp;
            if (!pred_is && gold_is) ++t.fn;
        }
    }
    return (f1_of(supports) + f1_of(refutes)) / 2.0;
}

EvalReport run_eval(const std::vector<ClaimRecord>& dataset, const EvalConfig& config,
                    const ClaimEngine& engine) {
    if (dataset.empty()) throw Error("run_eval: dataset is empty");
    if (config.claim_parallelism < 1) throw Error("run_eval: claim_parallelism must be >= 1");
    EvalReport report;
    report.dataset_name = config.dataset_name;
    report.outcomes.resize(dataset.size());

    std::atomic<std::size_t> next{0};
    std::mutex persist_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= dataset.size()) return;
            const ClaimRecord& record = dataset[i];
            ClaimOutcome& out = report.outcomes[i];
            out.id = record.id;
            out.claim = record.claim;
            out.gold = record.gold;
            out.hops = record.hops;
            out.dataset = record.dataset;
            const auto started = std::chrono::steady_clock::now();
            try {
                RunResult run = engine(record);
                out.predicted = run.verdict.label;
                out.forced = run.verdict.forced;
                out.correct = run.verdict.label == record.gold;
                out.modification_count = run.stats.modification_count;
                out.initial_counts = run.stats.initial_counts;
                out.final_counts = run.stats.final_counts;
                if (config.persist) {
                    std::lock_guard<std::mutex> lock(persist_mutex);
                    config.persist(record, run);
                }
            } catch (const std::exception& e) {
                out.error = e.what();
                if (out.error.empty()) out.error = "claim run failed";
            }
            out.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
        }
    };

    const int threads = std::min<int>(config.claim_parallelism,
                                      std::max<std::size_t>(dataset.size(), 1));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    std::vector<VerdictLabel> preds;
    std::vector<VerdictLabel> golds;
    std::map<int, std::pair<std::vector<VerdictLabel>, std::vector<VerdictLabel>>> by_hop;
    double mod_sum = 0.0;
    std::map<NodeType, std::pair<double, double>> count_sums;
    for (const ClaimOutcome& out : report.outcomes) {
        report.total_wall_ms += out.wall_ms;
        if (!out.error.empty()) {
            ++report.failed;
            continue;
        }
        ++report.completed;
        preds.push_back(out.predicted);
        golds.push_back(out.gold);
        if (out.hops) {
            auto& [hp, hg] = by_hop[*out.hops];
            hp.push_back(out.predicted);
            hg.push_back(out.gold);
        }
        if (out.forced) ++report.uncertainty_count;
        mod_sum += out.modification_count;
        for (NodeType type : kAllTypes) {
            auto& [init_sum, final_sum] = count_sums[type];
            init_sum += count_type(out.initial_counts, type);
            final_sum += count_type(out.final_counts, type);
        }
    }
    if (report.completed > 0) {
        report.macro_f1_score = macro_f1(preds, golds);
        report.avg_modification_count = mod_sum / report.completed;
        for (NodeType type : kAllTypes) {
            const auto& [init_sum, final_sum] = count_sums[type];
            report.avg_node_counts[type] = {init_sum / report.completed,
                                            final_sum / report.completed};
        }
        for (const auto& [hops, pair] : by_hop) {
            report.per_hop_macro_f1[hops] = macro_f1(pair.first, pair.second);
        }
    }
    if (!report.outcomes.empty()) {
        report.mean_wall_ms =
            static_cast<double>(report.total_wall_ms) / report.outcomes.size();
    }
    return report;
}

std::vector<ClaimRecord> select_hard_subset(const std::vector<ClaimOutcome>& outcomes, int n) {
    if (n < 0) throw Error("select_hard_subset: n must be non-negative");
    std::vector<ClaimRecord> hard;
    for (const ClaimOutcome& out : outcomes) {
        if (static_cast<int>(hard.size()) >= n) break;
        if (!out.error.empty() || out.correct) continue;
        ClaimRecord record;
        record.id = out.id;
        record.claim = out.claim;
        record.gold = out.gold;
        record.hops = out.hops;
        record.dataset = out.dataset;
        hard.push_back(std::move(record));
    }
    return hard;
}

nlohmann::ordered_json eval_report_json(const EvalReport& report) {
    ordered_json j;
    j["dataset"] = report.dataset_name;
    j["claims"] = report.outcomes.size();
    j["completed"] = report.completed;
    j["failed"] = report.failed;
    j["macro_f1"] = report.macro_f1_score;
    ordered_json per_hop = ordered_json::object();
    for (const auto& [hops, score] : report.per_hop_macro_f1) {
        per_hop[std::to_string(hops)] = score;
    }
    j["per_hop_macro_f1"] = per_hop;
    j["uncertainty_count"] = report.uncertainty_count;
    j["avg_modification_count"] = report.avg_modification_count;
    ordered_json counts = ordered_json::object();
    for (NodeType type : kAllTypes) {
        TypeAverage avg;
        auto it = report.avg_node_counts.find(type);
        if (it != report.avg_node_counts.end()) avg = it->second;
        counts[to_string(type)] = ordered_json{{"initial", avg.initial}, {"final", avg.final_}};
    }
    j["avg_node_counts"] = counts;
    j["wall_ms"] = ordered_json{{"total", report.total_wall_ms}, {"mean", report.mean_wall_ms}};
    ordered_json outcomes = ordered_json::array();
    for (const ClaimOutcome& out : report.outcomes) {
        ordered_json o;
        o["id"] = out.id;
        o["claim"] = out.claim;
        o["gold"] = to_string(out.gold);
        if (out.error.empty()) {
            o["predicted"] = to_string(out.predicted);
            o["correct"] = out.correct;
            o["forced"] = out.forced;
            o["modification_count"] = out.modification_count;
        } else {
            o["error"] = out.error;
        }
        if (out.hops) o["hops"] = *out.hops;
        o["dataset"] = to_string(out.dataset);
        o["wall_ms"] = out.wall_ms;
        outcomes.push_back(std::move(o));
    }
    j["outcomes"] = outcomes;
    return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport report;
    if (!j.is_object()) throw Error("eval report: not a JSON object");
    report.dataset_name = j.value("dataset", std::string("custom"));
    report.completed = j.value("completed", 0);
    report.failed = j.value("failed", 0);
    report.macro_f1_score = j.value("macro_f1", 0.0);
    report.uncertainty_count = j.value("uncertainty_count", 0);
    report.avg_modification_count = j.value("avg_modification_count", 0.0);
    if (j.contains("per_hop_macro_f1") && j["per_hop_macro_f1"].is_object()) {
        for (const auto& [key, value] : j["per_hop_macro_f1"].items()) {
            report.per_hop_macro_f1[std::stoi(key)] = value.get<double>();
        }
    }
    if (j.contains("avg_node_counts") && j["avg_node_counts"].is_object()) {
        for (NodeType type : kAllTypes) {
            const std::string key = to_string(type);
            if (!j["avg_node_counts"].contains(key)) continue;
            const json& entry = j["avg_node_counts"][key];
            report.avg_node_counts[type] = {entry.value("initial", 0.0),
                                            entry.value("final", 0.0)};
        }
    }
    if (j.contains("wall_ms") && j["wall_ms"].is_object()) {
        report.total_wall_ms = j["wall_ms"].value("total", std::int64_t{0});
        report.mean_wall_ms = j["wall_ms"].value("mean", 0.0);
    }
    if (j.contains("outcomes") && j["outcomes"].is_array()) {
        for (const json& o : j["outcomes"]) {
            ClaimOutcome out;
            out.id = o.value("id", std::string());
            out.claim = o.value("claim", std::string());
            auto gold = verdict_label_from_string(o.value("gold", std::string()));
            if (gold) out.gold = *gold;
            if (o.contains("predicted")) {
                auto pred = verdict_label_from_string(o.value("predicted", std::string()));
                if (pred) out.predicted = *pred;
            }
            out.correct = o.value("correct", false);
            out.forced = o.value("forced", false);
            out.modification_count = o.value("modification_count", 0);
            if (o.contains("hops") && o["hops"].is_number_integer()) {
                out.hops = o["hops"].get<int>();
            }
            auto kind = dataset_kind_from_string(o.value("dataset", std::string("custom")));
            out.dataset = kind.value_or(DatasetKind::CUSTOM);
            out.wall_ms = o.value("wall_ms", std::int64_t{0});
            out.error = o.value("error", std::string());
            report.outcomes.push_back(std::move(out));
        }
    }
    return report;
}

std::string render_eval_report(const EvalReport& report) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << "dataset: " << report.dataset_name << " (" << report.outcomes.size() << " claims, "
        << report.completed << " completed, " << report.failed << " failed)\n";
    out << "macro-F1: " << report.macro_f1_score << "\n";
    if (!report.per_hop_macro_f1.empty()) {
        out << "per-hop macro-F1:\n";
        for (const auto& [hops, score] : report.per_hop_macro_f1) {
            out << "  " << hops << "-hop: " << score << "\n";
        }
    }
    out << "uncertain (forced verdicts): " << report.uncertainty_count << "\n";
    out.precision(2);
    out << "avg graph modifications: " << report.avg_modification_count << "\n";
    out << "avg node counts (initial -> final):\n";
    for (NodeType type : kAllTypes) {
        TypeAverage avg;
        auto it = report.avg_node_counts.find(type);
        if (it != report.avg_node_counts.end()) avg = it->second;
        out << "  " << to_string(type);
        for (std::size_t pad = to_string(type).size(); pad < 7; ++pad) out << ' ';
        out << avg.initial << " -> " << avg.final_ << "\n";
    }
    out << "wall time: total " << report.total_wall_ms << " ms, mean " << report.mean_wall_ms
        << " ms\n";
    if (report.failed > 0) {
        out << "failures:\n";
        for (const ClaimOutcome& o : report.outcomes) {
            if (o.error.empty()) continue;
            out << "  " << o.id << ": " << o.error << "\n";
        }
    }
    return out.str();
}

}  // namespace factgraph

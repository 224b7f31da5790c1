#include "factgraph/evidence.hpp"

#include "factgraph/errors.hpp"
#include "factgraph/text.hpp"

#include <unordered_set>

namespace factgraph {

std::string evidence_key(const EvidenceItem& item) {
    return item.source + '\x1f' + normalize_ws(item.content);
}

EvidenceSet merge_evidence(const std::vector<EvidenceSet>& sets) {
    EvidenceSet out;
    std::unordered_set<std::string> seen;
    for (const auto& set : sets) {
        for (const auto& item : set) {
            if (seen.insert(evidence_key(item)).second) {
                out.push_back(item);
            }
        }
    }
    for (size_t i = 0; i < out.size(); ++i) {
        out[i].rank = static_cast<int>(i + 1);
    }
    return out;
}

nlohmann::ordered_json evidence_to_json(const EvidenceSet& set) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& item : set) {
        arr.push_back({{"source", item.source},
                       {"content", item.content},
                       {"score", item.score},
                       {"rank", item.rank}});
    }
    return arr;
}

EvidenceSet evidence_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw Error("evidence: expected a JSON array");
    EvidenceSet out;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("source") || !e["source"].is_string() ||
            !e.contains("content") || !e["content"].is_string()) {
            throw Error("evidence: each item needs string source and content");
        }
        EvidenceItem item;
        item.source = e["source"].get<std::string>();
        item.content = e["content"].get<std::string>();
        item.score = e.value("score", 0.0);
        item.rank = e.value("rank", 0);
        out.push_back(std::move(item));
    }
    return out;
}

}  // namespace factgraph

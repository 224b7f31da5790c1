#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace factgraph {

/// One retrieved paragraph or web snippet with provenance.
struct EvidenceItem {
    std::string source;   // document id or URL
    std::string content;  // paragraph / snippet text
    double score = 0.0;   // BM25 score, or 1/rank for web results
    int rank = 0;         // 1-based within its result set

    bool operator==(const EvidenceItem&) const = default;
};

using EvidenceSet = std::vector<EvidenceItem>;

/// Dedupe key: source + normalized (lowercased, whitespace-collapsed) content.
std::string evidence_key(const EvidenceItem& item);

/// Concatenates the sets in argument order, keeps the first occurrence per
/// dedupe key, and reassigns ranks 1..n. Idempotent and associative.
EvidenceSet merge_evidence(const std::vector<EvidenceSet>& sets);

nlohmann::ordered_json evidence_to_json(const EvidenceSet& set);
EvidenceSet evidence_from_json(const nlohmann::json& j);

}  // namespace factgraph

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factgraph/errors.hpp"
#include "factgraph/evidence.hpp"

using namespace factgraph;

namespace {

EvidenceItem item(std::string source, std::string content, double score = 0.0, int rank = 0) {
    return EvidenceItem{std::move(source), std::move(content), score, rank};
}

}  // namespace

TEST_CASE("evidence_key combines source and normalized content") {
    CHECK(evidence_key(item("d1", "The  Quick Fox")) == evidence_key(item("d1", "the quick fox")));
    CHECK(evidence_key(item("d1", "a")) != evidence_key(item("d2", "a")));
    CHECK(evidence_key(item("d1", "a b")) != evidence_key(item("d1", "a c")));
}

TEST_CASE("merge keeps first occurrence per key and reranks") {
    EvidenceSet fresh = {item("d1", "alpha", 2.0, 1), item("d2", "beta", 1.0, 2)};
    EvidenceSet stale = {item("d2", "BETA", 0.5, 1), item("d3", "gamma", 0.4, 2)};

    EvidenceSet merged = merge_evidence({fresh, stale});
    REQUIRE(merged.size() == 3);
    CHECK(merged[0].source == "d1");
    CHECK(merged[1].source == "d2");
    CHECK(merged[1].content == "beta");  // first occurrence wins, not the restated copy
    CHECK(merged[1].score == 1.0);
    CHECK(merged[2].source == "d3");
    CHECK(merged[0].rank == 1);
    CHECK(merged[1].rank == 2);
    CHECK(merged[2].rank == 3);
}

TEST_CASE("merge is idempotent") {
    EvidenceSet a = {item("d1", "alpha", 2.0, 1), item("d2", "beta", 1.0, 2)};
    EvidenceSet once = merge_evidence({a});
    EvidenceSet twice = merge_evidence({once, once});
    CHECK(once == twice);
}

TEST_CASE("merge of empty sets is empty") {
    CHECK(merge_evidence({}).empty());
    CHECK(merge_evidence({EvidenceSet{}, EvidenceSet{}}).empty());
}

TEST_CASE("evidence json round trip") {
    EvidenceSet set = {item("d1", "alpha \"quoted\"", 2.5, 1), item("url:x", "beta\nline", 0.5, 2)};
    EvidenceSet back = evidence_from_json(evidence_to_json(set));
    CHECK(back == set);
}

TEST_CASE("evidence_from_json rejects non-arrays") {
    CHECK_THROWS_AS(evidence_from_json(nlohmann::json::object()), Error);
}

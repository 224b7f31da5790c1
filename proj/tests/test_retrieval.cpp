#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factgraph/digest.hpp"
#include "factgraph/retrieval.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace factgraph;

namespace {

std::vector<CorpusDoc> small_corpus() {
    return {
        {"alpha", "Meridian Instruments", "Meridian Instruments was founded in 1987 in Dresden."},
        {"beta", "Polarlight Optics", "Polarlight Optics was acquired by Meridian Instruments."},
        {"gamma", "Jena Glassworks", "Jena Glassworks makes window glass and mirrors."},
        {"delta", "", "meridian meridian meridian"},
    };
}

std::string random_word(std::mt19937& rng) {
    static const std::vector<std::string> words = {
        "meridian", "optics",  "founded", "dresden", "glass",   "lens",
        "acquired", "company", "mirror",  "jena",    "polar",   "light",
        "year",     "city",    "market",  "quartz",  "telescope"};
    return words[std::uniform_int_distribution<size_t>(0, words.size() - 1)(rng)];
}

}  // namespace

TEST_CASE("parse_corpus reads JSONL and reports malformed lines") {
    auto docs = parse_corpus(
        "{\"id\": \"a\", \"title\": \"T\", \"text\": \"body\"}\n"
        "\n"
        "{\"id\": \"b\", \"text\": \"untitled body\"}\n");
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].id == "a");
    CHECK(docs[0].title == "T");
    CHECK(docs[1].title.empty());

    CHECK_THROWS_WITH_AS(parse_corpus("{\"id\": \"a\", \"text\": \"x\"}\nnot json\n"),
                         doctest::Contains("line 2"), CorpusError);
    CHECK_THROWS_WITH_AS(parse_corpus("{\"title\": \"no id\", \"text\": \"x\"}\n"),
                         doctest::Contains("id"), CorpusError);
    CHECK_THROWS_WITH_AS(parse_corpus("{\"id\": \"a\"}\n"), doctest::Contains("text"),
                         CorpusError);
}

TEST_CASE("parse_corpus names both lines of a duplicate id") {
    try {
        parse_corpus(
            "{\"id\": \"a\", \"text\": \"one\"}\n"
            "{\"id\": \"b\", \"text\": \"two\"}\n"
            "{\"id\": \"a\", \"text\": \"three\"}\n");
        FAIL("expected CorpusError");
    } catch (const CorpusError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 3") != std::string::npos);
        CHECK(what.find("line 1") != std::string::npos);
        CHECK(what.find("'a'") != std::string::npos);
    }
}

TEST_CASE("load_corpus round trips through a file") {
    factgraph::testing::TempDir dir;
    const std::string path = (dir.path() / "corpus.jsonl").string();
    factgraph::testing::write_file(path, "{\"id\": \"a\", \"text\": \"body\"}\n");
    CHECK(load_corpus(path).size() == 1);
    CHECK_THROWS_AS(load_corpus((dir.path() / "absent.jsonl").string()), CorpusError);
}

TEST_CASE("bm25 search ranks by score with ascending-id tie break") {
    CorpusIndex index = CorpusIndex::build(small_corpus());
    CHECK(index.size() == 4);

    auto hits = index.search("meridian instruments founded", 10);
    REQUIRE(!hits.empty());
    // alpha contains all three query terms, so it must come first
    CHECK(hits[0].id == "alpha");
    for (size_t i = 1; i < hits.size(); ++i) {
        const bool ordered = hits[i - 1].score > hits[i].score ||
                             (hits[i - 1].score == hits[i].score && hits[i - 1].id < hits[i].id);
        CHECK(ordered);
    }

    // zero-score documents never appear
    for (const auto& hit : index.search("quartz", 10)) {
        CHECK(hit.score > 0.0);
    }
    CHECK(index.search("zzz unseen tokens", 10).empty());
    CHECK(index.search("meridian", 0).empty());
    CHECK(index.search("", 10).empty());
}

TEST_CASE("repeated query terms count once") {
    CorpusIndex index = CorpusIndex::build(small_corpus());
    auto once = index.search("meridian", 10);
    auto thrice = index.search("meridian meridian meridian", 10);
    REQUIRE(once.size() == thrice.size());
    for (size_t i = 0; i < once.size(); ++i) {
        CHECK(once[i].id == thrice[i].id);
        CHECK(once[i].score == doctest::Approx(thrice[i].score).epsilon(1e-12));
    }
}

TEST_CASE("bm25 matches a hand-computed single-term score") {
    std::vector<CorpusDoc> docs = {{"d1", "", "cat cat dog"}, {"d2", "", "dog dog dog"}};
    CorpusIndex index = CorpusIndex::build(docs);
    // n=2, df(cat)=1, idf=ln(1 + 1.5/1.5)=ln 2; tf=2, dl=3, avgdl=3
    const double idf = std::log(2.0);
    const double expected = idf * 2.0 / (2.0 + 0.9 * (1.0 - 0.4 + 0.4 * 3.0 / 3.0));
    auto hits = index.search("cat", 10);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == "d1");
    CHECK(hits[0].score == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bm25 agrees with the brute-force oracle on random corpora") {
    std::mt19937 rng(991);
    for (int round = 0; round < 60; ++round) {
        const int n_docs = std::uniform_int_distribution<int>(1, 30)(rng);
        std::vector<CorpusDoc> docs;
        for (int d = 0; d < n_docs; ++d) {
            std::string text;
            const int len = std::uniform_int_distribution<int>(1, 40)(rng);
            for (int w = 0; w < len; ++w) {
                if (!text.empty()) text += " ";
                text += random_word(rng);
            }
            docs.push_back({"doc" + std::to_string(d), "", text});
        }
        std::string query;
        const int q_len = std::uniform_int_distribution<int>(1, 5)(rng);
        for (int w = 0; w < q_len; ++w) {
            if (!query.empty()) query += " ";
            query += random_word(rng);
        }
        CorpusIndex index = CorpusIndex::build(docs);
        auto got = index.search(query, 10);
        auto want = oracle::bm25_bruteforce(docs, query, 10);
        REQUIRE_MESSAGE(got.size() == want.size(), "round " << round << " query '" << query
                                                            << "'");
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].id == want[i].id);
            CHECK(std::abs(got[i].score - want[i].score) < 1e-9);
        }
    }
}

TEST_CASE("wiki retriever renders title-prefixed evidence") {
    WikiRetriever retriever(CorpusIndex::build(small_corpus()));
    EvidenceSet results = retriever.search("polarlight acquired", 5);
    REQUIRE(!results.empty());
    CHECK(results[0].source == "beta");
    CHECK(results[0].content ==
          "Polarlight Optics: Polarlight Optics was acquired by Meridian Instruments.");
    CHECK(results[0].rank == 1);
    CHECK(retriever.strategy() == "WIKI");

    // untitled documents fall back to the bare text
    EvidenceSet untitled = retriever.search("meridian", 10);
    for (const auto& item : untitled) {
        if (item.source == "delta") CHECK(item.content == "meridian meridian meridian");
    }
}

TEST_CASE("web provider parsing handles bare and wrapped payloads") {
    const std::string bare =
        "[{\"url\": \"https://a\", \"title\": \"A\", \"snippet\": \"first\"},"
        " {\"url\": \"https://b\", \"snippet\": \"second\"}]";
    EvidenceSet results = WebRetriever::parse_provider_results(bare, 10);
    REQUIRE(results.size() == 2);
    CHECK(results[0].source == "https://a");
    CHECK(results[0].content == "A: first");
    CHECK(results[0].rank == 1);
    CHECK(results[0].score == doctest::Approx(1.0));
    CHECK(results[1].content == "second");
    CHECK(results[1].score == doctest::Approx(0.5));

    const std::string wrapped = "{\"results\": [{\"url\": \"https://a\", \"snippet\": \"x\"}]}";
    CHECK(WebRetriever::parse_provider_results(wrapped, 10).size() == 1);

    // duplicates collapse, entries without url are skipped, k truncates
    const std::string dup =
        "[{\"url\": \"https://a\", \"snippet\": \"x\"},"
        " {\"url\": \"https://a\", \"snippet\": \"x\"},"
        " {\"snippet\": \"no url\"},"
        " {\"url\": \"https://b\", \"snippet\": \"y\"},"
        " {\"url\": \"https://c\", \"snippet\": \"z\"}]";
    EvidenceSet deduped = WebRetriever::parse_provider_results(dup, 2);
    REQUIRE(deduped.size() == 2);
    CHECK(deduped[0].source == "https://a");
    CHECK(deduped[1].source == "https://b");

    CHECK_THROWS_AS(WebRetriever::parse_provider_results("not json", 5), SearchFailed);
    CHECK_THROWS_AS(WebRetriever::parse_provider_results("{\"other\": 1}", 5), SearchFailed);
}

TEST_CASE("web retriever reads fixtures keyed by query digest") {
    factgraph::testing::TempDir dir;
    const std::string query = "meridian instruments founding year";
    factgraph::testing::write_file(dir.path() / (sha256_hex(query) + ".json"),
                                   "[{\"url\": \"https://wiki/meridian\", \"title\": \"Meridian\","
                                   " \"snippet\": \"founded 1987\"}]");
    WebSearchConfig config;
    config.fixture_dir = dir.str();
    WebRetriever retriever(config);
    CHECK(retriever.strategy() == "WEB");
    EvidenceSet results = retriever.search(query, 5);
    REQUIRE(results.size() == 1);
    CHECK(results[0].source == "https://wiki/meridian");
    CHECK(results[0].content == "Meridian: founded 1987");

    CHECK_THROWS_WITH_AS(retriever.search("unrecorded query", 5),
                         doctest::Contains("no fixture"), SearchFailed);
}

TEST_CASE("web retriever without endpoint or fixtures fails") {
    WebRetriever retriever(WebSearchConfig{});
    CHECK_THROWS_AS(retriever.search("anything", 5), SearchFailed);
    CHECK(retriever.search("anything", 0).empty());
}

TEST_CASE("scripted retriever replays per-query FIFOs") {
    ScriptedRetriever retriever;
    retriever.add("q1", {EvidenceItem{"d1", "first answer", 1.0, 1}});
    retriever.add("q1", {EvidenceItem{"d2", "second answer", 1.0, 1}});
    retriever.add_failure("q2", "search: recorded outage");

    CHECK(retriever.remaining() == 3);
    CHECK(retriever.search("q1", 5)[0].source == "d1");
    CHECK(retriever.search("q1", 5)[0].source == "d2");
    CHECK_THROWS_WITH_AS(retriever.search("q1", 5), doctest::Contains("no recorded results"),
                         SearchFailed);
    CHECK_THROWS_WITH_AS(retriever.search("q2", 5), doctest::Contains("recorded outage"),
                         SearchFailed);
}

TEST_CASE("scripted retriever rebuilds from transcript events") {
    EvidenceSet recorded = {EvidenceItem{"d9", "from the log", 2.5, 1}};
    std::vector<Event> events;
    events.push_back(Event{1, "search_call", "s1", search_call_detail("q", "WEB", recorded)});
    Event failed;
    failed.event = "search_failed";
    failed.node_id = "s2";
    failed.detail = {{"query", "q"}, {"strategy", "WEB"}, {"error", "search: boom"}};
    events.push_back(failed);
    events.push_back(Event{3, "node_done", "s1", nlohmann::ordered_json::object()});

    ScriptedRetriever retriever(events);
    CHECK(retriever.strategy() == "WEB");
    CHECK(retriever.remaining() == 2);
    EvidenceSet first = retriever.search("q", 5);
    REQUIRE(first.size() == 1);
    CHECK(first[0] == recorded[0]);
    CHECK_THROWS_WITH_AS(retriever.search("q", 5), doctest::Contains("boom"), SearchFailed);
}

TEST_CASE("search_call_detail captures query, strategy, and results") {
    EvidenceSet results = {EvidenceItem{"d1", "c", 1.5, 1}};
    auto detail = search_call_detail("the query", "WIKI", results);
    CHECK(detail["query"] == "the query");
    CHECK(detail["strategy"] == "WIKI");
    REQUIRE(detail["results"].is_array());
    CHECK(detail["results"][0]["source"] == "d1");
}

#pragma once

#include "factgraph/errors.hpp"
#include "factgraph/events.hpp"
#include "factgraph/evidence.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace factgraph {

class CorpusError : public Error {
public:
    using Error::Error;
};
class SearchFailed : public Error {
public:
    using Error::Error;
};

struct CorpusDoc {
    std::string id;
    std::string title;
    std::string text;
};

/// Loads a JSONL corpus ({id, title, text} per line). Throws CorpusError with
/// the offending line number on malformed input or duplicate ids.
std::vector<CorpusDoc> load_corpus(const std::string& path);
std::vector<CorpusDoc> parse_corpus(const std::string& text);

struct ScoredDoc {
    std::string id;
    double score = 0.0;
};

/// Inverted index with BM25 ranking over title + " " + text.
/// idf = ln(1 + (N - df + 0.5) / (df + 0.5));
/// weight = idf * tf / (tf + k1 * (1 - b + b * dl / avgdl)), k1 = 0.9, b = 0.4.
/// Zero-score documents are excluded; ties break by ascending document id;
/// repeated query terms count once, in first-occurrence order.
class CorpusIndex {
public:
    static constexpr double k1 = 0.9;
    static constexpr double b = 0.4;

    static CorpusIndex build(std::vector<CorpusDoc> docs);

    std::vector<ScoredDoc> search(const std::string& query, int k) const;
    const CorpusDoc* doc(const std::string& id) const;
    size_t size() const { return docs_.size(); }
    double avgdl() const { return avgdl_; }

private:
    std::vector<CorpusDoc> docs_;
    std::unordered_map<std::string, size_t> id_to_index_;
    // term -> (doc index, term frequency), doc indices ascending
    std::unordered_map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>>
        postings_;
    std::vector<std::uint32_t> doc_len_;
    double avgdl_ = 0.0;
};

enum class SearchStrategy { WIKI, WEB };
std::string to_string(SearchStrategy strategy);
std::optional<SearchStrategy> search_strategy_from_string(const std::string& s);

/// Source of evidence for SEARCH nodes. Implementations throw SearchFailed
/// when they cannot produce results.
class Retriever {
public:
    virtual ~Retriever() = default;
    virtual EvidenceSet search(const std::string& query, int k) = 0;
    virtual std::string strategy() const = 0;
};

/// BM25 retrieval over a local corpus. Evidence source is the document id,
/// content is "title: text", score is the BM25 score.
class WikiRetriever : public Retriever {
public:
    explicit WikiRetriever(CorpusIndex index) : index_(std::move(index)) {}
    EvidenceSet search(const std::string& query, int k) override;
    std::string strategy() const override { return "WIKI"; }
    const CorpusIndex& index() const { return index_; }

private:
    CorpusIndex index_;
};

struct WebSearchConfig {
    std::string endpoint;     // search proxy returning [{url, title, snippet}]
    std::string api_key;
    std::string fixture_dir;  // when set, answers come from fixture files only
    int timeout_ms = 15000;
    int max_retries = 2;
    int backoff_base_ms = 250;
};

/// Web snippet retrieval. Evidence source is the result url, content is
/// "title: snippet", score is 1 / rank. With fixture_dir set, the response
/// for a query is read from <fixture_dir>/<sha256(query)>.json.
class WebRetriever : public Retriever {
public:
    explicit WebRetriever(WebSearchConfig config) : config_(std::move(config)) {}
    EvidenceSet search(const std::string& query, int k) override;
    std::string strategy() const override { return "WEB"; }

    /// Parses a provider payload (array of {url, title, snippet}, optionally
    /// wrapped in {"results": [...]}) into ranked evidence.
    static EvidenceSet parse_provider_results(const std::string& body, int k);

private:
    WebSearchConfig config_;
};

/// Replays recorded search traffic: each query is answered from a FIFO of
/// recorded outcomes (search_call results or search_failed errors). A query
/// with no recorded outcome throws SearchFailed, which is how replay detects
/// divergence from the recorded run.
class ScriptedRetriever : public Retriever {
public:
    struct Recorded {
        bool ok = true;
        EvidenceSet results;
        std::string error;
    };

    ScriptedRetriever() = default;
    explicit ScriptedRetriever(const std::vector<Event>& events);

    void add(const std::string& query, EvidenceSet results);
    void add_failure(const std::string& query, std::string error);
    EvidenceSet search(const std::string& query, int k) override;
    std::string strategy() const override { return strategy_; }
    size_t remaining() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::deque<Recorded>> by_query_;
    std::string strategy_ = "WIKI";
};

/// The payload stored under "detail" in a search_call transcript event.
nlohmann::ordered_json search_call_detail(const std::string& query, const std::string& strategy,
                                          const EvidenceSet& results);

}  // namespace factgraph

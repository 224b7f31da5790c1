#include "factgraph/retrieval.hpp"

#include "factgraph/digest.hpp"
#include "factgraph/text.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace factgraph {

std::vector<CorpusDoc> parse_corpus(const std::string& text) {
    std::vector<CorpusDoc> docs;
    std::unordered_map<std::string, int> seen;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw CorpusError("corpus: line " + std::to_string(line_no) + ": malformed JSON");
        }
        if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
            throw CorpusError("corpus: line " + std::to_string(line_no) +
                              ": missing or empty id");
        }
        if (!j.contains("text") || !j["text"].is_string()) {
            throw CorpusError("corpus: line " + std::to_string(line_no) + ": missing text");
        }
        CorpusDoc doc;
        doc.id = j["id"].get<std::string>();
        doc.title = j.value("title", std::string());
        doc.text = j["text"].get<std::string>();
        auto [it, inserted] = seen.emplace(doc.id, line_no);
        if (!inserted) {
            throw CorpusError("corpus: line " + std::to_string(line_no) + ": duplicate id '" +
                              doc.id + "' (first seen on line " + std::to_string(it->second) +
                              ")");
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<CorpusDoc> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("corpus: cannot read '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_corpus(buffer.str());
}

CorpusIndex CorpusIndex::build(std::vector<CorpusDoc> docs) {
    CorpusIndex index;
    index.docs_ = std::move(docs);
    index.doc_len_.reserve(index.docs_.size());
    std::uint64_t total_len = 0;
    for (size_t i = 0; i < index.docs_.size(); ++i) {
        const CorpusDoc& doc = index.docs_[i];
        index.id_to_index_.emplace(doc.id, i);
        std::vector<std::string> tokens = tokenize(doc.title + " " + doc.text);
        index.doc_len_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_len += tokens.size();
        std::map<std::string, std::uint32_t> counts;
        for (const std::string& token : tokens) counts[token] += 1;
        for (const auto& [term, tf] : counts) {
            index.postings_[term].emplace_back(static_cast<std::uint32_t>(i), tf);
        }
    }
    index.avgdl_ =
        index.docs_.empty() ? 0.0 : static_cast<double>(total_len) / index.docs_.size();
    return index;
}

std::vector<ScoredDoc> CorpusIndex::search(const std::string& query, int k) const {
    if (k <= 0 || docs_.empty()) return {};
    std::vector<std::string> terms = tokenize(query);
    std::vector<std::string> unique_terms;
    for (const std::string& term : terms) {
        if (std::find(unique_terms.begin(), unique_terms.end(), term) == unique_terms.end()) {
            unique_terms.push_back(term);
        }
    }

    const double n = static_cast<double>(docs_.size());
    std::vector<double> scores(docs_.size(), 0.0);
    for (const std::string& term : unique_terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& posting = it->second;
        const double df = static_cast<double>(posting.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& [doc_index, tf_count] : posting) {
            const double tf = static_cast<double>(tf_count);
            const double dl = static_cast<double>(doc_len_[doc_index]);
            const double norm = tf + k1 * (1.0 - b + b * dl / avgdl_);
            scores[doc_index] += idf * tf / norm;
        }
    }

    std::vector<ScoredDoc> hits;
    for (size_t i = 0; i < docs_.size(); ++i) {
        if (scores[i] > 0.0) hits.push_back({docs_[i].id, scores[i]});
    }
    std::sort(hits.begin(), hits.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (hits.size() > static_cast<size_t>(k)) hits.resize(static_cast<size_t>(k));
    return hits;
}

const CorpusDoc* CorpusIndex::doc(const std::string& id) const {
    auto it = id_to_index_.find(id);
    return it == id_to_index_.end() ? nullptr : &docs_[it->second];
}

std::string to_string(SearchStrategy strategy) {
    return strategy == SearchStrategy::WIKI ? "WIKI" : "WEB";
}

std::optional<SearchStrategy> search_strategy_from_string(const std::string& s) {
    if (s == "WIKI") return SearchStrategy::WIKI;
    if (s == "WEB") return SearchStrategy::WEB;
    return std::nullopt;
}

EvidenceSet WikiRetriever::search(const std::string& query, int k) {
    EvidenceSet results;
    int rank = 1;
    for (const ScoredDoc& hit : index_.search(query, k)) {
        const CorpusDoc* doc = index_.doc(hit.id);
        EvidenceItem item;
        item.source = hit.id;
        item.content = doc->title.empty() ? doc->text : doc->title + ": " + doc->text;
        item.score = hit.score;
        item.rank = rank++;
        results.push_back(std::move(item));
    }
    return results;
}

namespace {

std::string url_encode(const std::string& value) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : value) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

std::pair<std::string, std::string> split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw SearchFailed("search: endpoint '" + url + "' has no scheme");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/search"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

EvidenceSet WebRetriever::parse_provider_results(const std::string& body, int k) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) throw SearchFailed("search: provider returned malformed JSON");
    if (j.is_object() && j.contains("results")) j = j["results"];
    if (!j.is_array()) throw SearchFailed("search: provider payload is not a result array");
    EvidenceSet results;
    std::unordered_set<std::string> seen;
    for (const auto& item : j) {
        if (static_cast<int>(results.size()) >= k) break;
        if (!item.is_object() || !item.contains("url") || !item["url"].is_string()) continue;
        std::string title = item.value("title", std::string());
        std::string snippet = item.value("snippet", std::string());
        EvidenceItem e;
        e.source = item["url"].get<std::string>();
        e.content = title.empty() ? snippet : title + ": " + snippet;
        if (!seen.insert(evidence_key(e)).second) continue;
        e.rank = static_cast<int>(results.size()) + 1;
        e.score = 1.0 / e.rank;
        results.push_back(std::move(e));
    }
    return results;
}

EvidenceSet WebRetriever::search(const std::string& query, int k) {
    if (k <= 0) return {};
    if (!config_.fixture_dir.empty()) {
        std::string path = config_.fixture_dir + "/" + sha256_hex(query) + ".json";
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw SearchFailed("search: no fixture for query (expected '" + path + "')");
        }
        std::stringstream buffer;
        buffer << in.rdbuf();
        return parse_provider_results(buffer.str(), k);
    }
    if (config_.endpoint.empty()) {
        throw SearchFailed("search: web search requires an endpoint or a fixture directory");
    }

    auto [base, path] = split_endpoint(config_.endpoint);
    std::string full_path = path + (path.find('?') == std::string::npos ? "?" : "&") +
                            "q=" + url_encode(query) + "&k=" + std::to_string(k);
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            int delay = config_.backoff_base_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client client(base);
        client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
        client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        httplib::Result result = client.Get(full_path, headers);
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 400 && result->status < 500) {
            throw SearchFailed("search: HTTP " + std::to_string(result->status) + ": " +
                               result->body);
        }
        if (result->status != 200) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        return parse_provider_results(result->body, k);
    }
    throw SearchFailed("search: giving up after " + std::to_string(config_.max_retries + 1) +
                       " attempts: " + last_error);
}

ScriptedRetriever::ScriptedRetriever(const std::vector<Event>& events) {
    bool strategy_set = false;
    for (const Event& e : events) {
        if (e.event != "search_call" && e.event != "search_failed") continue;
        std::string query = e.detail.value("query", std::string());
        Recorded rec;
        if (e.event == "search_call") {
            if (e.detail.contains("results")) rec.results = evidence_from_json(e.detail["results"]);
        } else {
            rec.ok = false;
            rec.error = e.detail.value("error", std::string("search: recorded failure"));
        }
        by_query_[query].push_back(std::move(rec));
        if (!strategy_set && e.detail.contains("strategy")) {
            strategy_ = e.detail.value("strategy", std::string("WIKI"));
            strategy_set = true;
        }
    }
}

void ScriptedRetriever::add(const std::string& query, EvidenceSet results) {
    std::lock_guard<std::mutex> lock(mutex_);
    by_query_[query].push_back(Recorded{true, std::move(results), ""});
}

void ScriptedRetriever::add_failure(const std::string& query, std::string error) {
    std::lock_guard<std::mutex> lock(mutex_);
    by_query_[query].push_back(Recorded{false, {}, std::move(error)});
}

EvidenceSet ScriptedRetriever::search(const std::string& query, int /*k*/) {
    Recorded rec;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = by_query_.find(query);
        if (it == by_query_.end() || it->second.empty()) {
            throw SearchFailed("search: no recorded results for query: " + query);
        }
        rec = std::move(it->second.front());
        it->second.pop_front();
    }
    if (!rec.ok) throw SearchFailed(rec.error);
    return rec.results;
}

size_t ScriptedRetriever::remaining() const {
    std::lock_guard<std::mutex> lock(mutex_);
    size_t count = 0;
    for (const auto& [query, queue] : by_query_) count += queue.size();
    return count;
}

nlohmann::ordered_json search_call_detail(const std::string& query, const std::string& strategy,
                                          const EvidenceSet& results) {
    nlohmann::ordered_json detail;
    detail["query"] = query;
    detail["strategy"] = strategy;
    detail["results"] = evidence_to_json(results);
    return detail;
}

}  // namespace factgraph

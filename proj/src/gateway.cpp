#include "factgraph/gateway.hpp"

#include "factgraph/digest.hpp"

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

namespace factgraph {

std::string to_string(GatewayRole role) {
    switch (role) {
        case GatewayRole::PLANNER: return "PLANNER";
        case GatewayRole::SEARCH_QUERY: return "SEARCH_QUERY";
        case GatewayRole::REFINE: return "REFINE";
        case GatewayRole::THINK: return "THINK";
        case GatewayRole::JUDGE: return "JUDGE";
    }
    return "THINK";
}

std::optional<GatewayRole> gateway_role_from_string(const std::string& s) {
    if (s == "PLANNER") return GatewayRole::PLANNER;
    if (s == "SEARCH_QUERY") return GatewayRole::SEARCH_QUERY;
    if (s == "REFINE") return GatewayRole::REFINE;
    if (s == "THINK") return GatewayRole::THINK;
    if (s == "JUDGE") return GatewayRole::JUDGE;
    return std::nullopt;
}

ResponseFormat format_for_role(GatewayRole role) {
    switch (role) {
        case GatewayRole::PLANNER: return ResponseFormat::JSON_ARRAY;
        case GatewayRole::THINK:
        case GatewayRole::JUDGE: return ResponseFormat::JSON_OBJECT;
        case GatewayRole::SEARCH_QUERY:
        case GatewayRole::REFINE: return ResponseFormat::FREE_TEXT;
    }
    return ResponseFormat::FREE_TEXT;
}

GatewayRequest make_request(GatewayRole role, std::string prompt) {
    GatewayRequest request;
    request.role = role;
    request.prompt = std::move(prompt);
    request.response_format = format_for_role(role);
    return request;
}

nlohmann::ordered_json call_record_detail(const CallRecord& record) {
    nlohmann::ordered_json detail;
    detail["role"] = to_string(record.role);
    detail["prompt_digest"] = record.prompt_digest;
    detail["prompt"] = record.prompt;
    detail["response"] = record.response;
    detail["latency_ms"] = record.latency_ms;
    return detail;
}

CallRecord call_record_from_detail(const nlohmann::ordered_json& detail) {
    if (!detail.is_object()) throw Error("gateway: call detail must be an object");
    CallRecord record;
    std::string role = detail.value("role", std::string());
    auto parsed = gateway_role_from_string(role);
    if (!parsed) throw Error("gateway: unknown role '" + role + "' in call detail");
    record.role = *parsed;
    record.prompt = detail.value("prompt", std::string());
    record.prompt_digest = detail.value("prompt_digest", std::string());
    if (record.prompt_digest.empty() && !record.prompt.empty()) {
        record.prompt_digest = sha256_hex(record.prompt);
    }
    record.response = detail.value("response", std::string());
    record.latency_ms = detail.value("latency_ms", 0);
    return record;
}

void Transcript::add(CallRecord record) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = digest_to_prompt_.try_emplace(record.prompt_digest, record.prompt);
    if (!inserted && it->second != record.prompt) {
        throw GatewayError("transcript: digest collision on " + record.prompt_digest);
    }
    records_.push_back(std::move(record));
}

std::vector<CallRecord> Transcript::records() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return records_;
}

size_t Transcript::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return records_.size();
}

namespace {

// Splits a URL into the scheme://host[:port] base httplib wants and the
// request path.
std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw GatewayError("gateway: endpoint '" + url + "' has no scheme");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw GatewayError("gateway: remote backend requires an endpoint");
    }
}

std::string RemoteBackend::build_payload(const RemoteConfig& config,
                                         const GatewayRequest& request) {
    nlohmann::ordered_json body;
    body["model"] = config.model;
    body["messages"] = nlohmann::ordered_json::array(
        {nlohmann::ordered_json{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = 0;
    if (request.response_format == ResponseFormat::JSON_OBJECT) {
        body["response_format"] = nlohmann::ordered_json{{"type", "json_object"}};
    }
    return body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string RemoteBackend::complete(const GatewayRequest& request) {
    auto [base, path] = split_url(config_.endpoint);
    std::string payload = build_payload(config_, request);

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
        httplib::Result result = client.Post(path, headers, payload, "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 400 && result->status < 500) {
            throw GatewayError("gateway: HTTP " + std::to_string(result->status) + ": " +
                               result->body);
        }
        if (result->status != 200) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        nlohmann::json body = nlohmann::json::parse(result->body, nullptr, false);
        if (body.is_discarded() || !body.contains("choices") || !body["choices"].is_array() ||
            body["choices"].empty()) {
            last_error = "malformed completion body";
            continue;
        }
        const auto& message = body["choices"][0]["message"];
        if (!message.is_object() || !message.contains("content") ||
            !message["content"].is_string()) {
            last_error = "completion without message content";
            continue;
        }
        return message["content"].get<std::string>();
    }
    throw GatewayError("gateway: giving up after " + std::to_string(config_.max_retries + 1) +
                       " attempts: " + last_error);
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries, bool simulate)
    : simulate_latency(simulate) {
    for (ScriptEntry& entry : entries) add(std::move(entry));
}

void ScriptedBackend::add(ScriptEntry entry) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (entry.prompt_digest.empty()) {
        by_role_[static_cast<int>(entry.role)].push_back(std::move(entry));
    } else {
        by_digest_[{static_cast<int>(entry.role), entry.prompt_digest}].push_back(
            std::move(entry));
    }
}

void ScriptedBackend::add_response(GatewayRole role, std::string response, int latency_ms) {
    add(ScriptEntry{role, "", std::move(response), latency_ms});
}

void ScriptedBackend::add_response_for(GatewayRole role, const std::string& prompt,
                                       std::string response, int latency_ms) {
    add(ScriptEntry{role, sha256_hex(prompt), std::move(response), latency_ms});
}

std::string ScriptedBackend::complete(const GatewayRequest& request) {
    ScriptEntry entry;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        std::string digest = sha256_hex(request.prompt);
        auto it = by_digest_.find({static_cast<int>(request.role), digest});
        if (it != by_digest_.end() && !it->second.empty()) {
            entry = std::move(it->second.front());
            it->second.pop_front();
        } else {
            auto role_it = by_role_.find(static_cast<int>(request.role));
            if (role_it == by_role_.end() || role_it->second.empty()) {
                std::string head = request.prompt.substr(0, 80);
                throw ScriptMiss("script: no entry for role " + to_string(request.role) +
                                 ", digest " + digest + ", prompt head: " + head);
            }
            entry = std::move(role_it->second.front());
            role_it->second.pop_front();
        }
    }
    if (simulate_latency && entry.latency_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(entry.latency_ms));
    }
    return entry.response;
}

size_t ScriptedBackend::remaining() const {
    std::lock_guard<std::mutex> lock(mutex_);
    size_t count = 0;
    for (const auto& [key, queue] : by_digest_) count += queue.size();
    for (const auto& [role, queue] : by_role_) count += queue.size();
    return count;
}

std::vector<ScriptEntry> script_from_events(const std::vector<Event>& events) {
    std::vector<ScriptEntry> entries;
    for (const Event& e : events) {
        if (e.event != "gateway_call") continue;
        CallRecord record = call_record_from_detail(e.detail);
        entries.push_back(
            ScriptEntry{record.role, record.prompt_digest, record.response, record.latency_ms});
    }
    return entries;
}

std::vector<ScriptEntry> load_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("script: cannot read '" + path + "'");
    std::vector<ScriptEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error("script: malformed JSON on line " + std::to_string(line_no));
        }
        try {
            if (j.contains("event")) {
                Event e = event_from_json(j);
                if (e.event != "gateway_call") continue;
                CallRecord record = call_record_from_detail(e.detail);
                entries.push_back(ScriptEntry{record.role, record.prompt_digest, record.response,
                                              record.latency_ms});
            } else {
                CallRecord record = call_record_from_detail(j);
                entries.push_back(ScriptEntry{record.role, record.prompt_digest, record.response,
                                              record.latency_ms});
            }
        } catch (const Error& e) {
            throw Error("script: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return entries;
}

std::string Gateway::call(const GatewayRequest& request) {
    auto start = std::chrono::steady_clock::now();
    std::string response = backend_->complete(request);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    CallRecord record;
    record.role = request.role;
    record.prompt = request.prompt;
    record.prompt_digest = sha256_hex(request.prompt);
    record.response = response;
    record.latency_ms = static_cast<int>(elapsed);
    transcript_.add(record);
    if (on_call) on_call(record);
    return response;
}

}  // namespace factgraph

#pragma once

#include "factgraph/errors.hpp"
#include "factgraph/events.hpp"

#include <nlohmann/json.hpp>

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace factgraph {

enum class GatewayRole { PLANNER, SEARCH_QUERY, REFINE, THINK, JUDGE };
enum class ResponseFormat { FREE_TEXT, JSON_OBJECT, JSON_ARRAY };

std::string to_string(GatewayRole role);
std::optional<GatewayRole> gateway_role_from_string(const std::string& s);

/// The format each role is contractually expected to produce.
ResponseFormat format_for_role(GatewayRole role);

struct GatewayRequest {
    GatewayRole role = GatewayRole::THINK;
    std::string prompt;
    ResponseFormat response_format = ResponseFormat::FREE_TEXT;
};

/// Builds a request with the response format derived from the role.
GatewayRequest make_request(GatewayRole role, std::string prompt);

class GatewayError : public Error {
public:
    using Error::Error;
};

/// A scripted backend had no entry for the requested (role, prompt).
class ScriptMiss : public GatewayError {
public:
    using GatewayError::GatewayError;
};

struct CallRecord {
    GatewayRole role = GatewayRole::THINK;
    std::string prompt;
    std::string prompt_digest;
    std::string response;
    int latency_ms = 0;
};

/// The payload stored under "detail" in a gateway_call transcript event.
nlohmann::ordered_json call_record_detail(const CallRecord& record);
CallRecord call_record_from_detail(const nlohmann::ordered_json& detail);

/// Thread-safe, append-only record of every model exchange. Rejects two
/// different prompts mapping to one digest.
class Transcript {
public:
    void add(CallRecord record);
    std::vector<CallRecord> records() const;
    size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
    std::unordered_map<std::string, std::string> digest_to_prompt_;
};

class GatewayBackend {
public:
    virtual ~GatewayBackend() = default;
    virtual std::string complete(const GatewayRequest& request) = 0;
};

struct RemoteConfig {
    std::string endpoint;  // full URL of a chat-completions route
    std::string model;
    std::string api_key;
    int timeout_ms = 30000;
    int max_retries = 2;
    int backoff_base_ms = 250;
};

/// Chat-completions client: temperature 0, structured output requested only
/// for JSON_OBJECT, transient failures retried with exponential backoff,
/// client errors surfaced immediately.
class RemoteBackend : public GatewayBackend {
public:
    explicit RemoteBackend(RemoteConfig config);
    std::string complete(const GatewayRequest& request) override;

    /// Exposed for tests: the exact request body sent over the wire.
    static std::string build_payload(const RemoteConfig& config, const GatewayRequest& request);

private:
    RemoteConfig config_;
};

struct ScriptEntry {
    GatewayRole role = GatewayRole::THINK;
    std::string prompt_digest;  // empty entries match any prompt for the role
    std::string response;
    int latency_ms = 0;
};

/// Deterministic playback backend. Exact-prompt entries are consumed first
/// (FIFO per digest), then digest-free entries FIFO per role. A miss throws
/// ScriptMiss.
class ScriptedBackend : public GatewayBackend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<ScriptEntry> entries, bool simulate_latency = false);

    void add(ScriptEntry entry);
    void add_response(GatewayRole role, std::string response, int latency_ms = 0);
    void add_response_for(GatewayRole role, const std::string& prompt, std::string response,
                          int latency_ms = 0);

    std::string complete(const GatewayRequest& request) override;
    size_t remaining() const;

    /// When set, complete() sleeps for the entry's recorded latency.
    bool simulate_latency = false;

private:
    mutable std::mutex mutex_;
    std::map<std::pair<int, std::string>, std::deque<ScriptEntry>> by_digest_;
    std::map<int, std::deque<ScriptEntry>> by_role_;
};

/// Builds script entries from recorded transcript events (event == "gateway_call").
std::vector<ScriptEntry> script_from_events(const std::vector<Event>& events);
/// Loads a script file: each line either a transcript event or a bare entry
/// {role, response, prompt | prompt_digest, latency_ms}.
std::vector<ScriptEntry> load_script(const std::string& path);

/// Front door for all model calls: delegates to a backend, measures latency,
/// and appends every successful exchange to the transcript.
class Gateway {
public:
    explicit Gateway(GatewayBackend& backend) : backend_(&backend) {}

    std::string call(const GatewayRequest& request);

    const Transcript& transcript() const { return transcript_; }

    /// Optional sink invoked after each successful call (used to stream
    /// gateway_call events into a run's event log).
    std::function<void(const CallRecord&)> on_call;

private:
    GatewayBackend* backend_;
    Transcript transcript_;
};

}  // namespace factgraph

#pragma once

#include "factgraph/errors.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

namespace factgraph {

/// One audit-trail entry. `detail` is event-specific structured payload.
struct Event {
    std::int64_t ts_ms = 0;
    std::string event;
    std::string node_id;  // empty for run-level events
    nlohmann::ordered_json detail = nlohmann::ordered_json::object();
};

std::int64_t now_ms();

nlohmann::ordered_json event_to_json(const Event& e);
Event event_from_json(const nlohmann::ordered_json& j);
std::string events_to_jsonl(const std::vector<Event>& events);

/// Append-only, thread-safe event collector. One run produces one log.
class EventLog {
public:
    void append(Event e);
    /// Stamps the current wall clock and appends.
    void emit(std::string event, std::string node_id,
              nlohmann::ordered_json detail = nlohmann::ordered_json::object());

    std::vector<Event> events() const;
    size_t size() const;
    void clear();

    std::string to_jsonl() const;
    void write_jsonl(const std::string& path) const;

private:
    mutable std::mutex mutex_;
    std::vector<Event> events_;
};

/// Parses a JSONL transcript. Throws Error naming the first malformed line.
std::vector<Event> load_jsonl(const std::string& path);
std::vector<Event> parse_jsonl(const std::string& text);

}  // namespace factgraph

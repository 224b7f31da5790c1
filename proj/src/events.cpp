#include "factgraph/events.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace factgraph {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

nlohmann::ordered_json event_to_json(const Event& e) {
    nlohmann::ordered_json j;
    j["ts"] = e.ts_ms;
    j["event"] = e.event;
    j["node_id"] = e.node_id;
    j["detail"] = e.detail;
    return j;
}

Event event_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw Error("event: expected a JSON object");
    if (!j.contains("event") || !j["event"].is_string()) {
        throw Error("event: missing event name");
    }
    Event e;
    e.ts_ms = j.value("ts", std::int64_t{0});
    e.event = j["event"].get<std::string>();
    e.node_id = j.value("node_id", std::string());
    if (j.contains("detail")) e.detail = j["detail"];
    return e;
}

void EventLog::append(Event e) {
    std::lock_guard<std::mutex> lock(mutex_);
    events_.push_back(std::move(e));
}

void EventLog::emit(std::string event, std::string node_id, nlohmann::ordered_json detail) {
    Event e;
    e.ts_ms = now_ms();
    e.event = std::move(event);
    e.node_id = std::move(node_id);
    e.detail = std::move(detail);
    append(std::move(e));
}

std::vector<Event> EventLog::events() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return events_;
}

size_t EventLog::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return events_.size();
}

void EventLog::clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    events_.clear();
}

std::string events_to_jsonl(const std::vector<Event>& events) {
    std::ostringstream out;
    for (const Event& e : events) {
        out << event_to_json(e).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)
            << "\n";
    }
    return out.str();
}

std::string EventLog::to_jsonl() const {
    return events_to_jsonl(events());
}

void EventLog::write_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("events: cannot write '" + path + "'");
    out << to_jsonl();
}

std::vector<Event> parse_jsonl(const std::string& text) {
    std::vector<Event> events;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw Error("events: malformed JSON on line " + std::to_string(line_no));
        }
        try {
            events.push_back(event_from_json(j));
        } catch (const Error& e) {
            throw Error("events: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return events;
}

std::vector<Event> load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("events: cannot read '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_jsonl(buffer.str());
}

}  // namespace factgraph

#pragma once

#include "atelier/graph.hpp"

#include <string>
#include <vector>

namespace atelier {

struct TraceEvent {
    int seq = 0;
    std::string event;  // node-opened, call-proposed, call-executed, evaluated,
                        // feedback-recorded, backtracked, terminated, warning
    int node = -1;
    ordered_json detail;
    long long ts_ms = 0;
};

class Trace {
public:
    void push(const std::string& event, int node, ordered_json detail);

    const std::vector<TraceEvent>& events() const { return events_; }

    size_t count(const std::string& event) const;

    // Newline-delimited JSON, one event per line. Timestamps can be dropped
    // for byte-level determinism comparisons.
    std::string to_ndjson(bool include_timestamps = true) const;
    void write(const std::string& path) const;

private:
    std::vector<TraceEvent> events_;
    int next_seq_ = 0;
};

}  // namespace atelier

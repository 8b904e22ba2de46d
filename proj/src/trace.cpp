#include "atelier/trace.hpp"

#include "atelier/util.hpp"

#include <chrono>
#include <sstream>

namespace atelier {

void Trace::push(const std::string& event, int node, ordered_json detail) {
    TraceEvent e;
    e.seq = next_seq_++;
    e.event = event;
    e.node = node;
    e.detail = std::move(detail);
    e.ts_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::system_clock::now().time_since_epoch())
                  .count();
    events_.push_back(std::move(e));
}

size_t Trace::count(const std::string& event) const {
    size_t n = 0;
    for (const TraceEvent& e : events_) {
        if (e.event == event) ++n;
    }
    return n;
}

std::string Trace::to_ndjson(bool include_timestamps) const {
    std::ostringstream out;
    for (const TraceEvent& e : events_) {
        ordered_json line = ordered_json::object();
        line["seq"] = e.seq;
        line["event"] = e.event;
        line["node"] = e.node;
        line["detail"] = e.detail;
        if (include_timestamps) line["ts_ms"] = e.ts_ms;
        out << line.dump() << "\n";
    }
    return out.str();
}

void Trace::write(const std::string& path) const {
    write_file(path, to_ndjson());
}

}  // namespace atelier

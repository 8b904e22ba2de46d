#pragma once

#include "atelier/backend.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>

namespace atelier {

struct WorkflowSimProfile {
    double success_prob = 1.0;
    double quality_mean = 0.8;
    double quality_stddev = 0.1;
    int latency_lo_ms = 5;
    int latency_hi_ms = 25;
};

struct SimProfile {
    std::map<std::string, WorkflowSimProfile> per_workflow;
    WorkflowSimProfile fallback;
    uint64_t seed = 0;
    // Success multiplier when a previously failed submission is resubmitted
    // byte-identically (a blind retry). 1.0 disables the penalty.
    double repeat_failure_penalty = 1.0;
};

// Deterministic stand-in for a generation server: walks the graph in
// topological order, draws success per the owning workflow's profile, and
// writes synthetic artifacts that embed the drawn quality scalar.
class SimBackend : public Backend {
public:
    SimBackend(SimProfile profile, std::string artifacts_dir);

    ExecutionOutcome execute(const WorkflowGraph& graph, double timeout_s) override;

    int jobs() const { return draw_count_; }
    int structural_failures() const { return structural_failures_; }

private:
    SimProfile profile_;
    std::string artifacts_dir_;
    std::mt19937_64 rng_;
    int draw_count_ = 0;
    int structural_failures_ = 0;
    std::set<uint64_t> failed_signatures_;
};

// Payload schema of synthetic artifacts.
struct SimArtifactPayload {
    std::string workflow;
    uint64_t seed = 0;
    int draw = 0;
    double quality = 0;
};

SimArtifactPayload parse_sim_artifact(const std::string& path);

}  // namespace atelier

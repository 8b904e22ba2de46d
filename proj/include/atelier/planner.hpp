#pragma once

#include "atelier/agents.hpp"
#include "atelier/backend.hpp"
#include "atelier/swi.hpp"
#include "atelier/trace.hpp"
#include "atelier/workspace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace atelier {

struct PlanConfig {
    int max_depth = 6;
    int max_children_per_node = 3;
    int max_total_expansions = 24;
    EvalThreshold threshold = EvalThreshold::Normal;
    // When set, intermediate (non-terminal) edges also go through the
    // evaluation agent instead of the execution-success check alone.
    bool evaluate_intermediate = false;
    double job_timeout_s = 600;
};

struct AttemptRecord {
    SwiCall call;
    bool terminate_attempt = false;
    bool executed = false;
    ExecutionOutcome outcome;
    std::optional<int> child;
    std::string feedback;  // present iff the attempt or its subtree failed
    bool failed = false;
};

enum class NodeStatus { Open, Expanded, Succeeded, FailedExhausted };

struct PlanNode {
    int id = 0;
    std::optional<int> parent;
    std::optional<int> via_attempt;  // index into parent's attempts
    int depth = 0;
    Workspace workspace;
    std::vector<SwiCall> proposed_chain;  // advisory tail from the parent
    std::vector<AttemptRecord> attempts;
    NodeStatus status = NodeStatus::Open;
};

enum class TaskStatus { Resolved, UnresolvedExhausted, UnresolvedBudget };

const char* task_status_name(TaskStatus status);

struct TaskResult {
    TaskStatus status = TaskStatus::UnresolvedExhausted;
    std::vector<std::string> final_artifacts;
    int expansions = 0;  // executed backend jobs
    Trace trace;
    Workspace final_workspace;
    std::vector<PlanNode> tree;
};

// Preprocessing step; adapter faults fall back to the raw instruction with a
// warning recorded in the trace.
std::string preprocess(const std::string& instruction, const AgentBundle& agents,
                       Trace* trace);

class PlanEngine {
public:
    PlanEngine(const Library& library, AgentBundle agents, Backend& backend,
               PlanConfig config);

    TaskResult run(const std::string& instruction,
                   const std::vector<std::string>& input_artifacts);

private:
    const Library& library_;
    AgentBundle agents_;
    Backend& backend_;
    PlanConfig config_;
};

TaskResult run_task(const std::string& instruction,
                    const std::vector<std::string>& input_artifacts,
                    const Library& library, AgentBundle agents, Backend& backend,
                    const PlanConfig& config);

}  // namespace atelier

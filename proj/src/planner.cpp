#include "atelier/planner.hpp"

#include "atelier/util.hpp"

#include <cassert>
#include <filesystem>

namespace atelier {

const char* task_status_name(TaskStatus status) {
    switch (status) {
        case TaskStatus::Resolved: return "resolved";
        case TaskStatus::UnresolvedExhausted: return "unresolved-exhausted";
        case TaskStatus::UnresolvedBudget: return "unresolved-budget";
    }
    return "unresolved-exhausted";
}

std::string preprocess(const std::string& instruction, const AgentBundle& agents,
                       Trace* trace) {
    try {
        return agents.preprocessor->preprocess(instruction);
    } catch (const std::exception& e) {
        if (trace) {
            trace->push("warning", -1,
                        ordered_json{{"kind", "preprocess-fallback"},
                                     {"detail", e.what()}});
        }
        return instruction;
    }
}

namespace {

std::vector<std::string> collect_feedback(const PlanNode& node) {
    std::vector<std::string> history;
    for (const AttemptRecord& a : node.attempts) {
        if (a.failed && !a.feedback.empty()) history.push_back(a.feedback);
    }
    return history;
}

ordered_json chain_names(const std::vector<SwiCall>& chain) {
    ordered_json names = ordered_json::array();
    for (const SwiCall& c : chain) names.push_back(c.workflow_name);
    return names;
}

ArtifactKind artifact_kind_for(TaskKind kind) {
    switch (kind) {
        case TaskKind::TextToImage:
        case TaskKind::ImageToImage:
            return ArtifactKind::Image;
        case TaskKind::TextToVideo:
        case TaskKind::ImageToVideo:
        case TaskKind::VideoToVideo:
            return ArtifactKind::Video;
        case TaskKind::Auxiliary:
            return ArtifactKind::Other;
    }
    return ArtifactKind::Other;
}

}  // namespace

PlanEngine::PlanEngine(const Library& library, AgentBundle agents,
                       Backend& backend, PlanConfig config)
    : library_(library), agents_(agents), backend_(backend), config_(config) {
    assert(agents_.complete());
    assert(config_.max_depth >= 1 && config_.max_children_per_node >= 1 &&
           config_.max_total_expansions >= 1);
}

TaskResult PlanEngine::run(const std::string& instruction,
                           const std::vector<std::string>& input_artifacts) {
    TaskResult result;
    Trace& trace = result.trace;

    std::string enriched = preprocess(instruction, agents_, &trace);

    Workspace root_ws;
    root_ws.instruction = instruction;
    root_ws.enriched_spec = enriched;
    for (const std::string& path : input_artifacts) {
        ArtifactRecord record;
        record.path = path;
        record.kind = ArtifactKind::Other;
        record.origin_node = -1;
        record.fingerprint = fingerprint_file(path);
        root_ws.artifacts.push_back(std::move(record));
        root_ws.add_context("input artifact " + path);
    }

    if (library_.empty()) {
        trace.push("feedback-recorded", 0,
                   ordered_json{{"feedback", "no applicable workflow"}});
        trace.push("terminated", 0,
                   ordered_json{{"status", task_status_name(TaskStatus::UnresolvedExhausted)}});
        result.status = TaskStatus::UnresolvedExhausted;
        result.final_workspace = root_ws;
        return result;
    }

    const std::string library_context = library_.render_context();

    std::vector<PlanNode>& nodes = result.tree;
    nodes.push_back(PlanNode{0, std::nullopt, std::nullopt, 0, std::move(root_ws),
                             {}, {}, NodeStatus::Open});
    trace.push("node-opened", 0, ordered_json{{"depth", 0}});

    int executed = 0;
    int cur = 0;
    std::optional<TaskStatus> final_status;

    auto record_failure = [&](PlanNode& node, AttemptRecord attempt,
                              const std::string& feedback) {
        attempt.failed = true;
        attempt.feedback = feedback;
        node.attempts.push_back(std::move(attempt));
        trace.push("feedback-recorded", node.id, ordered_json{{"feedback", feedback}});
    };

    while (!final_status) {
        PlanNode& node = nodes[cur];

        if (static_cast<int>(node.attempts.size()) >= config_.max_children_per_node) {
            // retry budget at this level exhausted: propagate one level up
            node.status = NodeStatus::FailedExhausted;
            trace.push("backtracked", node.id,
                       ordered_json{{"to", node.parent ? *node.parent : -1}});
            if (!node.parent) {
                final_status = TaskStatus::UnresolvedExhausted;
                break;
            }
            PlanNode& parent = nodes[*node.parent];
            std::string summary =
                "subtask exhausted after " + std::to_string(node.attempts.size()) +
                " attempts";
            if (!node.attempts.empty() && !node.attempts.back().feedback.empty()) {
                summary += "; last failure: " + node.attempts.back().feedback;
            }
            if (node.via_attempt) {
                parent.attempts[*node.via_attempt].failed = true;
                parent.attempts[*node.via_attempt].feedback = summary;
            }
            trace.push("feedback-recorded", parent.id,
                       ordered_json{{"feedback", summary}});
            cur = parent.id;
            continue;
        }

        std::vector<std::string> feedback_history = collect_feedback(node);

        PlannerProposal proposal;
        try {
            proposal = agents_.planner->propose(node.workspace, library_context,
                                                feedback_history);
        } catch (const std::exception& e) {
            trace.push("call-proposed", node.id,
                       ordered_json{{"adapter_failure", e.what()},
                                    {"feedback_context", feedback_history}});
            record_failure(node, AttemptRecord{},
                           std::string("planner adapter failure: ") + e.what());
            continue;
        }

        trace.push("call-proposed", node.id,
                   ordered_json{{"terminate", proposal.terminate},
                                {"chain", chain_names(proposal.chain)},
                                {"feedback_context", feedback_history}});

        if (proposal.terminate) {
            AttemptRecord attempt;
            attempt.terminate_attempt = true;
            if (node.workspace.artifacts.empty()) {
                record_failure(node, std::move(attempt),
                               "termination proposed with nothing to evaluate");
                continue;
            }
            TaskKind kind = TaskKind::Auxiliary;
            for (auto it = node.workspace.artifacts.rbegin();
                 it != node.workspace.artifacts.rend(); ++it) {
                if (const AtomicWorkflow* wf = library_.find(it->origin_workflow)) {
                    kind = wf->descriptor.kind;
                    break;
                }
            }
            EvalVerdict verdict;
            try {
                verdict = agents_.evaluator->evaluate(node.workspace.enriched_spec,
                                                      node.workspace.artifacts, kind,
                                                      config_.threshold);
            } catch (const std::exception& e) {
                record_failure(node, std::move(attempt),
                               std::string("evaluator adapter failure: ") + e.what());
                continue;
            }
            trace.push("evaluated", node.id,
                       ordered_json{{"pass", verdict.pass},
                                    {"analysis", verdict.failure_analysis}});
            if (verdict.pass) {
                node.status = NodeStatus::Succeeded;
                for (int walk = cur; nodes[walk].parent;) {
                    int p = *nodes[walk].parent;
                    nodes[p].status = NodeStatus::Succeeded;
                    walk = p;
                }
                // final artifacts: outputs of the last executed edge
                if (node.parent && node.via_attempt) {
                    const AttemptRecord& edge =
                        nodes[*node.parent].attempts[*node.via_attempt];
                    for (const auto& [nid, path] : edge.outcome.artifacts) {
                        result.final_artifacts.push_back(path);
                    }
                }
                if (result.final_artifacts.empty()) {
                    for (const ArtifactRecord& a : node.workspace.artifacts) {
                        result.final_artifacts.push_back(a.path);
                    }
                }
                result.final_workspace = node.workspace;
                final_status = TaskStatus::Resolved;
                break;
            }
            record_failure(node, std::move(attempt), verdict.failure_analysis);
            continue;
        }

        if (proposal.chain.empty()) {
            record_failure(node, AttemptRecord{}, "planner proposed an empty chain");
            continue;
        }

        const SwiCall& head = proposal.chain.front();
        AttemptRecord attempt;
        attempt.call = head;

        const AtomicWorkflow* workflow = library_.find(head.workflow_name);
        if (!workflow) {
            record_failure(node, std::move(attempt),
                           "unknown workflow: " + head.workflow_name);
            continue;
        }
        if (node.depth >= config_.max_depth) {
            record_failure(node, std::move(attempt),
                           "depth limit reached, cannot execute further steps");
            continue;
        }

        WorkflowGraph concrete;
        std::vector<std::string> adapt_warnings;
        try {
            concrete = instantiate(*workflow, head);
            AdaptResult adapted =
                adapt_parameters(concrete, workflow->descriptor, head.constraints);
            concrete = std::move(adapted.graph);
            adapt_warnings = std::move(adapted.warnings);
        } catch (const InstantiationError& e) {
            record_failure(node, std::move(attempt),
                           std::string("instantiation failed: ") + e.what());
            continue;
        } catch (const AdaptError& e) {
            record_failure(node, std::move(attempt),
                           std::string("adaptation failed: ") + e.what());
            continue;
        }
        for (const std::string& w : adapt_warnings) {
            trace.push("warning", node.id,
                       ordered_json{{"kind", "adaptation"}, {"detail", w}});
        }

        if (executed >= config_.max_total_expansions) {
            final_status = TaskStatus::UnresolvedBudget;
            break;
        }

        // Only the chain head runs; the tail stays advisory.
        ExecutionOutcome outcome = backend_.execute(concrete, config_.job_timeout_s);
        ++executed;
        attempt.executed = true;
        attempt.outcome = outcome;

        ordered_json exec_detail = ordered_json::object();
        exec_detail["workflow"] = head.workflow_name;
        exec_detail["status"] = outcome_status_name(outcome.status);
        exec_detail["artifacts"] = outcome.artifacts.size();
        trace.push("call-executed", node.id, exec_detail);

        if (outcome.status != ExecutionOutcome::Status::Completed) {
            record_failure(node, std::move(attempt), outcome.diagnostics);
            continue;
        }

        if (config_.evaluate_intermediate && !outcome.artifacts.empty()) {
            std::vector<ArtifactRecord> fresh;
            for (const auto& [nid, path] : outcome.artifacts) {
                ArtifactRecord rec;
                rec.path = path;
                rec.fingerprint = fingerprint_file(path);
                fresh.push_back(std::move(rec));
            }
            EvalVerdict verdict = agents_.evaluator->evaluate(
                node.workspace.enriched_spec, fresh, workflow->descriptor.kind,
                config_.threshold);
            trace.push("evaluated", node.id,
                       ordered_json{{"pass", verdict.pass},
                                    {"analysis", verdict.failure_analysis},
                                    {"intermediate", true}});
            if (!verdict.pass) {
                record_failure(node, std::move(attempt), verdict.failure_analysis);
                continue;
            }
        }

        std::vector<Annotation> annotations;
        for (const auto& [nid, path] : outcome.artifacts) {
            try {
                annotations.push_back(agents_.annotator->annotate(path));
            } catch (const std::exception& e) {
                trace.push("warning", node.id,
                           ordered_json{{"kind", "annotation-failure"},
                                        {"detail", e.what()}});
            }
        }

        IngestResult ingested = ingest_outcome(
            snapshot(node.workspace), outcome, node.id, head.workflow_name,
            artifact_kind_for(workflow->descriptor.kind), annotations);
        for (const std::string& w : ingested.warnings) {
            trace.push("warning", node.id,
                       ordered_json{{"kind", "ingest"}, {"detail", w}});
        }

        attempt.child = static_cast<int>(nodes.size());
        int child_id = static_cast<int>(nodes.size());
        int attempt_index = static_cast<int>(node.attempts.size());
        node.attempts.push_back(std::move(attempt));
        node.status = NodeStatus::Expanded;

        PlanNode child;
        child.id = child_id;
        child.parent = cur;
        child.via_attempt = attempt_index;
        child.depth = node.depth + 1;
        child.workspace = std::move(ingested.workspace);
        child.proposed_chain.assign(proposal.chain.begin() + 1, proposal.chain.end());
        nodes.push_back(std::move(child));
        trace.push("node-opened", child_id,
                   ordered_json{{"depth", nodes[child_id].depth},
                                {"parent", cur}});
        cur = child_id;
    }

    result.status = final_status.value_or(TaskStatus::UnresolvedExhausted);
    result.expansions = executed;
    if (result.status != TaskStatus::Resolved) {
        result.final_workspace = nodes[cur].workspace;
    }
    trace.push("terminated", cur,
               ordered_json{{"status", task_status_name(result.status)},
                            {"expansions", executed}});
    return result;
}

TaskResult run_task(const std::string& instruction,
                    const std::vector<std::string>& input_artifacts,
                    const Library& library, AgentBundle agents, Backend& backend,
                    const PlanConfig& config) {
    PlanEngine engine(library, agents, backend, config);
    return engine.run(instruction, input_artifacts);
}

}  // namespace atelier

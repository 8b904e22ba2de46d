#include "atelier/ablation.hpp"

#include "atelier/mock_agents.hpp"
#include "atelier/sim_backend.hpp"
#include "atelier/util.hpp"

#include <cmath>
#include <filesystem>
#include <set>
#include <unistd.h>

namespace atelier {

namespace fs = std::filesystem;

const char* policy_variant_name(PolicyVariant variant) {
    switch (variant) {
        case PolicyVariant::Full: return "full";
        case PolicyVariant::NoTree: return "no-tree";
        case PolicyVariant::NoFeedback: return "no-feedback";
    }
    return "full";
}

SyntheticTaskSuite SyntheticTaskSuite::from_json_text(const std::string& text) {
    ordered_json doc = ordered_json::parse(text);
    SyntheticTaskSuite suite;
    suite.seed = doc.value("seed", uint64_t{7});
    for (const ordered_json& t : doc.value("tasks", ordered_json::array())) {
        SyntheticTask task;
        for (const ordered_json& s : t.value("sequence", ordered_json::array())) {
            task.sequence.push_back(s.get<std::string>());
        }
        task.step_success = t.value("step_success", 0.7);
        for (const ordered_json& d : t.value("distractors", ordered_json::array())) {
            task.distractors.push_back(d.get<std::string>());
        }
        if (task.sequence.empty()) {
            throw std::runtime_error("suite task with empty sequence is unsolvable");
        }
        suite.tasks.push_back(std::move(task));
    }
    return suite;
}

SyntheticTaskSuite SyntheticTaskSuite::from_file(const std::string& path) {
    return from_json_text(read_file(path));
}

SyntheticTaskSuite SyntheticTaskSuite::uniform(int task_count, int steps,
                                               double step_success, uint64_t seed) {
    SyntheticTaskSuite suite;
    suite.seed = seed;
    for (int t = 0; t < task_count; ++t) {
        SyntheticTask task;
        for (int s = 0; s < steps; ++s) {
            task.sequence.push_back("stage-" + std::to_string(s + 1));
        }
        task.step_success = step_success;
        suite.tasks.push_back(std::move(task));
    }
    return suite;
}

Library synthetic_library(const SyntheticTaskSuite& suite) {
    std::set<std::string> names;
    for (const SyntheticTask& task : suite.tasks) {
        names.insert(task.sequence.begin(), task.sequence.end());
        names.insert(task.distractors.begin(), task.distractors.end());
    }
    std::vector<AtomicWorkflow> workflows;
    for (const std::string& name : names) {
        AtomicWorkflow wf;
        wf.descriptor.name = name;
        wf.descriptor.description = "synthetic single-step generation stage";
        wf.descriptor.kind = TaskKind::TextToImage;
        wf.descriptor.params.push_back({"prompt", ParamKind::PromptText, true});
        wf.template_graph = WorkflowGraph::parse(R"({
            "1": {"class_type": "SynthStage",
                  "inputs": {"prompt": "__PARAM:prompt__"}},
            "9": {"class_type": "SaveImage", "inputs": {"images": ["1", 0]}}
        })");
        wf.template_graph.title = name;
        workflows.push_back(std::move(wf));
    }
    return Library::from_workflows(std::move(workflows));
}

PlannerProposal SyntheticPlanner::propose(const Workspace& workspace,
                                          const std::string&,
                                          const std::vector<std::string>& feedback_history) {
    size_t done = workspace.produced_artifact_count();
    if (done >= sequence_.size()) {
        return PlannerProposal::terminate_signal("all stages complete");
    }
    PlannerProposal proposal;
    for (size_t i = done; i < sequence_.size(); ++i) {
        SwiCall call;
        call.workflow_name = sequence_[i];
        std::string prompt = "step-" + std::to_string(i + 1);
        if (i == done && informed_ && !feedback_history.empty()) {
            // Diagnostics-informed retry: adjust the arguments.
            prompt += "-retry-" + std::to_string(feedback_history.size());
        }
        call.arguments["prompt"] = prompt;
        proposal.chain.push_back(std::move(call));
    }
    return proposal;
}

ordered_json AblationReport::to_json() const {
    ordered_json doc = ordered_json::object();
    for (const auto& [name, stats] : per_policy) {
        doc[name] = ordered_json{{"resolve_rate", stats.resolve_rate},
                                 {"pass_rate", stats.pass_rate},
                                 {"mean_expansions", stats.mean_expansions},
                                 {"ci95", ordered_json::array({stats.ci95_lo,
                                                               stats.ci95_hi})},
                                 {"reps", stats.reps},
                                 {"resolved", stats.resolved}};
    }
    if (!p_value_vs_full.empty()) {
        ordered_json cmp = ordered_json::object();
        for (const auto& [name, p] : p_value_vs_full) cmp[name] = p;
        doc["p_value_vs_full"] = cmp;
    }
    return doc;
}

double two_proportion_p_value(int successes1, int n1, int successes2, int n2) {
    if (n1 == 0 || n2 == 0) return 1.0;
    double p1 = static_cast<double>(successes1) / n1;
    double p2 = static_cast<double>(successes2) / n2;
    double pooled = static_cast<double>(successes1 + successes2) / (n1 + n2);
    double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    if (se == 0) return p1 > p2 ? 0.0 : 1.0;
    double z = (p1 - p2) / se;
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

namespace {

struct RepOutcome {
    bool resolved = false;
    int expansions = 0;
    int structural_failures = 0;
};

uint64_t rep_seed(uint64_t base, size_t task_index, int rep) {
    uint64_t x = base ^ (0x9e3779b97f4a7c15ull * (task_index + 1)) ^
                 (0xbf58476d1ce4e5b9ull * static_cast<uint64_t>(rep + 1));
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    return x;
}

RepOutcome run_tree_rep(const SyntheticTask& task, const Library& library,
                        bool informed, SimBackend& backend, int budget,
                        int max_children) {
    SyntheticPlanner planner(task.sequence, informed);
    AlwaysPassEvaluator evaluator;
    DigestAnnotator annotator;
    IdentityPreprocessor preprocessor;
    AgentBundle agents{&planner, &annotator, &evaluator, &preprocessor};

    PlanConfig config;
    config.max_depth = static_cast<int>(task.sequence.size()) + 1;
    config.max_children_per_node = max_children;
    config.max_total_expansions = budget;

    TaskResult result =
        run_task("synthetic task", {}, library, agents, backend, config);

    RepOutcome out;
    out.resolved = result.status == TaskStatus::Resolved;
    out.expansions = result.expansions;
    return out;
}

RepOutcome run_flat_rep(const SyntheticTask& task, const Library& library,
                        SimBackend& backend, int budget) {
    // Flat sequential re-planning: a failure restarts the whole path with a
    // fresh context; no memory of prior attempts, no preserved partials.
    RepOutcome out;
    size_t progress = 0;
    int serial = 0;
    while (out.expansions < budget) {
        const AtomicWorkflow* wf = library.find(task.sequence[progress]);
        SwiCall call;
        call.workflow_name = wf->descriptor.name;
        call.arguments["prompt"] = "step-" + std::to_string(progress + 1) +
                                   "-attempt-" + std::to_string(serial++);
        WorkflowGraph graph = instantiate(*wf, call);
        ExecutionOutcome outcome = backend.execute(graph, 600);
        ++out.expansions;
        if (outcome.status == ExecutionOutcome::Status::Completed) {
            ++progress;
            if (progress == task.sequence.size()) {
                out.resolved = true;
                break;
            }
        } else {
            progress = 0;
        }
    }
    return out;
}

}  // namespace

AblationReport run_ablation(const SyntheticTaskSuite& suite,
                            const std::vector<PolicyVariant>& policies,
                            const AblationOptions& options) {
    AblationReport report;
    Library library = synthetic_library(suite);

    fs::path work_dir = fs::temp_directory_path() /
                        ("atelier-ablate-" + std::to_string(::getpid()));

    for (PolicyVariant policy : policies) {
        PolicyStats stats;
        long long total_expansions = 0;
        int structural_failures = 0;
        fs::path policy_dir = work_dir / policy_variant_name(policy);

        for (int rep = 0; rep < options.repetitions; ++rep) {
            for (size_t t = 0; t < suite.tasks.size(); ++t) {
                const SyntheticTask& task = suite.tasks[t];
                int budget = static_cast<int>(task.sequence.size()) *
                             options.expansions_per_step;

                SimProfile profile;
                profile.seed = rep_seed(suite.seed, t, rep);
                profile.repeat_failure_penalty = options.repeat_failure_penalty;
                for (const std::string& name : task.sequence) {
                    profile.per_workflow[name] = WorkflowSimProfile{
                        task.step_success, 0.9, 0.02, 1, 2};
                }
                SimBackend backend(profile, policy_dir.string());

                RepOutcome out;
                switch (policy) {
                    case PolicyVariant::Full:
                        out = run_tree_rep(task, library, true, backend, budget,
                                           options.max_children_per_node);
                        break;
                    case PolicyVariant::NoFeedback:
                        out = run_tree_rep(task, library, false, backend, budget,
                                           options.max_children_per_node);
                        break;
                    case PolicyVariant::NoTree:
                        out = run_flat_rep(task, library, backend, budget);
                        break;
                }
                stats.reps += 1;
                if (out.resolved) stats.resolved += 1;
                total_expansions += out.expansions;
                structural_failures += backend.structural_failures();
            }
        }

        double n = stats.reps;
        stats.resolve_rate = stats.resolved / n;
        stats.pass_rate = structural_failures == 0 ? 1.0
                                                   : 1.0 - structural_failures / n;
        stats.mean_expansions = total_expansions / n;
        double se = std::sqrt(stats.resolve_rate * (1.0 - stats.resolve_rate) / n);
        stats.ci95_lo = std::max(0.0, stats.resolve_rate - 1.96 * se);
        stats.ci95_hi = std::min(1.0, stats.resolve_rate + 1.96 * se);
        report.per_policy[policy_variant_name(policy)] = stats;
    }

    std::error_code ec;
    fs::remove_all(work_dir, ec);

    auto full = report.per_policy.find("full");
    if (full != report.per_policy.end()) {
        for (const auto& [name, stats] : report.per_policy) {
            if (name == "full") continue;
            report.p_value_vs_full[name] = two_proportion_p_value(
                full->second.resolved, full->second.reps, stats.resolved,
                stats.reps);
        }
    }
    return report;
}

}  // namespace atelier

#pragma once

#include "atelier/agents.hpp"
#include "atelier/planner.hpp"
#include "atelier/swi.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace atelier {

enum class PolicyVariant { Full, NoTree, NoFeedback };

const char* policy_variant_name(PolicyVariant variant);

struct SyntheticTask {
    std::vector<std::string> sequence;  // required workflow order
    double step_success = 0.7;
    std::vector<std::string> distractors;
};

struct SyntheticTaskSuite {
    std::vector<SyntheticTask> tasks;
    uint64_t seed = 7;

    static SyntheticTaskSuite from_file(const std::string& path);
    static SyntheticTaskSuite from_json_text(const std::string& text);

    // Uniform suite: every task is the same length with the same step odds.
    static SyntheticTaskSuite uniform(int task_count, int steps,
                                      double step_success, uint64_t seed);
};

// Library with one minimal template per referenced workflow name, so every
// suite task is solvable by construction.
Library synthetic_library(const SyntheticTaskSuite& suite);

// Scripted planner used by the simulation harness: knows the required
// sequence, proposes the remaining chain, terminates when done. Informed
// retries vary the arguments; blind retries resubmit them unchanged.
class SyntheticPlanner : public Planner {
public:
    SyntheticPlanner(std::vector<std::string> sequence, bool informed_retries)
        : sequence_(std::move(sequence)), informed_(informed_retries) {}

    PlannerProposal propose(const Workspace& workspace,
                            const std::string& library_context,
                            const std::vector<std::string>& feedback_history) override;

private:
    std::vector<std::string> sequence_;
    bool informed_;
    int retry_serial_ = 0;
};

struct PolicyStats {
    int reps = 0;
    int resolved = 0;
    double resolve_rate = 0;
    double pass_rate = 0;
    double mean_expansions = 0;
    double ci95_lo = 0;
    double ci95_hi = 0;
};

struct AblationReport {
    std::map<std::string, PolicyStats> per_policy;
    // One-sided p-values for resolve(full) > resolve(variant).
    std::map<std::string, double> p_value_vs_full;

    ordered_json to_json() const;
};

struct AblationOptions {
    int repetitions = 500;
    uint64_t seed = 7;
    int max_children_per_node = 3;
    int expansions_per_step = 2;  // budget = steps * this
    double repeat_failure_penalty = 0.3;
};

AblationReport run_ablation(const SyntheticTaskSuite& suite,
                            const std::vector<PolicyVariant>& policies,
                            const AblationOptions& options);

// One-sided two-proportion z-test: P(rate1 <= rate2 | null of equality).
double two_proportion_p_value(int successes1, int n1, int successes2, int n2);

}  // namespace atelier

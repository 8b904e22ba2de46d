#pragma once

#include "atelier/agents.hpp"

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace atelier {

// Replays a fixed list of proposals; repeats the last one when exhausted.
class ScriptedPlanner : public Planner {
public:
    explicit ScriptedPlanner(std::vector<PlannerProposal> script)
        : script_(std::move(script)) {}

    PlannerProposal propose(const Workspace& workspace,
                            const std::string& library_context,
                            const std::vector<std::string>& feedback_history) override;

private:
    std::vector<PlannerProposal> script_;
    size_t next_ = 0;
};

// Cycles through candidate workflow names, skipping any already blamed in
// the feedback history, then terminates once an artifact exists.
class CyclingPlanner : public Planner {
public:
    explicit CyclingPlanner(std::vector<std::string> candidates)
        : candidates_(std::move(candidates)) {}

    PlannerProposal propose(const Workspace& workspace,
                            const std::string& library_context,
                            const std::vector<std::string>& feedback_history) override;

private:
    std::vector<std::string> candidates_;
};

// Passes artifacts whose fingerprint is in the pass set.
class FingerprintEvaluator : public Evaluator {
public:
    explicit FingerprintEvaluator(std::set<std::string> pass_set)
        : pass_set_(std::move(pass_set)) {}

    EvalVerdict evaluate(const std::string& task,
                         const std::vector<ArtifactRecord>& artifacts,
                         TaskKind task_kind, EvalThreshold threshold) override;

private:
    std::set<std::string> pass_set_;
};

// Reads the quality scalar embedded in simulated artifacts and compares it
// against the threshold cutoff. Cutoffs are nested by construction, which is
// the contract any remote evaluator must also satisfy.
class QualityEvaluator : public Evaluator {
public:
    static double cutoff(EvalThreshold threshold);

    EvalVerdict evaluate(const std::string& task,
                         const std::vector<ArtifactRecord>& artifacts,
                         TaskKind task_kind, EvalThreshold threshold) override;
};

class AlwaysPassEvaluator : public Evaluator {
public:
    EvalVerdict evaluate(const std::string&, const std::vector<ArtifactRecord>&,
                         TaskKind, EvalThreshold) override {
        return EvalVerdict{true, "", {}};
    }
};

class AlwaysFailEvaluator : public Evaluator {
public:
    explicit AlwaysFailEvaluator(std::string analysis = "quality below expectation")
        : analysis_(std::move(analysis)) {}

    EvalVerdict evaluate(const std::string&, const std::vector<ArtifactRecord>&,
                         TaskKind, EvalThreshold) override {
        return EvalVerdict{false, analysis_, {}};
    }

private:
    std::string analysis_;
};

// Deterministic digest of the artifact bytes stands in for a VLM caption.
class DigestAnnotator : public Annotator {
public:
    Annotation annotate(const std::string& artifact_path) override;
};

class IdentityPreprocessor : public Preprocessor {
public:
    std::string preprocess(const std::string& instruction) override {
        return instruction;
    }
};

class AppendingPreprocessor : public Preprocessor {
public:
    explicit AppendingPreprocessor(std::string suffix) : suffix_(std::move(suffix)) {}

    std::string preprocess(const std::string& instruction) override {
        return instruction + suffix_;
    }

private:
    std::string suffix_;
};

class ThrowingPreprocessor : public Preprocessor {
public:
    std::string preprocess(const std::string&) override {
        throw AdapterFailure("preprocessor transport fault");
    }
};

// Mock adapters built from a scenario file: ordered planner proposals plus
// an evaluator/preprocessor selection.
struct ScenarioBundle {
    std::unique_ptr<Planner> planner;
    std::unique_ptr<Evaluator> evaluator;
    std::unique_ptr<Annotator> annotator;
    std::unique_ptr<Preprocessor> preprocessor;

    AgentBundle agents() {
        return AgentBundle{planner.get(), annotator.get(), evaluator.get(),
                           preprocessor.get()};
    }
};

ScenarioBundle load_scenario(const std::string& path);
ScenarioBundle load_scenario_text(const std::string& text);

}  // namespace atelier

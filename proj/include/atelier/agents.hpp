#pragma once

#include "atelier/swi.hpp"
#include "atelier/workspace.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace atelier {

// Raised by adapters on transport faults or unparseable replies. The engine
// converts it into a failed attempt with feedback, never a crash.
class AdapterFailure : public std::runtime_error {
public:
    explicit AdapterFailure(const std::string& message)
        : std::runtime_error(message) {}
};

struct PlannerProposal {
    std::vector<SwiCall> chain;  // only the head is executed
    bool terminate = false;      // exactly one of chain/terminate active
    std::string rationale;

    static PlannerProposal terminate_signal(std::string rationale = "") {
        PlannerProposal p;
        p.terminate = true;
        p.rationale = std::move(rationale);
        return p;
    }
};

enum class EvalThreshold { Strict, Normal, Lenient };

const char* eval_threshold_name(EvalThreshold threshold);
EvalThreshold eval_threshold_from_name(const std::string& name);

struct EvalVerdict {
    bool pass = false;
    std::string failure_analysis;  // non-empty whenever pass is false
    std::map<std::string, double> dimensions;  // instruction-adherence, generation-quality
};

class Planner {
public:
    virtual ~Planner() = default;
    virtual PlannerProposal propose(const Workspace& workspace,
                                    const std::string& library_context,
                                    const std::vector<std::string>& feedback_history) = 0;
};

class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual EvalVerdict evaluate(const std::string& task,
                                 const std::vector<ArtifactRecord>& artifacts,
                                 TaskKind task_kind, EvalThreshold threshold) = 0;
};

class Annotator {
public:
    virtual ~Annotator() = default;
    virtual Annotation annotate(const std::string& artifact_path) = 0;
};

class Preprocessor {
public:
    virtual ~Preprocessor() = default;
    virtual std::string preprocess(const std::string& instruction) = 0;
};

// Dependency-injection seam for the four intelligence roles.
struct AgentBundle {
    Planner* planner = nullptr;
    Annotator* annotator = nullptr;
    Evaluator* evaluator = nullptr;
    Preprocessor* preprocessor = nullptr;

    bool complete() const {
        return planner && annotator && evaluator && preprocessor;
    }
};

}  // namespace atelier

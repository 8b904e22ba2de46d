#include "atelier/mock_agents.hpp"

#include "atelier/sim_backend.hpp"
#include "atelier/util.hpp"

#include <filesystem>

namespace atelier {

PlannerProposal ScriptedPlanner::propose(const Workspace&, const std::string&,
                                         const std::vector<std::string>&) {
    if (script_.empty()) {
        throw AdapterFailure("scripted planner has no proposals");
    }
    size_t index = next_ < script_.size() ? next_ : script_.size() - 1;
    ++next_;
    return script_[index];
}

PlannerProposal CyclingPlanner::propose(const Workspace& workspace,
                                        const std::string&,
                                        const std::vector<std::string>& feedback_history) {
    if (workspace.produced_artifact_count() > 0) {
        return PlannerProposal::terminate_signal("artifact produced");
    }
    for (const std::string& candidate : candidates_) {
        bool blamed = false;
        for (const std::string& fb : feedback_history) {
            if (fb.find(candidate) != std::string::npos) blamed = true;
        }
        if (!blamed) {
            PlannerProposal p;
            SwiCall call;
            call.workflow_name = candidate;
            call.arguments["prompt"] = workspace.instruction;
            p.chain.push_back(std::move(call));
            return p;
        }
    }
    throw AdapterFailure("all candidates exhausted");
}

EvalVerdict FingerprintEvaluator::evaluate(const std::string&,
                                           const std::vector<ArtifactRecord>& artifacts,
                                           TaskKind, EvalThreshold) {
    for (const ArtifactRecord& a : artifacts) {
        if (!pass_set_.count(a.fingerprint)) {
            return EvalVerdict{false,
                               "artifact " + a.path + " outside the expected set",
                               {}};
        }
    }
    return EvalVerdict{true, "", {}};
}

double QualityEvaluator::cutoff(EvalThreshold threshold) {
    switch (threshold) {
        case EvalThreshold::Strict: return 0.8;
        case EvalThreshold::Normal: return 0.6;
        case EvalThreshold::Lenient: return 0.4;
    }
    return 0.6;
}

EvalVerdict QualityEvaluator::evaluate(const std::string&,
                                       const std::vector<ArtifactRecord>& artifacts,
                                       TaskKind, EvalThreshold threshold) {
    double worst = 1.0;
    std::string worst_path;
    for (const ArtifactRecord& a : artifacts) {
        double q = 1.0;
        try {
            q = parse_sim_artifact(a.path).quality;
        } catch (const std::exception&) {
            // Not a simulated artifact; treated as acceptable.
        }
        if (q < worst) {
            worst = q;
            worst_path = a.path;
        }
    }
    EvalVerdict verdict;
    verdict.dimensions["generation-quality"] = worst;
    verdict.dimensions["instruction-adherence"] = worst;
    verdict.pass = worst >= cutoff(threshold);
    if (!verdict.pass) {
        verdict.failure_analysis = "quality " + std::to_string(worst) + " of " +
                                   worst_path + " below " +
                                   std::string(eval_threshold_name(threshold)) +
                                   " cutoff";
    }
    return verdict;
}

Annotation DigestAnnotator::annotate(const std::string& artifact_path) {
    if (!std::filesystem::exists(artifact_path)) {
        throw AdapterFailure("artifact missing: " + artifact_path);
    }
    std::string bytes = read_file(artifact_path);
    Annotation ann;
    ann.artifact_ref = artifact_path;
    ann.summary = "digest:" + fnv1a64_hex(bytes);
    ann.details = "synthetic annotation of " + std::to_string(bytes.size()) + " bytes";
    ann.scene_traits = {"synthetic"};
    return ann;
}

const char* eval_threshold_name(EvalThreshold threshold) {
    switch (threshold) {
        case EvalThreshold::Strict: return "strict";
        case EvalThreshold::Normal: return "normal";
        case EvalThreshold::Lenient: return "lenient";
    }
    return "normal";
}

EvalThreshold eval_threshold_from_name(const std::string& name) {
    if (name == "strict") return EvalThreshold::Strict;
    if (name == "normal") return EvalThreshold::Normal;
    if (name == "lenient") return EvalThreshold::Lenient;
    throw std::runtime_error("unknown threshold: " + name);
}

namespace {

SwiCall call_from_json(const ordered_json& j) {
    SwiCall call;
    call.workflow_name = j.value("workflow", "");
    if (j.contains("arguments")) {
        for (auto it = j["arguments"].begin(); it != j["arguments"].end(); ++it) {
            call.arguments[it.key()] = it.value();
        }
    }
    if (j.contains("constraints")) {
        for (auto it = j["constraints"].begin(); it != j["constraints"].end(); ++it) {
            call.constraints[it.key()] = it.value().get<double>();
        }
    }
    return call;
}

}  // namespace

ScenarioBundle load_scenario_text(const std::string& text) {
    ordered_json doc = ordered_json::parse(text);
    ScenarioBundle bundle;

    std::vector<PlannerProposal> script;
    for (const ordered_json& step : doc.value("planner", ordered_json::array())) {
        PlannerProposal p;
        if (step.value("terminate", false)) {
            p.terminate = true;
        } else {
            for (const ordered_json& c : step.value("chain", ordered_json::array())) {
                p.chain.push_back(call_from_json(c));
            }
        }
        p.rationale = step.value("rationale", "");
        script.push_back(std::move(p));
    }
    bundle.planner = std::make_unique<ScriptedPlanner>(std::move(script));

    std::string eval_mode = "always-pass";
    if (doc.contains("evaluator")) eval_mode = doc["evaluator"].value("mode", eval_mode);
    if (eval_mode == "always-pass") {
        bundle.evaluator = std::make_unique<AlwaysPassEvaluator>();
    } else if (eval_mode == "always-fail") {
        bundle.evaluator = std::make_unique<AlwaysFailEvaluator>(
            doc["evaluator"].value("analysis", "quality below expectation"));
    } else if (eval_mode == "quality") {
        bundle.evaluator = std::make_unique<QualityEvaluator>();
    } else {
        throw std::runtime_error("unknown evaluator mode: " + eval_mode);
    }

    std::string pre_mode = "identity";
    if (doc.contains("preprocessor")) pre_mode = doc["preprocessor"].value("mode", pre_mode);
    if (pre_mode == "identity") {
        bundle.preprocessor = std::make_unique<IdentityPreprocessor>();
    } else if (pre_mode == "append") {
        bundle.preprocessor = std::make_unique<AppendingPreprocessor>(
            doc["preprocessor"].value("suffix", ""));
    } else {
        throw std::runtime_error("unknown preprocessor mode: " + pre_mode);
    }

    bundle.annotator = std::make_unique<DigestAnnotator>();
    return bundle;
}

ScenarioBundle load_scenario(const std::string& path) {
    return load_scenario_text(read_file(path));
}

}  // namespace atelier

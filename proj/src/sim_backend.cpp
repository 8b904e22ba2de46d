#include "atelier/sim_backend.hpp"

#include "atelier/util.hpp"

#include <algorithm>
#include <cassert>
#include <filesystem>

namespace atelier {

namespace fs = std::filesystem;

namespace {

bool is_output_node(const WorkflowNode& node) {
    return node.class_type.rfind("Save", 0) == 0 ||
           node.class_type == "PreviewImage";
}

}  // namespace

SimBackend::SimBackend(SimProfile profile, std::string artifacts_dir)
    : profile_(std::move(profile)),
      artifacts_dir_(std::move(artifacts_dir)),
      rng_(profile_.seed) {}

ExecutionOutcome SimBackend::execute(const WorkflowGraph& graph, double /*timeout_s*/) {
    ExecutionOutcome outcome;

    ValidationReport report = validate_dag(graph, /*require_concrete=*/true);
    if (!report.ok()) {
        // Contract violation by the caller; recorded so the harness can
        // assert a zero count.
        ++structural_failures_;
        outcome.status = ExecutionOutcome::Status::Failed;
        outcome.diagnostics = "graph failed concrete validation: " +
                              std::string(finding_kind_name(report.findings[0].kind));
        return outcome;
    }

    const std::string name = graph.title.value_or("");
    WorkflowSimProfile wp = profile_.fallback;
    bool known = false;
    if (auto it = profile_.per_workflow.find(name); it != profile_.per_workflow.end()) {
        wp = it->second;
        known = true;
    }

    std::vector<std::string> order = topological_order(graph);
    uint64_t signature = fnv1a64(graph.serialize_compact());

    int draw_index = draw_count_++;
    double p = wp.success_prob;
    if (failed_signatures_.count(signature)) {
        p *= profile_.repeat_failure_penalty;
    }

    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    double quality = std::normal_distribution<double>(wp.quality_mean,
                                                      wp.quality_stddev)(rng_);
    quality = std::clamp(quality, 0.0, 1.0);
    int latency = std::uniform_int_distribution<int>(wp.latency_lo_ms,
                                                     wp.latency_hi_ms)(rng_);
    outcome.duration_s = latency / 1000.0;

    if (u >= p) {
        failed_signatures_.insert(signature);
        outcome.status = ExecutionOutcome::Status::Failed;
        outcome.diagnostics = "simulated fault in workflow '" + name + "' (draw " +
                              std::to_string(draw_index) + ")";
        return outcome;
    }

    outcome.status = ExecutionOutcome::Status::Completed;
    outcome.diagnostics = known ? "" : "no sim profile for '" + name +
                                           "', default profile applied";

    fs::create_directories(artifacts_dir_);
    int k = 0;
    for (const std::string& node_id : order) {
        const WorkflowNode* node = graph.find(node_id);
        if (!node || !is_output_node(*node)) continue;
        ordered_json payload = ordered_json::object();
        payload["workflow"] = name;
        payload["seed"] = profile_.seed;
        payload["draw"] = draw_index;
        payload["quality"] = quality;
        // Draw index in the name keeps paths distinct across jobs; later
        // steps must not shadow earlier artifacts in the workspace.
        fs::path path = fs::path(artifacts_dir_) /
                        (node_id + "_" + std::to_string(draw_index) + "_" +
                         std::to_string(k++) + ".sim");
        write_file(path.string(), payload.dump(2));
        outcome.artifacts.emplace_back(node_id, path.string());
    }
    return outcome;
}

SimArtifactPayload parse_sim_artifact(const std::string& path) {
    ordered_json doc = ordered_json::parse(read_file(path));
    SimArtifactPayload payload;
    payload.workflow = doc.value("workflow", "");
    payload.seed = doc.value("seed", uint64_t{0});
    payload.draw = doc.value("draw", 0);
    payload.quality = doc.value("quality", 0.0);
    return payload;
}

}  // namespace atelier

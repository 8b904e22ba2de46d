#include "atelier/workspace.hpp"

#include "atelier/util.hpp"

namespace atelier {

const char* artifact_kind_name(ArtifactKind kind) {
    switch (kind) {
        case ArtifactKind::Image: return "image";
        case ArtifactKind::Video: return "video";
        case ArtifactKind::Other: return "other";
    }
    return "other";
}

const char* outcome_status_name(ExecutionOutcome::Status status) {
    switch (status) {
        case ExecutionOutcome::Status::Completed: return "completed";
        case ExecutionOutcome::Status::Failed: return "failed";
        case ExecutionOutcome::Status::TimedOut: return "timed-out";
    }
    return "failed";
}

const ArtifactRecord* Workspace::find_artifact(const std::string& path) const {
    for (const ArtifactRecord& a : artifacts) {
        if (a.path == path) return &a;
    }
    return nullptr;
}

size_t Workspace::produced_artifact_count() const {
    size_t n = 0;
    for (const ArtifactRecord& a : artifacts) {
        if (a.origin_node >= 0) ++n;
    }
    return n;
}

void Workspace::add_context(std::string entry) {
    if (entry.size() > kContextEntryCap) {
        entry.resize(kContextEntryCap);
    }
    context_log.push_back(std::move(entry));
}

ordered_json Workspace::to_json() const {
    ordered_json doc = ordered_json::object();
    doc["instruction"] = instruction;
    doc["enriched_spec"] = enriched_spec;
    ordered_json arts = ordered_json::array();
    for (const ArtifactRecord& a : artifacts) {
        ordered_json rec = ordered_json::object();
        rec["path"] = a.path;
        rec["kind"] = artifact_kind_name(a.kind);
        rec["origin_node"] = a.origin_node;
        rec["origin_workflow"] = a.origin_workflow;
        rec["fingerprint"] = a.fingerprint;
        if (a.annotation) {
            rec["annotation"] = ordered_json{{"summary", a.annotation->summary},
                                             {"details", a.annotation->details},
                                             {"scene_traits", a.annotation->scene_traits}};
        }
        arts.push_back(rec);
    }
    doc["artifacts"] = arts;
    doc["context_log"] = context_log;
    return doc;
}

Workspace snapshot(const Workspace& ws) { return ws; }

std::string fingerprint_file(const std::string& path) {
    return fnv1a64_hex(read_file(path));
}

IngestResult ingest_outcome(const Workspace& ws, const ExecutionOutcome& outcome,
                            int origin_node, const std::string& workflow_name,
                            ArtifactKind kind,
                            const std::vector<Annotation>& annotations) {
    IngestResult result{ws, {}};
    Workspace& out = result.workspace;
    out.parent_snapshot = std::make_shared<const Workspace>(ws);

    if (outcome.artifacts.empty()) {
        out.add_context("workflow '" + workflow_name + "' completed with no artifacts");
        return result;
    }

    for (const auto& [node_id, path] : outcome.artifacts) {
        ArtifactRecord record;
        record.path = path;
        record.kind = kind;
        record.origin_node = origin_node;
        record.origin_workflow = workflow_name;
        record.fingerprint = fingerprint_file(path);
        for (const Annotation& ann : annotations) {
            if (ann.artifact_ref == path) record.annotation = ann;
        }

        bool replaced = false;
        for (ArtifactRecord& existing : out.artifacts) {
            if (existing.path == path) {
                existing = record;
                replaced = true;
                result.warnings.push_back("artifact path reused, record replaced: " + path);
            }
        }
        if (!replaced) out.artifacts.push_back(record);

        std::string entry = "artifact " + path + " from '" + workflow_name + "'";
        if (record.annotation) entry += ": " + record.annotation->summary;
        out.add_context(std::move(entry));
    }
    return result;
}

}  // namespace atelier

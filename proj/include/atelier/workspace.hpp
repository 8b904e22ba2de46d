#pragma once

#include "atelier/graph.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace atelier {

struct Annotation {
    std::string artifact_ref;
    std::string summary;
    std::string details;
    std::vector<std::string> scene_traits;
};

enum class ArtifactKind { Image, Video, Other };

const char* artifact_kind_name(ArtifactKind kind);

struct ArtifactRecord {
    std::string path;
    ArtifactKind kind = ArtifactKind::Other;
    int origin_node = -1;  // plan node id; -1 for user-provided inputs
    std::string origin_workflow;
    std::optional<Annotation> annotation;
    std::string fingerprint;
};

struct ExecutionOutcome {
    enum class Status { Completed, Failed, TimedOut };
    Status status = Status::Failed;
    std::vector<std::pair<std::string, std::string>> artifacts;  // (node, path)
    std::string diagnostics;
    double duration_s = 0;
};

const char* outcome_status_name(ExecutionOutcome::Status status);

// Per-run evolving task state. Copies act as immutable snapshots; a child
// workspace extends its parent's snapshot and never mutates it.
class Workspace {
public:
    std::string instruction;
    std::string enriched_spec;
    std::vector<ArtifactRecord> artifacts;  // ordered by ingestion
    std::vector<std::string> context_log;
    std::shared_ptr<const Workspace> parent_snapshot;

    static constexpr size_t kContextEntryCap = 2000;

    const ArtifactRecord* find_artifact(const std::string& path) const;
    size_t produced_artifact_count() const;  // engine-produced only

    void add_context(std::string entry);  // tail-truncates to the cap

    ordered_json to_json() const;
};

Workspace snapshot(const Workspace& ws);

std::string fingerprint_file(const std::string& path);

struct IngestResult {
    Workspace workspace;
    std::vector<std::string> warnings;
};

// Registers completed-outcome artifacts with origin and annotations; one
// context entry per artifact (one summary entry when the outcome produced
// none). Duplicate paths replace the prior record with a warning.
IngestResult ingest_outcome(const Workspace& ws, const ExecutionOutcome& outcome,
                            int origin_node, const std::string& workflow_name,
                            ArtifactKind kind,
                            const std::vector<Annotation>& annotations);

}  // namespace atelier

#pragma once

#include "atelier/graph.hpp"

#include <map>
#include <string>
#include <vector>

namespace atelier {

enum class TaskKind {
    TextToImage,
    ImageToImage,
    TextToVideo,
    ImageToVideo,
    VideoToVideo,
    Auxiliary,
};

const char* task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);  // throws on unknown

enum class ParamKind { PromptText, ImagePath, VideoPath, Number };

const char* param_kind_name(ParamKind kind);
ParamKind param_kind_from_name(const std::string& name);

struct ParamSpec {
    std::string key;
    ParamKind kind = ParamKind::PromptText;
    bool required = true;
};

struct ConstraintSpec {
    std::string key;             // e.g. "resolution", "frame-rate"
    std::string target_class;    // node class_type holding the literal
    std::string target_input;
    double lo = 0;
    double hi = 0;
};

struct SwiDescriptor {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;
    std::vector<ConstraintSpec> constraints;
    TaskKind kind = TaskKind::Auxiliary;

    const ParamSpec* find_param(const std::string& key) const;
    const ConstraintSpec* find_constraint(const std::string& key) const;
};

struct AtomicWorkflow {
    SwiDescriptor descriptor;
    WorkflowGraph template_graph;
};

struct SwiCall {
    std::string workflow_name;
    std::map<std::string, ordered_json> arguments;
    std::map<std::string, double> constraints;
};

class LibraryError : public std::runtime_error {
public:
    enum class Kind {
        MalformedDocument,
        UnknownTemplateFile,
        DuplicateName,
        UnboundPlaceholder,
        MissingRequiredPlaceholder,
        InvalidTemplate,
        DuplicateConstraintTarget,
    };

    LibraryError(Kind kind, std::string descriptor, const std::string& message)
        : std::runtime_error(message), kind(kind), descriptor(std::move(descriptor)) {}

    Kind kind;
    std::string descriptor;
};

class InstantiationError : public std::runtime_error {
public:
    enum class Kind { MissingArgument, TypeMismatch, UnknownArgument };

    InstantiationError(Kind kind, std::string key, const std::string& message)
        : std::runtime_error(message), kind(kind), key(std::move(key)) {}

    Kind kind;
    std::string key;
};

class AdaptError : public std::runtime_error {
public:
    explicit AdaptError(std::string constraint_key)
        : std::runtime_error("unknown constraint: " + constraint_key),
          key(std::move(constraint_key)) {}
    std::string key;
};

// Immutable after load; safe to share across concurrent task runs.
class Library {
public:
    static Library load(const std::string& descriptor_document,
                        const std::string& template_dir);
    static Library load_file(const std::string& document_path,
                             const std::string& template_dir);
    static Library from_workflows(std::vector<AtomicWorkflow> workflows);

    const AtomicWorkflow* find(const std::string& name) const;
    size_t size() const { return workflows_.size(); }
    bool empty() const { return workflows_.empty(); }
    const std::vector<AtomicWorkflow>& workflows() const { return workflows_; }

    // Deterministic full-visibility context document; no retrieval step.
    std::string render_context() const;

    static constexpr size_t kContextTokenBudget = 8192;  // whitespace tokens

private:
    std::vector<AtomicWorkflow> workflows_;
};

// Fills every placeholder from call arguments; result carries the workflow
// name as graph title. Throws InstantiationError.
WorkflowGraph instantiate(const AtomicWorkflow& workflow, const SwiCall& call);

struct AdaptResult {
    WorkflowGraph graph;
    std::vector<std::string> warnings;
};

// Parameter-level tuning only: literals at constraint targets may change,
// the node and edge sets never do. Out-of-range values clamp with a warning.
AdaptResult adapt_parameters(const WorkflowGraph& graph,
                             const SwiDescriptor& descriptor,
                             const std::map<std::string, double>& constraints);

}  // namespace atelier

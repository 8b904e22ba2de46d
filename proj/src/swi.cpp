#include "atelier/swi.hpp"

#include "atelier/util.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

namespace atelier {

namespace fs = std::filesystem;

const char* task_kind_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::TextToImage: return "text-to-image";
        case TaskKind::ImageToImage: return "image-to-image";
        case TaskKind::TextToVideo: return "text-to-video";
        case TaskKind::ImageToVideo: return "image-to-video";
        case TaskKind::VideoToVideo: return "video-to-video";
        case TaskKind::Auxiliary: return "auxiliary";
    }
    return "auxiliary";
}

TaskKind task_kind_from_name(const std::string& name) {
    if (name == "text-to-image") return TaskKind::TextToImage;
    if (name == "image-to-image") return TaskKind::ImageToImage;
    if (name == "text-to-video") return TaskKind::TextToVideo;
    if (name == "image-to-video") return TaskKind::ImageToVideo;
    if (name == "video-to-video") return TaskKind::VideoToVideo;
    if (name == "auxiliary") return TaskKind::Auxiliary;
    throw std::runtime_error("unknown task kind: " + name);
}

const char* param_kind_name(ParamKind kind) {
    switch (kind) {
        case ParamKind::PromptText: return "prompt-text";
        case ParamKind::ImagePath: return "image-path";
        case ParamKind::VideoPath: return "video-path";
        case ParamKind::Number: return "number";
    }
    return "prompt-text";
}

ParamKind param_kind_from_name(const std::string& name) {
    if (name == "prompt-text") return ParamKind::PromptText;
    if (name == "image-path") return ParamKind::ImagePath;
    if (name == "video-path") return ParamKind::VideoPath;
    if (name == "number") return ParamKind::Number;
    throw std::runtime_error("unknown param kind: " + name);
}

const ParamSpec* SwiDescriptor::find_param(const std::string& key) const {
    for (const ParamSpec& p : params) {
        if (p.key == key) return &p;
    }
    return nullptr;
}

const ConstraintSpec* SwiDescriptor::find_constraint(const std::string& key) const {
    for (const ConstraintSpec& c : constraints) {
        if (c.key == key) return &c;
    }
    return nullptr;
}

namespace {

struct RawEntry {
    SwiDescriptor descriptor;
    std::string template_path;
};

bool is_field_line(const std::string& line, std::string* field, std::string* rest) {
    static const char* kFields[] = {"name",  "template",   "kind",
                                    "description", "param", "constraint"};
    for (const char* f : kFields) {
        std::string prefix = std::string(f) + ":";
        if (line.rfind(prefix, 0) == 0) {
            *field = f;
            *rest = trim(line.substr(prefix.size()));
            return true;
        }
    }
    return false;
}

ParamSpec parse_param_line(const std::string& rest, const std::string& name) {
    std::istringstream in(rest);
    std::string key, kind, req;
    in >> key >> kind >> req;
    if (key.empty() || kind.empty() || (req != "required" && req != "optional")) {
        throw LibraryError(LibraryError::Kind::MalformedDocument, name,
                           "descriptor '" + name + "': bad param line: " + rest);
    }
    return ParamSpec{key, param_kind_from_name(kind), req == "required"};
}

ConstraintSpec parse_constraint_line(const std::string& rest,
                                     const std::string& name) {
    // constraint: <key> <class_type>.<input> <lo>..<hi>
    std::istringstream in(rest);
    std::string key, target, range;
    in >> key >> target >> range;
    auto dot = target.find('.');
    auto dots = range.find("..");
    if (key.empty() || dot == std::string::npos || dots == std::string::npos) {
        throw LibraryError(LibraryError::Kind::MalformedDocument, name,
                           "descriptor '" + name + "': bad constraint line: " + rest);
    }
    ConstraintSpec spec;
    spec.key = key;
    spec.target_class = target.substr(0, dot);
    spec.target_input = target.substr(dot + 1);
    try {
        spec.lo = std::stod(range.substr(0, dots));
        spec.hi = std::stod(range.substr(dots + 2));
    } catch (const std::exception&) {
        throw LibraryError(LibraryError::Kind::MalformedDocument, name,
                           "descriptor '" + name + "': bad constraint range: " + range);
    }
    return spec;
}

std::vector<RawEntry> parse_descriptor_document(const std::string& text) {
    std::vector<RawEntry> entries;
    RawEntry current;
    bool any_field = false;
    bool in_description = false;

    auto flush = [&]() {
        if (!any_field) return;
        current.descriptor.description = trim(current.descriptor.description);
        entries.push_back(std::move(current));
        current = RawEntry{};
        any_field = false;
        in_description = false;
    };

    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string trimmed = trim(line);
        if (trimmed == "---") {
            flush();
            continue;
        }
        std::string field, rest;
        if (is_field_line(trimmed, &field, &rest)) {
            any_field = true;
            in_description = false;
            const std::string& name = current.descriptor.name;
            if (field == "name") {
                current.descriptor.name = rest;
            } else if (field == "template") {
                current.template_path = rest;
            } else if (field == "kind") {
                current.descriptor.kind = task_kind_from_name(rest);
            } else if (field == "description") {
                current.descriptor.description = rest;
                in_description = true;
            } else if (field == "param") {
                current.descriptor.params.push_back(parse_param_line(rest, name));
            } else if (field == "constraint") {
                current.descriptor.constraints.push_back(
                    parse_constraint_line(rest, name));
            }
        } else if (in_description && !trimmed.empty()) {
            current.descriptor.description += "\n" + trimmed;
        } else if (!trimmed.empty() && !any_field) {
            throw LibraryError(LibraryError::Kind::MalformedDocument, "",
                               "stray content before first descriptor: " + trimmed);
        }
    }
    flush();
    return entries;
}

void check_workflow(const AtomicWorkflow& wf) {
    const std::string& name = wf.descriptor.name;
    if (name.empty()) {
        throw LibraryError(LibraryError::Kind::MalformedDocument, name,
                           "descriptor without a name");
    }
    if (wf.descriptor.description.empty()) {
        throw LibraryError(LibraryError::Kind::MalformedDocument, name,
                           "descriptor '" + name + "' has an empty description");
    }
    std::set<std::string> param_keys;
    for (const ParamSpec& p : wf.descriptor.params) {
        if (!param_keys.insert(p.key).second) {
            throw LibraryError(LibraryError::Kind::MalformedDocument, name,
                               "descriptor '" + name + "': duplicate param key " + p.key);
        }
    }

    ValidationReport report = validate_dag(wf.template_graph, false);
    if (!report.ok()) {
        throw LibraryError(LibraryError::Kind::InvalidTemplate, name,
                           "descriptor '" + name + "': template fails validation (" +
                               std::string(finding_kind_name(report.findings[0].kind)) + ")");
    }

    std::set<std::string> placeholder_keys;
    for (const std::string& key : wf.template_graph.placeholder_keys()) {
        placeholder_keys.insert(key);
        if (!param_keys.count(key)) {
            throw LibraryError(LibraryError::Kind::UnboundPlaceholder, name,
                               "descriptor '" + name + "': template placeholder '" +
                                   key + "' is not a declared param");
        }
    }
    for (const ParamSpec& p : wf.descriptor.params) {
        if (p.required && !placeholder_keys.count(p.key)) {
            throw LibraryError(LibraryError::Kind::MissingRequiredPlaceholder, name,
                               "descriptor '" + name + "': required param '" + p.key +
                                   "' never appears as a placeholder");
        }
    }

    std::set<std::pair<std::string, std::string>> targets;
    for (const ConstraintSpec& c : wf.descriptor.constraints) {
        if (!targets.insert({c.target_class, c.target_input}).second) {
            throw LibraryError(LibraryError::Kind::DuplicateConstraintTarget, name,
                               "descriptor '" + name + "': two constraints target " +
                                   c.target_class + "." + c.target_input);
        }
        bool found = false;
        for (const WorkflowNode& node : wf.template_graph.nodes) {
            if (node.class_type != c.target_class) continue;
            const InputValue* v = node.find_input(c.target_input);
            if (v && v->is_literal()) found = true;
        }
        if (!found) {
            throw LibraryError(LibraryError::Kind::InvalidTemplate, name,
                               "descriptor '" + name + "': constraint '" + c.key +
                                   "' targets missing literal " + c.target_class + "." +
                                   c.target_input);
        }
    }
}

}  // namespace

Library Library::load(const std::string& descriptor_document,
                      const std::string& template_dir) {
    std::vector<AtomicWorkflow> workflows;
    std::set<std::string> names;
    for (RawEntry& entry : parse_descriptor_document(descriptor_document)) {
        const std::string& name = entry.descriptor.name;
        if (!names.insert(name).second) {
            throw LibraryError(LibraryError::Kind::DuplicateName, name,
                               "duplicate descriptor name: " + name);
        }
        fs::path path = fs::path(template_dir) / entry.template_path;
        if (entry.template_path.empty() || !fs::exists(path)) {
            throw LibraryError(LibraryError::Kind::UnknownTemplateFile, name,
                               "descriptor '" + name + "': template file not found: " +
                                   path.string());
        }
        AtomicWorkflow wf;
        wf.descriptor = std::move(entry.descriptor);
        try {
            wf.template_graph = WorkflowGraph::parse(read_file(path.string()));
        } catch (const ParseError& e) {
            throw LibraryError(LibraryError::Kind::InvalidTemplate, name,
                               "descriptor '" + name + "': " + e.what());
        }
        wf.template_graph.title = name;
        wf.template_graph.source = path.string();
        check_workflow(wf);
        workflows.push_back(std::move(wf));
    }
    return from_workflows(std::move(workflows));
}

Library Library::load_file(const std::string& document_path,
                           const std::string& template_dir) {
    return load(read_file(document_path), template_dir);
}

Library Library::from_workflows(std::vector<AtomicWorkflow> workflows) {
    Library lib;
    std::set<std::string> names;
    for (AtomicWorkflow& wf : workflows) {
        if (!names.insert(wf.descriptor.name).second) {
            throw LibraryError(LibraryError::Kind::DuplicateName, wf.descriptor.name,
                               "duplicate descriptor name: " + wf.descriptor.name);
        }
        check_workflow(wf);
        lib.workflows_.push_back(std::move(wf));
    }
    return lib;
}

const AtomicWorkflow* Library::find(const std::string& name) const {
    for (const AtomicWorkflow& wf : workflows_) {
        if (wf.descriptor.name == name) return &wf;
    }
    return nullptr;
}

std::string Library::render_context() const {
    std::ostringstream out;
    out << "# Atomic workflow library\n";
    out << "# " << workflows_.size() << " workflows available\n";
    for (const AtomicWorkflow& wf : workflows_) {
        const SwiDescriptor& d = wf.descriptor;
        out << "\n## " << d.name << "\n";
        out << "kind: " << task_kind_name(d.kind) << "\n";
        out << "description: " << d.description << "\n";
        if (!d.params.empty()) {
            out << "params:\n";
            for (const ParamSpec& p : d.params) {
                out << "  - " << p.key << " (" << param_kind_name(p.kind) << ", "
                    << (p.required ? "required" : "optional") << ")\n";
            }
        }
        if (!d.constraints.empty()) {
            out << "constraints:\n";
            for (const ConstraintSpec& c : d.constraints) {
                out << "  - " << c.key << " -> " << c.target_class << "."
                    << c.target_input << " in [" << c.lo << ", " << c.hi << "]\n";
            }
        }
    }
    return out.str();
}

namespace {

ordered_json default_value_for(ParamKind kind) {
    if (kind == ParamKind::Number) return 0;
    return "";
}

bool argument_matches_kind(const ordered_json& value, ParamKind kind) {
    if (kind == ParamKind::Number) return value.is_number();
    return value.is_string();
}

}  // namespace

WorkflowGraph instantiate(const AtomicWorkflow& workflow, const SwiCall& call) {
    const SwiDescriptor& d = workflow.descriptor;

    for (const auto& [key, value] : call.arguments) {
        const ParamSpec* spec = d.find_param(key);
        if (!spec) {
            throw InstantiationError(InstantiationError::Kind::UnknownArgument, key,
                                     "workflow '" + d.name +
                                         "' accepts no argument '" + key + "'");
        }
        if (!argument_matches_kind(value, spec->kind)) {
            throw InstantiationError(InstantiationError::Kind::TypeMismatch, key,
                                     "argument '" + key + "' does not match kind " +
                                         param_kind_name(spec->kind));
        }
    }
    for (const ParamSpec& p : d.params) {
        if (p.required && !call.arguments.count(p.key)) {
            throw InstantiationError(InstantiationError::Kind::MissingArgument, p.key,
                                     "workflow '" + d.name +
                                         "' requires argument '" + p.key + "'");
        }
    }

    WorkflowGraph result = workflow.template_graph;
    for (WorkflowNode& node : result.nodes) {
        for (auto& [name, value] : node.inputs) {
            if (!value.is_placeholder()) continue;
            const std::string& key = value.placeholder().key;
            auto arg = call.arguments.find(key);
            if (arg != call.arguments.end()) {
                value = InputValue::literal_of(arg->second);
            } else {
                // Optional param left unset: neutral default by kind.
                const ParamSpec* spec = d.find_param(key);
                value = InputValue::literal_of(default_value_for(
                    spec ? spec->kind : ParamKind::PromptText));
            }
        }
    }
    result.title = d.name;
    return result;
}

AdaptResult adapt_parameters(const WorkflowGraph& graph,
                             const SwiDescriptor& descriptor,
                             const std::map<std::string, double>& constraints) {
    AdaptResult result{graph, {}};
    for (const auto& [key, raw_value] : constraints) {
        const ConstraintSpec* spec = descriptor.find_constraint(key);
        if (!spec) throw AdaptError(key);

        double value = std::clamp(raw_value, spec->lo, spec->hi);
        if (value != raw_value) {
            result.warnings.push_back("constraint '" + key + "' value " +
                                      std::to_string(raw_value) + " clamped to " +
                                      std::to_string(value));
        }

        bool applied = false;
        for (WorkflowNode& node : result.graph.nodes) {
            if (node.class_type != spec->target_class) continue;
            for (auto& [name, input] : node.inputs) {
                if (name != spec->target_input || !input.is_literal()) continue;
                if (value == std::floor(value)) {
                    input = InputValue::literal_of(static_cast<int64_t>(value));
                } else {
                    input = InputValue::literal_of(value);
                }
                applied = true;
            }
        }
        if (!applied) {
            result.warnings.push_back("constraint '" + key +
                                      "' target not present in graph");
        }
    }
    return result;
}

}  // namespace atelier

#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace atelier {

using ordered_json = nlohmann::ordered_json;

// Thrown when a document is not a well-formed API-format workflow.
class ParseError : public std::runtime_error {
public:
    enum class Kind {
        MalformedSyntax,
        MissingClassType,
        DuplicateNodeId,
        MalformedLink,
    };

    ParseError(Kind kind, std::string node_id, const std::string& message)
        : std::runtime_error(message), kind(kind), node_id(std::move(node_id)) {}

    Kind kind;
    std::string node_id;  // offending node, empty for document-level errors
};

class CycleError : public std::runtime_error {
public:
    explicit CycleError(std::vector<std::string> cycle_nodes);
    std::vector<std::string> cycle;
};

// A reference to another node's output slot.
struct Link {
    std::string source;
    int output_index = 0;
    bool operator==(const Link&) const = default;
};

// An input bound later from a declared parameter key. Encoded in JSON as the
// literal string "__PARAM:<key>__".
struct Placeholder {
    std::string key;
    bool operator==(const Placeholder&) const = default;
};

// Literal scalar: string, integer, float or boolean, kept as JSON.
struct InputValue {
    std::variant<ordered_json, Link, Placeholder> value;

    bool is_literal() const { return std::holds_alternative<ordered_json>(value); }
    bool is_link() const { return std::holds_alternative<Link>(value); }
    bool is_placeholder() const { return std::holds_alternative<Placeholder>(value); }

    const ordered_json& literal() const { return std::get<ordered_json>(value); }

    // Disambiguates construction: json's implicit conversions make direct
    // variant initialization from a json value ambiguous.
    static InputValue literal_of(ordered_json v) {
        InputValue out;
        out.value.emplace<ordered_json>(std::move(v));
        return out;
    }
    const Link& link() const { return std::get<Link>(value); }
    const Placeholder& placeholder() const { return std::get<Placeholder>(value); }

    // JSON form as it appears in the API document.
    ordered_json to_json() const;

    bool operator==(const InputValue& other) const;
};

struct WorkflowNode {
    std::string id;
    std::string class_type;
    std::vector<std::pair<std::string, InputValue>> inputs;  // document order
    ordered_json extra = ordered_json::object();  // unknown fields, re-emitted

    const InputValue* find_input(std::string_view name) const;
};

// Immutable after construction; mutation-style operations return new values.
class WorkflowGraph {
public:
    static WorkflowGraph parse(std::string_view text);

    ordered_json to_json() const;
    std::string serialize() const;          // pretty, for files
    std::string serialize_compact() const;  // canonical single-line form

    const WorkflowNode* find(std::string_view id) const;
    size_t size() const { return nodes.size(); }

    std::vector<std::string> placeholder_keys() const;

    std::vector<WorkflowNode> nodes;  // document order
    std::optional<std::string> title;   // in-memory metadata, not serialized
    std::optional<std::string> source;
};

bool structurally_equal(const WorkflowGraph& a, const WorkflowGraph& b);

struct Finding {
    enum class Kind { Cycle, UnresolvedLink, UnboundPlaceholder };
    Kind kind;
    std::vector<std::string> node_ids;
    std::string detail;
};

const char* finding_kind_name(Finding::Kind kind);

struct ValidationReport {
    std::vector<Finding> findings;
    bool ok() const { return findings.empty(); }
};

ValidationReport validate_dag(const WorkflowGraph& graph, bool require_concrete = false);

// Deterministic order: link sources precede consumers, ties broken by
// ascending lexicographic node id. Throws CycleError.
std::vector<std::string> topological_order(const WorkflowGraph& graph);

struct LiteralChange {
    std::string node;
    std::string input;
    ordered_json before;  // null when absent on one side
    ordered_json after;
};

struct LinkChange {
    std::string node;
    std::string input;
};

struct GraphDiff {
    std::vector<std::string> added_nodes;
    std::vector<std::string> removed_nodes;
    std::vector<LiteralChange> changed_literals;
    std::vector<LinkChange> changed_links;

    bool empty() const {
        return added_nodes.empty() && removed_nodes.empty() &&
               changed_literals.empty() && changed_links.empty();
    }
};

GraphDiff diff_graphs(const WorkflowGraph& a, const WorkflowGraph& b);

}  // namespace atelier

#include "atelier/graph.hpp"

#include "atelier/util.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <set>

namespace atelier {

namespace {

constexpr std::string_view kParamPrefix = "__PARAM:";
constexpr std::string_view kParamSuffix = "__";

std::optional<std::string> placeholder_key_of(std::string_view s) {
    if (s.size() <= kParamPrefix.size() + kParamSuffix.size()) return std::nullopt;
    if (s.substr(0, kParamPrefix.size()) != kParamPrefix) return std::nullopt;
    if (s.substr(s.size() - kParamSuffix.size()) != kParamSuffix) return std::nullopt;
    std::string key(s.substr(kParamPrefix.size(),
                             s.size() - kParamPrefix.size() - kParamSuffix.size()));
    if (key.empty()) return std::nullopt;
    return key;
}

InputValue parse_input_value(const ordered_json& v, const std::string& node_id,
                             const std::string& input_name) {
    if (v.is_array()) {
        // Links are [source-id] or [source-id, output-index].
        if (v.size() == 1 && v[0].is_string()) {
            return InputValue{Link{v[0].get<std::string>(), 0}};
        }
        if (v.size() == 2 && v[0].is_string() && v[1].is_number_integer() &&
            v[1].get<int64_t>() >= 0) {
            return InputValue{Link{v[0].get<std::string>(),
                                   static_cast<int>(v[1].get<int64_t>())}};
        }
        throw ParseError(ParseError::Kind::MalformedLink, node_id,
                         "node " + node_id + ": input '" + input_name +
                             "' is not a valid link");
    }
    if (v.is_string()) {
        if (auto key = placeholder_key_of(v.get<std::string>())) {
            return InputValue{Placeholder{*key}};
        }
        InputValue literal;
        literal.value.emplace<ordered_json>(v);
        return literal;
    }
    if (v.is_number() || v.is_boolean()) {
        InputValue literal;
        literal.value.emplace<ordered_json>(v);
        return literal;
    }
    throw ParseError(ParseError::Kind::MalformedSyntax, node_id,
                     "node " + node_id + ": input '" + input_name +
                         "' holds an unsupported value kind");
}

}  // namespace

CycleError::CycleError(std::vector<std::string> cycle_nodes)
    : std::runtime_error("workflow contains a cycle: " + join(cycle_nodes, " -> ")),
      cycle(std::move(cycle_nodes)) {}

ordered_json InputValue::to_json() const {
    if (is_link()) {
        const Link& l = link();
        return ordered_json::array({l.source, l.output_index});
    }
    if (is_placeholder()) {
        return std::string(kParamPrefix) + placeholder().key + std::string(kParamSuffix);
    }
    return literal();
}

bool InputValue::operator==(const InputValue& other) const {
    return value == other.value;
}

const InputValue* WorkflowNode::find_input(std::string_view name) const {
    for (const auto& [n, v] : inputs) {
        if (n == name) return &v;
    }
    return nullptr;
}

WorkflowGraph WorkflowGraph::parse(std::string_view text) {
    // Duplicate top-level keys silently collapse in the DOM, so catch them
    // during the parse itself.
    std::set<std::string> seen;
    std::string duplicate;
    auto cb = [&](int depth, ordered_json::parse_event_t event,
                  ordered_json& parsed) {
        if (event == ordered_json::parse_event_t::key && depth == 1 &&
            duplicate.empty()) {
            std::string key = parsed.get<std::string>();
            if (!seen.insert(key).second) duplicate = key;
        }
        return true;
    };

    ordered_json doc =
        ordered_json::parse(text, cb, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
        throw ParseError(ParseError::Kind::MalformedSyntax, "",
                         "document is not valid JSON");
    }
    if (!duplicate.empty()) {
        throw ParseError(ParseError::Kind::DuplicateNodeId, duplicate,
                         "duplicate node id: " + duplicate);
    }
    if (!doc.is_object()) {
        throw ParseError(ParseError::Kind::MalformedSyntax, "",
                         "top level must be an object mapping node ids to nodes");
    }

    WorkflowGraph graph;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& id = it.key();
        const ordered_json& body = it.value();
        if (id.empty()) {
            throw ParseError(ParseError::Kind::MalformedSyntax, id,
                             "empty node id");
        }
        if (!body.is_object()) {
            throw ParseError(ParseError::Kind::MalformedSyntax, id,
                             "node " + id + " is not an object");
        }
        WorkflowNode node;
        node.id = id;
        auto ct = body.find("class_type");
        if (ct == body.end() || !ct->is_string() ||
            ct->get<std::string>().empty()) {
            throw ParseError(ParseError::Kind::MissingClassType, id,
                             "node " + id + " lacks a class_type");
        }
        node.class_type = ct->get<std::string>();
        auto in = body.find("inputs");
        if (in != body.end()) {
            if (!in->is_object()) {
                throw ParseError(ParseError::Kind::MalformedSyntax, id,
                                 "node " + id + ": inputs must be an object");
            }
            for (auto iit = in->begin(); iit != in->end(); ++iit) {
                node.inputs.emplace_back(
                    iit.key(), parse_input_value(iit.value(), id, iit.key()));
            }
        }
        for (auto bit = body.begin(); bit != body.end(); ++bit) {
            if (bit.key() != "class_type" && bit.key() != "inputs") {
                node.extra[bit.key()] = bit.value();
            }
        }
        graph.nodes.push_back(std::move(node));
    }
    return graph;
}

ordered_json WorkflowGraph::to_json() const {
    ordered_json doc = ordered_json::object();
    for (const WorkflowNode& node : nodes) {
        ordered_json body = ordered_json::object();
        body["class_type"] = node.class_type;
        ordered_json ins = ordered_json::object();
        for (const auto& [name, value] : node.inputs) {
            ins[name] = value.to_json();
        }
        body["inputs"] = ins;
        for (auto it = node.extra.begin(); it != node.extra.end(); ++it) {
            body[it.key()] = it.value();
        }
        doc[node.id] = body;
    }
    return doc;
}

std::string WorkflowGraph::serialize() const { return to_json().dump(2); }

std::string WorkflowGraph::serialize_compact() const { return to_json().dump(); }

const WorkflowNode* WorkflowGraph::find(std::string_view id) const {
    for (const WorkflowNode& node : nodes) {
        if (node.id == id) return &node;
    }
    return nullptr;
}

std::vector<std::string> WorkflowGraph::placeholder_keys() const {
    std::vector<std::string> keys;
    for (const WorkflowNode& node : nodes) {
        for (const auto& [name, value] : node.inputs) {
            if (value.is_placeholder()) keys.push_back(value.placeholder().key);
        }
    }
    return keys;
}

bool structurally_equal(const WorkflowGraph& a, const WorkflowGraph& b) {
    return diff_graphs(a, b).empty();
}

const char* finding_kind_name(Finding::Kind kind) {
    switch (kind) {
        case Finding::Kind::Cycle: return "cycle";
        case Finding::Kind::UnresolvedLink: return "unresolved-link";
        case Finding::Kind::UnboundPlaceholder: return "unbound-placeholder";
    }
    return "unknown";
}

namespace {

// First cycle reachable in sorted-id DFS order, as the node sequence.
std::optional<std::vector<std::string>> find_cycle(const WorkflowGraph& graph) {
    std::map<std::string, std::vector<std::string>> out_edges;
    for (const WorkflowNode& node : graph.nodes) {
        out_edges[node.id];
        for (const auto& [name, value] : node.inputs) {
            if (value.is_link() && graph.find(value.link().source)) {
                out_edges[value.link().source].push_back(node.id);
            }
        }
    }
    for (auto& [id, outs] : out_edges) std::sort(outs.begin(), outs.end());

    enum class Color { White, Gray, Black };
    std::map<std::string, Color> color;
    for (const auto& [id, outs] : out_edges) color[id] = Color::White;
    std::vector<std::string> stack;

    std::function<std::optional<std::vector<std::string>>(const std::string&)> dfs =
        [&](const std::string& u) -> std::optional<std::vector<std::string>> {
        color[u] = Color::Gray;
        stack.push_back(u);
        for (const std::string& v : out_edges[u]) {
            if (color[v] == Color::Gray) {
                auto it = std::find(stack.begin(), stack.end(), v);
                return std::vector<std::string>(it, stack.end());
            }
            if (color[v] == Color::White) {
                if (auto cyc = dfs(v)) return cyc;
            }
        }
        stack.pop_back();
        color[u] = Color::Black;
        return std::nullopt;
    };

    for (const auto& [id, outs] : out_edges) {
        if (color[id] == Color::White) {
            if (auto cyc = dfs(id)) return cyc;
        }
    }
    return std::nullopt;
}

}  // namespace

ValidationReport validate_dag(const WorkflowGraph& graph, bool require_concrete) {
    ValidationReport report;
    for (const WorkflowNode& node : graph.nodes) {
        for (const auto& [name, value] : node.inputs) {
            if (value.is_link() && !graph.find(value.link().source)) {
                report.findings.push_back(
                    {Finding::Kind::UnresolvedLink,
                     {node.id, value.link().source},
                     "input '" + name + "' links to missing node '" +
                         value.link().source + "'"});
            }
            if (require_concrete && value.is_placeholder()) {
                report.findings.push_back(
                    {Finding::Kind::UnboundPlaceholder,
                     {node.id},
                     "input '" + name + "' still holds placeholder '" +
                         value.placeholder().key + "'"});
            }
        }
    }
    if (auto cyc = find_cycle(graph)) {
        report.findings.push_back(
            {Finding::Kind::Cycle, *cyc, "cycle of " + std::to_string(cyc->size()) + " nodes"});
    }
    return report;
}

std::vector<std::string> topological_order(const WorkflowGraph& graph) {
    std::map<std::string, int> indegree;
    std::map<std::string, std::vector<std::string>> out_edges;
    for (const WorkflowNode& node : graph.nodes) indegree[node.id] = 0;
    for (const WorkflowNode& node : graph.nodes) {
        for (const auto& [name, value] : node.inputs) {
            if (value.is_link() && graph.find(value.link().source)) {
                out_edges[value.link().source].push_back(node.id);
                ++indegree[node.id];
            }
        }
    }

    std::priority_queue<std::string, std::vector<std::string>,
                        std::greater<std::string>>
        ready;
    for (const auto& [id, deg] : indegree) {
        if (deg == 0) ready.push(id);
    }

    std::vector<std::string> order;
    while (!ready.empty()) {
        std::string u = ready.top();
        ready.pop();
        order.push_back(u);
        for (const std::string& v : out_edges[u]) {
            if (--indegree[v] == 0) ready.push(v);
        }
    }
    if (order.size() != graph.nodes.size()) {
        auto cyc = find_cycle(graph);
        throw CycleError(cyc ? *cyc : std::vector<std::string>{});
    }
    return order;
}

GraphDiff diff_graphs(const WorkflowGraph& a, const WorkflowGraph& b) {
    GraphDiff diff;

    std::set<std::string> ids;
    for (const WorkflowNode& n : a.nodes) ids.insert(n.id);
    for (const WorkflowNode& n : b.nodes) ids.insert(n.id);

    for (const std::string& id : ids) {
        const WorkflowNode* na = a.find(id);
        const WorkflowNode* nb = b.find(id);
        if (na && !nb) {
            diff.removed_nodes.push_back(id);
            continue;
        }
        if (!na && nb) {
            diff.added_nodes.push_back(id);
            continue;
        }
        if (na->class_type != nb->class_type) {
            // A node that changed kind is treated as a replacement.
            diff.removed_nodes.push_back(id);
            diff.added_nodes.push_back(id);
            continue;
        }
        std::set<std::string> names;
        for (const auto& [n, v] : na->inputs) names.insert(n);
        for (const auto& [n, v] : nb->inputs) names.insert(n);
        for (const std::string& name : names) {
            const InputValue* va = na->find_input(name);
            const InputValue* vb = nb->find_input(name);
            if (va && vb && *va == *vb) continue;
            bool link_involved = (va && va->is_link()) || (vb && vb->is_link());
            if (link_involved) {
                diff.changed_links.push_back({id, name});
            } else {
                diff.changed_literals.push_back(
                    {id, name, va ? va->to_json() : ordered_json(nullptr),
                     vb ? vb->to_json() : ordered_json(nullptr)});
            }
        }
    }
    return diff;
}

}  // namespace atelier

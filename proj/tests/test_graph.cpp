#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "atelier/graph.hpp"
#include "atelier/util.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

using namespace atelier;

namespace {

// Independent cycle oracle: plain DFS over the link edges, no reuse of the
// library's traversal code.
bool oracle_has_cycle(const WorkflowGraph& g) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const WorkflowNode& n : g.nodes) {
        for (const auto& [name, v] : n.inputs) {
            if (v.is_link() && g.find(v.link().source)) {
                adj[v.link().source].push_back(n.id);
            }
        }
    }
    std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
    bool cyclic = false;
    std::function<void(const std::string&)> dfs = [&](const std::string& u) {
        color[u] = 1;
        for (const std::string& v : adj[u]) {
            if (color[v] == 1) cyclic = true;
            else if (color[v] == 0) dfs(v);
            if (cyclic) return;
        }
        color[u] = 2;
    };
    for (const WorkflowNode& n : g.nodes) {
        if (color[n.id] == 0) dfs(n.id);
        if (cyclic) break;
    }
    return cyclic;
}

WorkflowGraph random_graph(std::mt19937_64& rng, int max_nodes) {
    int n = std::uniform_int_distribution<int>(1, max_nodes)(rng);
    ordered_json doc = ordered_json::object();
    for (int i = 1; i <= n; ++i) {
        ordered_json inputs = ordered_json::object();
        int edges = std::uniform_int_distribution<int>(0, 3)(rng);
        for (int e = 0; e < edges; ++e) {
            // most links point strictly backwards, so a healthy share of
            // samples comes out acyclic
            int hi = (i > 1 && rng() % 4 != 0) ? i - 1 : n;
            int target = std::uniform_int_distribution<int>(1, hi)(rng);
            inputs["in" + std::to_string(e)] =
                ordered_json::array({std::to_string(target), 0});
        }
        inputs["scale"] = std::uniform_real_distribution<double>(0, 1)(rng);
        doc[std::to_string(i)] = ordered_json{
            {"class_type", "Node" + std::to_string(i % 5)}, {"inputs", inputs}};
    }
    return WorkflowGraph::parse(doc.dump());
}

const char* kSmall = R"({
  "1": {"class_type": "LoadImage", "inputs": {"image": "in.png"}},
  "2": {"class_type": "Blur", "inputs": {"image": ["1", 0], "radius": 3}},
  "9": {"class_type": "SaveImage", "inputs": {"images": ["2"]}}
})";

}  // namespace

TEST_CASE("parse keeps document order and link defaults") {
    WorkflowGraph g = WorkflowGraph::parse(kSmall);
    REQUIRE(g.size() == 3);
    CHECK(g.nodes[0].id == "1");
    CHECK(g.nodes[1].class_type == "Blur");
    const InputValue* img = g.nodes[2].find_input("images");
    REQUIRE(img);
    REQUIRE(img->is_link());
    CHECK(img->link().source == "2");
    CHECK(img->link().output_index == 0);  // single-element link form
    const InputValue* radius = g.nodes[1].find_input("radius");
    REQUIRE(radius);
    CHECK(radius->literal().get<int>() == 3);
}

TEST_CASE("round trip serialization is stable") {
    WorkflowGraph g = WorkflowGraph::parse(kSmall);
    std::string once = g.serialize_compact();
    WorkflowGraph again = WorkflowGraph::parse(once);
    CHECK(again.serialize_compact() == once);
    CHECK(structurally_equal(g, again));
}

TEST_CASE("unknown node fields survive a round trip") {
    const char* doc = R"({
      "1": {"class_type": "LoadImage", "inputs": {"image": "x.png"},
            "_meta": {"title": "loader"}}
    })";
    WorkflowGraph g = WorkflowGraph::parse(doc);
    ordered_json out = g.to_json();
    CHECK(out["1"]["_meta"]["title"] == "loader");
}

TEST_CASE("parse errors carry the offending node") {
    CHECK_THROWS_AS(WorkflowGraph::parse("not json"), ParseError);
    try {
        WorkflowGraph::parse(R"({"1": {"inputs": {}}})");
        FAIL("missing class_type accepted");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseError::Kind::MissingClassType);
        CHECK(e.node_id == "1");
    }
    try {
        WorkflowGraph::parse(
            R"({"1": {"class_type": "A", "inputs": {"x": ["2", -1]}}})");
        FAIL("negative output index accepted");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseError::Kind::MalformedLink);
    }
}

TEST_CASE("duplicate node ids are rejected even though JSON folds them") {
    const char* doc = R"({
      "1": {"class_type": "A", "inputs": {}},
      "1": {"class_type": "B", "inputs": {}}
    })";
    try {
        WorkflowGraph::parse(doc);
        FAIL("duplicate id accepted");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseError::Kind::DuplicateNodeId);
        CHECK(e.node_id == "1");
    }
}

TEST_CASE("placeholder detection") {
    const char* doc = R"({
      "1": {"class_type": "Enc", "inputs": {"text": "__PARAM:prompt__",
            "other": "__PARAM:__", "plain": "__param:x__"}}
    })";
    WorkflowGraph g = WorkflowGraph::parse(doc);
    auto keys = g.placeholder_keys();
    REQUIRE(keys.size() == 1);
    CHECK(keys[0] == "prompt");
    CHECK(g.nodes[0].find_input("plain")->is_literal());
}

TEST_CASE("validate_dag reports cycles, dangling links, placeholders") {
    WorkflowGraph cyclic = WorkflowGraph::parse(R"({
      "1": {"class_type": "A", "inputs": {"x": ["2", 0]}},
      "2": {"class_type": "B", "inputs": {"x": ["1", 0]}}
    })");
    ValidationReport r1 = validate_dag(cyclic);
    REQUIRE_FALSE(r1.ok());
    CHECK(r1.findings[0].kind == Finding::Kind::Cycle);

    WorkflowGraph dangling = WorkflowGraph::parse(
        R"({"1": {"class_type": "A", "inputs": {"x": ["9", 0]}}})");
    ValidationReport r2 = validate_dag(dangling);
    REQUIRE_FALSE(r2.ok());
    CHECK(r2.findings[0].kind == Finding::Kind::UnresolvedLink);

    WorkflowGraph holey = WorkflowGraph::parse(
        R"({"1": {"class_type": "A", "inputs": {"t": "__PARAM:p__"}}})");
    CHECK(validate_dag(holey, false).ok());
    ValidationReport r3 = validate_dag(holey, true);
    REQUIRE_FALSE(r3.ok());
    CHECK(r3.findings[0].kind == Finding::Kind::UnboundPlaceholder);
}

TEST_CASE("topological order is deterministic with lexicographic ties") {
    WorkflowGraph g = WorkflowGraph::parse(R"({
      "b": {"class_type": "A", "inputs": {}},
      "a": {"class_type": "A", "inputs": {}},
      "c": {"class_type": "B", "inputs": {"x": ["a", 0], "y": ["b", 0]}}
    })");
    auto order = topological_order(g);
    REQUIRE(order.size() == 3);
    CHECK(order[0] == "a");
    CHECK(order[1] == "b");
    CHECK(order[2] == "c");

    WorkflowGraph cyclic = WorkflowGraph::parse(R"({
      "1": {"class_type": "A", "inputs": {"x": ["2", 0]}},
      "2": {"class_type": "B", "inputs": {"x": ["1", 0]}}
    })");
    CHECK_THROWS_AS(topological_order(cyclic), CycleError);
}

TEST_CASE("topological order respects every edge on random graphs") {
    std::mt19937_64 rng(11);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        WorkflowGraph g = random_graph(rng, 12);
        if (oracle_has_cycle(g)) continue;
        auto order = topological_order(g);
        REQUIRE(order.size() == g.size());
        std::map<std::string, size_t> pos;
        for (size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
        for (const WorkflowNode& n : g.nodes) {
            for (const auto& [name, v] : n.inputs) {
                if (v.is_link()) CHECK(pos[v.link().source] < pos[n.id]);
            }
        }
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("cycle verdict matches brute-force oracle on random graphs") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 500; ++i) {
        WorkflowGraph g = random_graph(rng, 15);
        bool oracle = oracle_has_cycle(g);
        bool found = false;
        for (const Finding& f : validate_dag(g).findings) {
            if (f.kind == Finding::Kind::Cycle) found = true;
        }
        CHECK(found == oracle);
    }
}

TEST_CASE("diff classifies literal, link and node-set changes") {
    WorkflowGraph a = WorkflowGraph::parse(kSmall);
    CHECK(diff_graphs(a, a).empty());

    WorkflowGraph b = WorkflowGraph::parse(kSmall);
    b.nodes[1].inputs[1].second = InputValue::literal_of(7);
    GraphDiff d1 = diff_graphs(a, b);
    REQUIRE(d1.changed_literals.size() == 1);
    CHECK(d1.changed_literals[0].node == "2");
    CHECK(d1.changed_literals[0].input == "radius");
    CHECK(d1.changed_links.empty());

    WorkflowGraph c = WorkflowGraph::parse(kSmall);
    c.nodes[2].inputs[0].second = InputValue{Link{"1", 0}};
    GraphDiff d2 = diff_graphs(a, c);
    CHECK(d2.changed_links.size() == 1);

    WorkflowGraph e = WorkflowGraph::parse(
        R"({"1": {"class_type": "LoadImage", "inputs": {"image": "in.png"}}})");
    GraphDiff d3 = diff_graphs(a, e);
    CHECK(d3.removed_nodes.size() == 2);
    CHECK(d3.added_nodes.empty());
}

TEST_CASE("class_type change counts as node replacement") {
    WorkflowGraph a = WorkflowGraph::parse(
        R"({"1": {"class_type": "A", "inputs": {}}})");
    WorkflowGraph b = WorkflowGraph::parse(
        R"({"1": {"class_type": "B", "inputs": {}}})");
    GraphDiff d = diff_graphs(a, b);
    CHECK(d.added_nodes == std::vector<std::string>{"1"});
    CHECK(d.removed_nodes == std::vector<std::string>{"1"});
}

// Acceptance gate: ten independently verifiable guarantees, one verdict line
// each. Exits non-zero if any check fails. Every oracle here is implemented
// from scratch rather than reusing the library's own traversal/serialization
// logic, so a shared bug cannot hide.

#include "atelier/ablation.hpp"
#include "atelier/mock_agents.hpp"
#include "atelier/planner.hpp"
#include "atelier/remote_backend.hpp"
#include "atelier/sim_backend.hpp"
#include "atelier/stub_server.hpp"
#include "atelier/util.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace atelier;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
long long g_structural_failures = 0;  // accumulated across criteria 4-8

void verdict(int criterion, bool ok, const std::string& what,
             const std::string& note = "") {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion-" << criterion << ": "
              << what;
    if (!note.empty()) std::cout << " [" << note << "]";
    std::cout << "\n";
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string temp_dir(const std::string& tag) {
    static int counter = 0;
    fs::path p = fs::temp_directory_path() /
                 ("acceptance-" + tag + "-" + std::to_string(::getpid()) + "-" +
                  std::to_string(counter++));
    fs::create_directories(p);
    return p.string();
}

// --- criterion 1: cycle detection vs an independent DFS oracle -------------

bool oracle_has_cycle(const WorkflowGraph& g) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const WorkflowNode& n : g.nodes) {
        for (const auto& [name, v] : n.inputs) {
            if (v.is_link() && g.find(v.link().source)) {
                adj[v.link().source].push_back(n.id);
            }
        }
    }
    std::map<std::string, int> color;
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
        int edges = std::uniform_int_distribution<int>(0, 4)(rng);
        for (int e = 0; e < edges; ++e) {
            int target = std::uniform_int_distribution<int>(1, n)(rng);
            inputs["in" + std::to_string(e)] =
                ordered_json::array({std::to_string(target), 0});
        }
        doc[std::to_string(i)] = ordered_json{
            {"class_type", "Node" + std::to_string(i % 7)}, {"inputs", inputs}};
    }
    return WorkflowGraph::parse(doc.dump());
}

void criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        WorkflowGraph g = random_graph(rng, 25);
        bool oracle = oracle_has_cycle(g);
        bool found = false;
        for (const Finding& f : validate_dag(g).findings) {
            if (f.kind == Finding::Kind::Cycle) found = true;
        }
        if (found != oracle) ++mismatches;
    }
    double secs = seconds_since(t0);
    verdict(1, mismatches == 0 && secs < 5.0,
            "cycle verdict matches brute-force oracle on 1000 random graphs",
            std::to_string(mismatches) + " mismatches, " + std::to_string(secs) +
                " s");
}

// --- criterion 2: instantiation touches exactly the placeholder sites ------

size_t raw_placeholder_count(const std::string& text) {
    size_t n = 0;
    for (size_t at = text.find("__PARAM:"); at != std::string::npos;
         at = text.find("__PARAM:", at + 1)) ++n;
    return n;
}

ordered_json random_argument(ParamKind kind, std::mt19937_64& rng) {
    switch (kind) {
        case ParamKind::Number:
            return std::uniform_int_distribution<int>(1, 100)(rng);
        case ParamKind::ImagePath:
            return "img-" + std::to_string(rng() % 1000) + ".png";
        case ParamKind::VideoPath:
            return "vid-" + std::to_string(rng() % 1000) + ".mp4";
        case ParamKind::PromptText:
        default:
            return "prompt variant " + std::to_string(rng() % 1000);
    }
}

void criterion_2(const Library& lib) {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2);
    int violations = 0;
    int templates = 0;
    for (const AtomicWorkflow& wf : lib.workflows()) {
        ++templates;
        size_t scan = raw_placeholder_count(wf.template_graph.serialize());
        for (int trial = 0; trial < 20; ++trial) {
            SwiCall call;
            call.workflow_name = wf.descriptor.name;
            for (const ParamSpec& p : wf.descriptor.params) {
                call.arguments[p.key] = random_argument(p.kind, rng);
            }
            WorkflowGraph g = instantiate(wf, call);
            if (!validate_dag(g, true).ok()) ++violations;
            if (raw_placeholder_count(g.serialize()) != 0) ++violations;
            GraphDiff d = diff_graphs(wf.template_graph, g);
            if (!d.added_nodes.empty() || !d.removed_nodes.empty() ||
                !d.changed_links.empty()) ++violations;
            if (d.changed_literals.size() != scan) ++violations;
        }
    }
    double secs = seconds_since(t0);
    verdict(2, templates >= 10 && violations == 0 && secs < 10.0,
            "instantiation changes exactly the placeholder sites on all "
            "templates",
            std::to_string(templates) + " templates, " +
                std::to_string(violations) + " violations, " +
                std::to_string(secs) + " s");
}

// --- criterion 3: adaptation never alters the DAG structure ----------------

void criterion_3(const Library& lib) {
    std::mt19937_64 rng(3);
    std::vector<const AtomicWorkflow*> constrained;
    for (const AtomicWorkflow& wf : lib.workflows()) {
        if (!wf.descriptor.constraints.empty()) constrained.push_back(&wf);
    }
    int violations = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const AtomicWorkflow& wf = *constrained[rng() % constrained.size()];
        SwiCall call;
        call.workflow_name = wf.descriptor.name;
        for (const ParamSpec& p : wf.descriptor.params) {
            call.arguments[p.key] = random_argument(p.kind, rng);
        }
        WorkflowGraph g = instantiate(wf, call);

        std::map<std::string, double> constraints;
        for (const ConstraintSpec& c : wf.descriptor.constraints) {
            if (rng() % 2) continue;  // random subset
            double wild = std::uniform_real_distribution<double>(
                c.lo - 2 * (c.hi - c.lo), c.hi + 2 * (c.hi - c.lo))(rng);
            constraints[c.key] = wild;
        }
        AdaptResult r = adapt_parameters(g, wf.descriptor, constraints);

        GraphDiff d = diff_graphs(g, r.graph);
        if (!d.added_nodes.empty() || !d.removed_nodes.empty() ||
            !d.changed_links.empty()) ++violations;
        // clamp oracle: adapted literal inside [lo, hi]
        for (const auto& [key, value] : constraints) {
            const ConstraintSpec* c = wf.descriptor.find_constraint(key);
            for (const WorkflowNode& node : r.graph.nodes) {
                if (node.class_type != c->target_class) continue;
                const InputValue* v = node.find_input(c->target_input);
                if (!v || !v->is_literal()) continue;
                double got = v->literal().get<double>();
                if (got < c->lo - 1e-9 || got > c->hi + 1e-9) ++violations;
            }
        }
    }
    verdict(3, violations == 0,
            "adaptation preserves node and edge sets in 500 randomized trials",
            std::to_string(violations) + " violations");
}

// --- criteria 4-6: engine behavior under mocks ------------------------------

void criterion_4() {
    SyntheticTaskSuite suite = SyntheticTaskSuite::uniform(1, 3, 0.8, 40);
    Library lib = synthetic_library(suite);
    int bad = 0;
    for (int run = 0; run < 100; ++run) {
        SimProfile profile;
        profile.seed = 1000 + run;
        for (const std::string& s : suite.tasks[0].sequence) {
            profile.per_workflow[s] = WorkflowSimProfile{0.8, 0.9, 0.02, 1, 2};
        }
        SimBackend backend(profile, temp_dir("c4"));
        // planner always proposes the full remaining multi-call chain
        SyntheticPlanner planner(suite.tasks[0].sequence, true);
        AlwaysPassEvaluator eval;
        DigestAnnotator annot;
        IdentityPreprocessor pre;
        AgentBundle agents{&planner, &annot, &eval, &pre};
        PlanConfig config;
        config.max_total_expansions = 12;
        TaskResult r = run_task("chain run", {}, lib, agents, backend, config);
        if (backend.jobs() != r.expansions) ++bad;
        g_structural_failures += backend.structural_failures();
    }
    verdict(4, bad == 0,
            "backend job count equals expansion count in 100 multi-call runs",
            std::to_string(bad) + " mismatching runs");
}

// Scans one trace: every feedback string a planner saw at node N must have
// been recorded at node N beforehand, and a passing evaluation must be the
// last planning activity.
bool trace_confinement_holds(const Trace& trace) {
    std::map<int, std::vector<std::string>> recorded;
    bool resolved_seen = false;
    for (const TraceEvent& e : trace.events()) {
        if (resolved_seen && e.event != "terminated") return false;
        if (e.event == "feedback-recorded") {
            recorded[e.node].push_back(e.detail["feedback"].get<std::string>());
        } else if (e.event == "call-proposed") {
            if (!e.detail.contains("feedback_context")) return false;
            const auto& ctx = e.detail["feedback_context"];
            const auto& own = recorded[e.node];
            if (ctx.size() > own.size()) return false;
            for (size_t i = 0; i < ctx.size(); ++i) {
                if (ctx[i].get<std::string>() != own[i]) return false;
            }
        } else if (e.event == "evaluated" && e.detail.value("pass", false)) {
            resolved_seen = true;
        }
    }
    return true;
}

void criterion_5() {
    SyntheticTaskSuite suite = SyntheticTaskSuite::uniform(1, 3, 0.6, 50);
    Library lib = synthetic_library(suite);
    int bad = 0;
    for (int run = 0; run < 200; ++run) {
        SimProfile profile;
        profile.seed = 5000 + run;
        for (const std::string& s : suite.tasks[0].sequence) {
            profile.per_workflow[s] = WorkflowSimProfile{0.6, 0.9, 0.02, 1, 2};
        }
        SimBackend backend(profile, temp_dir("c5"));
        SyntheticPlanner planner(suite.tasks[0].sequence, true);
        AlwaysPassEvaluator eval;
        DigestAnnotator annot;
        IdentityPreprocessor pre;
        AgentBundle agents{&planner, &annot, &eval, &pre};
        PlanConfig config;
        config.max_total_expansions = 18;
        TaskResult r = run_task("confinement run", {}, lib, agents, backend,
                                config);
        if (!trace_confinement_holds(r.trace)) ++bad;
        g_structural_failures += backend.structural_failures();
    }
    verdict(5, bad == 0,
            "feedback stays confined to its level in 200 failure-injected runs",
            std::to_string(bad) + " violating runs");
}

class RelentlessPlanner : public Planner {
public:
    PlannerProposal propose(const Workspace&, const std::string&,
                            const std::vector<std::string>&) override {
        PlannerProposal p;
        SwiCall c;
        c.workflow_name = "stage-1";
        c.arguments["prompt"] = "attempt-" + std::to_string(serial_++);
        p.chain.push_back(c);
        return p;
    }

private:
    int serial_ = 0;
};

void criterion_6() {
    SyntheticTaskSuite suite = SyntheticTaskSuite::uniform(1, 1, 1.0, 60);
    Library lib = synthetic_library(suite);
    bool ok = true;
    std::string note;
    for (int bound : {1, 3, 24}) {
        SimProfile profile;
        SimBackend backend(profile, temp_dir("c6"));
        RelentlessPlanner planner;  // never proposes termination
        AlwaysFailEvaluator eval;   // and nothing would ever pass
        DigestAnnotator annot;
        IdentityPreprocessor pre;
        AgentBundle agents{&planner, &annot, &eval, &pre};
        PlanConfig config;
        config.max_total_expansions = bound;
        config.max_depth = 100;
        TaskResult r = run_task("adversarial", {}, lib, agents, backend, config);
        if (backend.jobs() > bound || r.expansions > bound ||
            r.status == TaskStatus::Resolved) {
            ok = false;
        }
        note += std::to_string(backend.jobs()) + "/" + std::to_string(bound) + " ";
        g_structural_failures += backend.structural_failures();
    }
    verdict(6, ok, "adversarial adapters never exceed the execution budget",
            "jobs/bound = " + note);
}

// --- criterion 7: wire protocol against the stub ---------------------------

void criterion_7() {
    WorkflowGraph g = WorkflowGraph::parse(R"({
        "1": {"class_type": "SynthStage", "inputs": {"prompt": "wire test"}},
        "9": {"class_type": "SaveImage", "inputs": {"images": ["1", 0]}}
    })");
    g.title = "wire";
    if (!validate_dag(g, true).ok()) ++g_structural_failures;

    bool ok = true;
    std::string note;
    struct Case {
        StubScript::Mode mode;
        ExecutionOutcome::Status expect;
    };
    for (const Case& c : {Case{StubScript::Mode::Complete,
                               ExecutionOutcome::Status::Completed},
                          Case{StubScript::Mode::NodeError,
                               ExecutionOutcome::Status::Failed},
                          Case{StubScript::Mode::Timeout,
                               ExecutionOutcome::Status::TimedOut}}) {
        StubScript script;
        script.mode = c.mode;
        StubServer server(0, script);
        RemoteBackendConfig config;
        config.host = "127.0.0.1";
        config.port = server.port();
        config.artifacts_dir = temp_dir("c7");
        RemoteBackend backend(config);
        ExecutionOutcome outcome = backend.execute(g, 1.5);
        if (outcome.status != c.expect) ok = false;

        // byte-for-byte: the compact serialization is embedded verbatim
        std::string body = server.last_prompt_body();
        if (body.find(g.serialize_compact()) == std::string::npos) ok = false;
        ordered_json parsed = ordered_json::parse(body);
        if (parsed["prompt"].dump() != g.serialize_compact()) ok = false;
        if (!parsed.contains("client_id")) ok = false;
        note += std::string(outcome_status_name(outcome.status)) + " ";
    }
    verdict(7, ok,
            "POST body embeds serialize(graph) verbatim and all 3 stub "
            "scenarios map to the right outcome",
            note);
}

// --- criterion 8: policy comparison ordering --------------------------------

AblationReport run_reference_ablation(int reps) {
    SyntheticTaskSuite suite = SyntheticTaskSuite::uniform(1, 3, 0.7, 7);
    AblationOptions options;
    options.repetitions = reps;
    options.seed = 7;
    return run_ablation(
        suite,
        {PolicyVariant::Full, PolicyVariant::NoTree, PolicyVariant::NoFeedback},
        options);
}

void criterion_8() {
    auto t0 = std::chrono::steady_clock::now();
    AblationReport report = run_reference_ablation(500);
    double secs = seconds_since(t0);

    const PolicyStats& full = report.per_policy.at("full");
    const PolicyStats& no_tree = report.per_policy.at("no-tree");
    const PolicyStats& no_fb = report.per_policy.at("no-feedback");
    double p_tree = report.p_value_vs_full.at("no-tree");
    double p_fb = report.p_value_vs_full.at("no-feedback");

    bool ok = full.resolve_rate > no_tree.resolve_rate &&
              full.resolve_rate > no_fb.resolve_rate && p_tree < 0.01 &&
              p_fb < 0.01 && secs < 60.0;
    // every policy submitted only structurally valid graphs
    if (full.pass_rate != 1.0 || no_tree.pass_rate != 1.0 ||
        no_fb.pass_rate != 1.0) {
        ok = false;
        ++g_structural_failures;
    }
    std::ostringstream note;
    note << "full=" << full.resolve_rate << " no-tree=" << no_tree.resolve_rate
         << " no-feedback=" << no_fb.resolve_rate << ", p=" << p_tree << "/"
         << p_fb << ", " << secs << " s";
    verdict(8, ok,
            "full policy beats both reduced policies at p < 0.01 over 500 reps",
            note.str());
}

// --- criterion 9: no structural failures anywhere in criteria 4-8 ----------

void criterion_9() {
    verdict(9, g_structural_failures == 0,
            "every submitted workflow passed concrete validation across the "
            "suite",
            std::to_string(g_structural_failures) + " structural failures");
}

// --- criterion 10: determinism of traces under fixed seeds -----------------

std::string normalized_trace_bundle(const std::string& tag) {
    SyntheticTaskSuite suite = SyntheticTaskSuite::uniform(1, 3, 0.6, 70);
    Library lib = synthetic_library(suite);
    std::string bundle;
    for (int run = 0; run < 20; ++run) {
        SimProfile profile;
        profile.seed = 7000 + run;
        for (const std::string& s : suite.tasks[0].sequence) {
            profile.per_workflow[s] = WorkflowSimProfile{0.6, 0.9, 0.02, 1, 2};
        }
        std::string dir = temp_dir("c10-" + tag);
        SimBackend backend(profile, dir);
        SyntheticPlanner planner(suite.tasks[0].sequence, true);
        AlwaysPassEvaluator eval;
        DigestAnnotator annot;
        IdentityPreprocessor pre;
        AgentBundle agents{&planner, &annot, &eval, &pre};
        PlanConfig config;
        config.max_total_expansions = 18;
        TaskResult r = run_task("determinism", {}, lib, agents, backend, config);
        std::string nd = r.trace.to_ndjson(/*include_timestamps=*/false);
        size_t at;
        while ((at = nd.find(dir)) != std::string::npos) {
            nd.replace(at, dir.size(), "<dir>");
        }
        bundle += nd;
    }
    return bundle;
}

void criterion_10() {
    bool traces_equal =
        normalized_trace_bundle("a") == normalized_trace_bundle("b");
    bool reports_equal = run_reference_ablation(100).to_json().dump() ==
                         run_reference_ablation(100).to_json().dump();
    verdict(10, traces_equal && reports_equal,
            "identical seeds reproduce identical traces and reports",
            std::string("traces ") + (traces_equal ? "equal" : "differ") +
                ", reports " + (reports_equal ? "equal" : "differ"));
}

}  // namespace

int main() {
    Library lib = Library::load_file("fixtures/library.txt", "fixtures");

    criterion_1();
    criterion_2(lib);
    criterion_3(lib);
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();

    if (g_failures == 0) {
        std::cout << "all criteria passed\n";
        return 0;
    }
    std::cout << g_failures << " criteria failed\n";
    return 1;
}

// Python surface: graph checks, library access, task runs against the
// simulator, and the policy comparison harness. Structured results cross the
// boundary as JSON text; callers json.loads them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "atelier/ablation.hpp"
#include "atelier/mock_agents.hpp"
#include "atelier/planner.hpp"
#include "atelier/sim_backend.hpp"
#include "atelier/util.hpp"

namespace py = pybind11;
using namespace atelier;

namespace {

std::string validate_text(const std::string& text) {
    WorkflowGraph graph = WorkflowGraph::parse(text);
    ValidationReport report = validate_dag(graph);
    ordered_json out = ordered_json::array();
    for (const Finding& f : report.findings) {
        out.push_back(ordered_json{{"kind", finding_kind_name(f.kind)},
                                   {"nodes", f.node_ids},
                                   {"detail", f.detail}});
    }
    return out.dump();
}

std::string run_sim_task(const std::string& task, const std::string& library_doc,
                         const std::string& template_dir,
                         const std::string& scenario_path,
                         const std::string& artifacts_dir, uint64_t seed,
                         int max_depth, int max_children, int max_expansions,
                         const std::string& threshold) {
    Library library = Library::load_file(library_doc, template_dir);
    ScenarioBundle scenario = load_scenario(scenario_path);

    SimProfile profile;
    profile.seed = seed;
    SimBackend backend(profile, artifacts_dir);

    PlanConfig config;
    config.max_depth = max_depth;
    config.max_children_per_node = max_children;
    config.max_total_expansions = max_expansions;
    config.threshold = eval_threshold_from_name(threshold);

    TaskResult result =
        run_task(task, {}, library, scenario.agents(), backend, config);
    ordered_json out{{"status", task_status_name(result.status)},
                     {"artifacts", result.final_artifacts},
                     {"expansions", result.expansions},
                     {"trace", result.trace.to_ndjson(false)}};
    return out.dump();
}

std::string ablate(int reps, uint64_t seed, int steps, double step_success) {
    SyntheticTaskSuite suite =
        SyntheticTaskSuite::uniform(1, steps, step_success, seed);
    AblationOptions options;
    options.repetitions = reps;
    options.seed = seed;
    AblationReport report = run_ablation(
        suite,
        {PolicyVariant::Full, PolicyVariant::NoTree, PolicyVariant::NoFeedback},
        options);
    return report.to_json().dump();
}

}  // namespace

PYBIND11_MODULE(atelier_py, m) {
    m.doc() = "Workflow-template orchestration engine";

    m.def("canonicalize_workflow", [](const std::string& text) {
        return WorkflowGraph::parse(text).serialize_compact();
    }, py::arg("text"), "Parse an API-format workflow and re-emit it compactly");

    m.def("validate_workflow", &validate_text, py::arg("text"),
          "Structural findings as a JSON list (empty list = valid)");

    m.def("topological_order", [](const std::string& text) {
        return topological_order(WorkflowGraph::parse(text));
    }, py::arg("text"));

    m.def("placeholder_keys", [](const std::string& text) {
        return WorkflowGraph::parse(text).placeholder_keys();
    }, py::arg("text"));

    py::class_<Library>(m, "Library")
        .def_static("load", &Library::load_file, py::arg("document_path"),
                    py::arg("template_dir"))
        .def("__len__", &Library::size)
        .def("names", [](const Library& lib) {
            std::vector<std::string> names;
            for (const AtomicWorkflow& wf : lib.workflows()) {
                names.push_back(wf.descriptor.name);
            }
            return names;
        })
        .def("render_context", &Library::render_context)
        .def("instantiate",
             [](const Library& lib, const std::string& name,
                const std::string& arguments_json) {
                 const AtomicWorkflow* wf = lib.find(name);
                 if (!wf) throw std::runtime_error("unknown workflow: " + name);
                 SwiCall call;
                 call.workflow_name = name;
                 ordered_json args = ordered_json::parse(arguments_json);
                 for (auto it = args.begin(); it != args.end(); ++it) {
                     call.arguments[it.key()] = it.value();
                 }
                 return instantiate(*wf, call).serialize_compact();
             },
             py::arg("name"), py::arg("arguments_json"));

    m.def("run_sim_task", &run_sim_task, py::arg("task"), py::arg("library_doc"),
          py::arg("template_dir"), py::arg("scenario_path"),
          py::arg("artifacts_dir"), py::arg("seed") = 0,
          py::arg("max_depth") = 6, py::arg("max_children") = 3,
          py::arg("max_expansions") = 24, py::arg("threshold") = "normal",
          "Plan and execute against the simulator; returns a JSON summary");

    m.def("ablate", &ablate, py::arg("reps") = 100, py::arg("seed") = 7,
          py::arg("steps") = 3, py::arg("step_success") = 0.7,
          "Policy comparison on a synthetic suite; returns the report JSON");
}

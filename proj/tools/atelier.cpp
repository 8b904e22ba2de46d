// Command-line front end: run tasks, validate workflow documents, list the
// template library, run the policy comparison harness, or host the protocol
// stub for integration testing.

#include "atelier/ablation.hpp"
#include "atelier/mock_agents.hpp"
#include "atelier/planner.hpp"
#include "atelier/remote_agents.hpp"
#include "atelier/remote_backend.hpp"
#include "atelier/sim_backend.hpp"
#include "atelier/stub_server.hpp"
#include "atelier/util.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace atelier;

namespace {

// Exit codes shared across subcommands.
constexpr int kExitResolved = 0;
constexpr int kExitUnresolved = 1;
constexpr int kExitConfig = 2;
constexpr int kExitUnreachable = 3;

SimProfile parse_sim_profile(const std::string& path) {
    ordered_json doc = ordered_json::parse(read_file(path));
    auto read_wf = [](const ordered_json& j) {
        WorkflowSimProfile p;
        p.success_prob = j.value("success_prob", 1.0);
        p.quality_mean = j.value("quality_mean", 0.8);
        p.quality_stddev = j.value("quality_stddev", 0.1);
        p.latency_lo_ms = j.value("latency_lo_ms", 5);
        p.latency_hi_ms = j.value("latency_hi_ms", 25);
        return p;
    };
    SimProfile profile;
    profile.seed = doc.value("seed", uint64_t{0});
    profile.repeat_failure_penalty = doc.value("repeat_failure_penalty", 1.0);
    if (doc.contains("fallback")) profile.fallback = read_wf(doc["fallback"]);
    if (doc.contains("per_workflow")) {
        for (auto it = doc["per_workflow"].begin(); it != doc["per_workflow"].end();
             ++it) {
            profile.per_workflow[it.key()] = read_wf(it.value());
        }
    }
    return profile;
}

std::string make_run_id() {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    return "run-" + std::to_string(ms) + "-" + std::to_string(::getpid());
}

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Workflow-template orchestration engine"};
    app.set_config("--config", "atelier.toml", "TOML config file");
    app.require_subcommand(1);

    // ---- run ----
    auto* run = app.add_subcommand("run", "Plan and execute a task");
    std::string task;
    std::string library_path = "fixtures/library.txt";
    std::string template_dir = "fixtures";
    std::vector<std::string> inputs;
    std::string backend_name = "sim";
    std::string server_url = "http://127.0.0.1:8188";
    std::string sim_profile_path;
    std::string scenario_path;
    std::string prompts_dir = "prompts";
    std::string runs_dir = "runs";
    std::string threshold_name = "normal";
    uint64_t seed = 0;
    bool json_summary = false;
    PlanConfig plan_config;
    run->add_option("--task", task, "Task instruction")->required();
    run->add_option("--library", library_path, "Interface descriptor document")
        ->envname("ATELIER_LIBRARY");
    run->add_option("--templates", template_dir, "Workflow template directory")
        ->envname("ATELIER_TEMPLATES");
    run->add_option("--input", inputs, "Input artifact path (repeatable)");
    run->add_option("--backend", backend_name, "Execution backend: sim | remote")
        ->check(CLI::IsMember({"sim", "remote"}))
        ->envname("ATELIER_BACKEND");
    run->add_option("--server", server_url, "Generation server URL")
        ->envname("ATELIER_SERVER");
    run->add_option("--sim-profile", sim_profile_path,
                    "Simulator profile JSON (sim backend)");
    run->add_option("--scenario", scenario_path,
                    "Scripted-agents scenario file; omit to use the remote "
                    "chat adapter (ATELIER_LLM_URL)");
    run->add_option("--prompts", prompts_dir, "Prompt asset directory");
    run->add_option("--runs-dir", runs_dir, "Where run records are written");
    run->add_option("--max-depth", plan_config.max_depth, "Search depth limit");
    run->add_option("--max-children", plan_config.max_children_per_node,
                    "Retry attempts per node");
    run->add_option("--max-expansions", plan_config.max_total_expansions,
                    "Executed-job budget");
    run->add_option("--threshold", threshold_name, "strict | normal | lenient")
        ->check(CLI::IsMember({"strict", "normal", "lenient"}));
    run->add_option("--timeout", plan_config.job_timeout_s,
                    "Per-job timeout in seconds");
    run->add_option("--seed", seed, "Simulator seed override");
    run->add_flag("--json", json_summary, "Print a JSON summary to stdout");

    // ---- validate ----
    auto* validate = app.add_subcommand(
        "validate", "Check workflow documents and the library for structural faults");
    std::vector<std::string> validate_files;
    std::string v_library_path;
    std::string v_template_dir = "fixtures";
    validate->add_option("files", validate_files, "Workflow JSON documents");
    validate->add_option("--library", v_library_path,
                         "Also load and check a descriptor document");
    validate->add_option("--templates", v_template_dir,
                         "Template directory for --library");

    // ---- list ----
    auto* list = app.add_subcommand("list", "List the workflow templates");
    std::string l_library_path = "fixtures/library.txt";
    std::string l_template_dir = "fixtures";
    list->add_option("--library", l_library_path, "Interface descriptor document");
    list->add_option("--templates", l_template_dir, "Template directory");

    // ---- ablate ----
    auto* ablate = app.add_subcommand(
        "ablate", "Compare planning policies on a synthetic task suite");
    AblationOptions ab_options;
    std::string suite_path;
    std::string report_path;
    int ab_steps = 3;
    double ab_step_success = 0.7;
    ablate->add_option("--reps", ab_options.repetitions, "Repetitions per policy");
    ablate->add_option("--seed", ab_options.seed, "Suite seed");
    ablate->add_option("--suite", suite_path, "Task suite JSON; omit for default");
    ablate->add_option("--steps", ab_steps, "Steps per default task");
    ablate->add_option("--step-success", ab_step_success,
                       "Per-step success probability of the default task");
    ablate->add_option("--penalty", ab_options.repeat_failure_penalty,
                       "Blind-retry success multiplier");
    ablate->add_option("--out", report_path, "Write the report JSON here too");

    // ---- stub-server ----
    auto* stub = app.add_subcommand("stub-server",
                                    "Host the scripted protocol stub");
    int stub_port = 8188;
    std::string stub_script_path;
    stub->add_option("--port", stub_port, "Listen port (0 = ephemeral)");
    stub->add_option("--script", stub_script_path, "Stub behavior script JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (run->parsed()) {
            plan_config.threshold = eval_threshold_from_name(threshold_name);
            Library library = Library::load_file(library_path, template_dir);

            fs::path run_dir = fs::path(runs_dir) / make_run_id();
            fs::create_directories(run_dir);
            fs::path artifacts_dir = run_dir / "artifacts";

            std::unique_ptr<Backend> backend;
            if (backend_name == "sim") {
                SimProfile profile;
                if (!sim_profile_path.empty()) {
                    profile = parse_sim_profile(sim_profile_path);
                }
                if (seed != 0) profile.seed = seed;
                backend = std::make_unique<SimBackend>(profile,
                                                       artifacts_dir.string());
            } else {
                RemoteBackendConfig rc = RemoteBackendConfig::from_url(server_url);
                rc.default_timeout_s = plan_config.job_timeout_s;
                rc.artifacts_dir = artifacts_dir.string();
                backend = std::make_unique<RemoteBackend>(rc);
            }

            ScenarioBundle scenario;
            std::unique_ptr<RemotePlanner> r_planner;
            std::unique_ptr<RemoteEvaluator> r_evaluator;
            std::unique_ptr<RemoteAnnotator> r_annotator;
            std::unique_ptr<RemotePreprocessor> r_preprocessor;
            AgentBundle agents;
            if (!scenario_path.empty()) {
                scenario = load_scenario(scenario_path);
                agents = scenario.agents();
            } else {
                ChatConfig chat = ChatConfig::from_env();
                if (chat.url.empty()) {
                    std::cerr << "error: no --scenario given and ATELIER_LLM_URL "
                                 "is unset; nothing can plan\n";
                    return kExitConfig;
                }
                PromptSet prompts = PromptSet::load(prompts_dir);
                r_planner = std::make_unique<RemotePlanner>(ChatClient(chat), prompts);
                r_evaluator =
                    std::make_unique<RemoteEvaluator>(ChatClient(chat), prompts);
                r_annotator =
                    std::make_unique<RemoteAnnotator>(ChatClient(chat), prompts);
                r_preprocessor =
                    std::make_unique<RemotePreprocessor>(ChatClient(chat), prompts);
                agents = AgentBundle{r_planner.get(), r_annotator.get(),
                                     r_evaluator.get(), r_preprocessor.get()};
            }

            auto started = std::chrono::steady_clock::now();
            TaskResult result =
                run_task(task, inputs, library, agents, *backend, plan_config);
            auto duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::steady_clock::now() - started)
                                   .count();

            fs::path trace_path = run_dir / "trace.ndjson";
            fs::path ws_path = run_dir / "workspace.json";
            result.trace.write(trace_path.string());
            write_file(ws_path.string(), result.final_workspace.to_json().dump(2));
            std::cerr << "trace: " << trace_path.string() << "\n";
            std::cerr << "workspace: " << ws_path.string() << "\n";

            if (json_summary) {
                ordered_json summary{{"status", task_status_name(result.status)},
                                     {"artifacts", result.final_artifacts},
                                     {"expansions", result.expansions},
                                     {"duration_ms", duration_ms}};
                std::cout << summary.dump(2) << "\n";
            } else {
                std::cout << task_status_name(result.status) << " after "
                          << result.expansions << " executed jobs\n";
                for (const std::string& a : result.final_artifacts) {
                    std::cout << "artifact: " << a << "\n";
                }
            }
            return result.status == TaskStatus::Resolved ? kExitResolved
                                                         : kExitUnresolved;
        }

        if (validate->parsed()) {
            bool all_ok = true;
            for (const std::string& file : validate_files) {
                try {
                    WorkflowGraph graph = WorkflowGraph::parse(read_file(file));
                    ValidationReport report = validate_dag(graph);
                    if (report.ok()) {
                        std::cout << file << ": ok (" << graph.size()
                                  << " nodes)\n";
                    } else {
                        all_ok = false;
                        for (const Finding& f : report.findings) {
                            std::cout << file << ": "
                                      << finding_kind_name(f.kind) << " "
                                      << f.detail << "\n";
                        }
                    }
                } catch (const std::exception& e) {
                    all_ok = false;
                    std::cout << file << ": " << e.what() << "\n";
                }
            }
            if (!v_library_path.empty()) {
                try {
                    Library library =
                        Library::load_file(v_library_path, v_template_dir);
                    std::cout << v_library_path << ": ok (" << library.size()
                              << " templates)\n";
                } catch (const std::exception& e) {
                    all_ok = false;
                    std::cout << v_library_path << ": " << e.what() << "\n";
                }
            }
            return all_ok ? kExitResolved : kExitConfig;
        }

        if (list->parsed()) {
            Library library = Library::load_file(l_library_path, l_template_dir);
            for (const AtomicWorkflow& wf : library.workflows()) {
                std::string desc = wf.descriptor.description;
                auto nl = desc.find('\n');
                if (nl != std::string::npos) desc = desc.substr(0, nl);
                std::cout << wf.descriptor.name << "\t"
                          << task_kind_name(wf.descriptor.kind) << "\t" << desc
                          << "\n";
            }
            return kExitResolved;
        }

        if (ablate->parsed()) {
            SyntheticTaskSuite suite;
            if (!suite_path.empty()) {
                suite = SyntheticTaskSuite::from_file(suite_path);
                suite.seed = ab_options.seed;
            } else {
                suite = SyntheticTaskSuite::uniform(1, ab_steps, ab_step_success,
                                                    ab_options.seed);
            }
            AblationReport report = run_ablation(
                suite,
                {PolicyVariant::Full, PolicyVariant::NoTree,
                 PolicyVariant::NoFeedback},
                ab_options);
            std::string text = report.to_json().dump(2);
            std::cout << text << "\n";
            if (!report_path.empty()) write_file(report_path, text + "\n");
            return kExitResolved;
        }

        if (stub->parsed()) {
            StubScript script;
            if (!stub_script_path.empty()) {
                script = StubScript::from_file(stub_script_path);
            }
            StubServer server(stub_port, script);
            std::cout << "listening on " << server.port() << "\n" << std::flush;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            while (!g_stop) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
            server.stop();
            return kExitResolved;
        }
    } catch (const BackendUnreachable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUnreachable;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "atelier/util.hpp"
#include "atelier/workspace.hpp"

#include <filesystem>
#include <unistd.h>

using namespace atelier;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ws-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int n = 0;
        return n;
    }
    std::string file(const std::string& name, const std::string& contents) {
        fs::path p = path / name;
        write_file(p.string(), contents);
        return p.string();
    }
};

ExecutionOutcome completed_with(std::vector<std::pair<std::string, std::string>> arts) {
    ExecutionOutcome o;
    o.status = ExecutionOutcome::Status::Completed;
    o.artifacts = std::move(arts);
    return o;
}

}  // namespace

TEST_CASE("ingest registers artifacts with origin, fingerprint, annotation") {
    TempDir dir;
    std::string img = dir.file("out.png", "PNGBYTES");

    Workspace ws;
    ws.instruction = "make art";

    Annotation ann;
    ann.artifact_ref = img;
    ann.summary = "a picture";

    IngestResult r = ingest_outcome(ws, completed_with({{"9", img}}), 2,
                                    "t2i-flux", ArtifactKind::Image, {ann});
    CHECK(r.warnings.empty());
    REQUIRE(r.workspace.artifacts.size() == 1);
    const ArtifactRecord& rec = r.workspace.artifacts[0];
    CHECK(rec.origin_node == 2);
    CHECK(rec.origin_workflow == "t2i-flux");
    CHECK(rec.kind == ArtifactKind::Image);
    CHECK(rec.fingerprint == fnv1a64_hex("PNGBYTES"));
    REQUIRE(rec.annotation);
    CHECK(rec.annotation->summary == "a picture");
    REQUIRE(r.workspace.context_log.size() == 1);
    CHECK(r.workspace.context_log[0].find("a picture") != std::string::npos);

    // source workspace untouched
    CHECK(ws.artifacts.empty());
}

TEST_CASE("duplicate artifact path replaces the record with a warning") {
    TempDir dir;
    std::string img = dir.file("same.png", "v1");

    Workspace ws;
    IngestResult first = ingest_outcome(ws, completed_with({{"9", img}}), 1,
                                        "wf-a", ArtifactKind::Image, {});
    write_file(img, "v2");
    IngestResult second = ingest_outcome(first.workspace,
                                         completed_with({{"9", img}}), 3, "wf-b",
                                         ArtifactKind::Image, {});
    REQUIRE(second.warnings.size() == 1);
    REQUIRE(second.workspace.artifacts.size() == 1);
    CHECK(second.workspace.artifacts[0].origin_workflow == "wf-b");
    CHECK(second.workspace.artifacts[0].fingerprint == fnv1a64_hex("v2"));
    CHECK(second.workspace.context_log.size() == 2);
}

TEST_CASE("zero-artifact completion still leaves one context entry") {
    Workspace ws;
    IngestResult r = ingest_outcome(ws, completed_with({}), 1, "prompt-enhance",
                                    ArtifactKind::Other, {});
    CHECK(r.workspace.artifacts.empty());
    REQUIRE(r.workspace.context_log.size() == 1);
    CHECK(r.workspace.context_log[0].find("prompt-enhance") != std::string::npos);
}

TEST_CASE("child snapshot chain never mutates the parent") {
    TempDir dir;
    std::string a = dir.file("a.png", "A");
    std::string b = dir.file("b.png", "B");

    Workspace root;
    root.instruction = "task";
    root.add_context("seed entry");

    IngestResult lvl1 = ingest_outcome(snapshot(root), completed_with({{"9", a}}),
                                       1, "wf", ArtifactKind::Image, {});
    IngestResult lvl2 = ingest_outcome(snapshot(lvl1.workspace),
                                       completed_with({{"9", b}}), 2, "wf",
                                       ArtifactKind::Image, {});
    CHECK(root.artifacts.empty());
    CHECK(lvl1.workspace.artifacts.size() == 1);
    CHECK(lvl2.workspace.artifacts.size() == 2);
    REQUIRE(lvl2.workspace.parent_snapshot);
    CHECK(lvl2.workspace.parent_snapshot->artifacts.size() == 1);
    CHECK(lvl2.workspace.produced_artifact_count() == 2);
}

TEST_CASE("produced count ignores user-provided inputs") {
    Workspace ws;
    ArtifactRecord input;
    input.path = "user.png";
    input.origin_node = -1;
    ws.artifacts.push_back(input);
    CHECK(ws.produced_artifact_count() == 0);
    CHECK(ws.find_artifact("user.png") != nullptr);
    CHECK(ws.find_artifact("missing.png") == nullptr);
}

TEST_CASE("oversized context entries are truncated to the cap") {
    Workspace ws;
    ws.add_context(std::string(Workspace::kContextEntryCap + 500, 'x'));
    REQUIRE(ws.context_log.size() == 1);
    CHECK(ws.context_log[0].size() == Workspace::kContextEntryCap);
}

TEST_CASE("workspace serializes to a complete JSON document") {
    TempDir dir;
    std::string img = dir.file("o.png", "bytes");
    Workspace ws;
    ws.instruction = "raw";
    ws.enriched_spec = "rich";
    Annotation ann;
    ann.artifact_ref = img;
    ann.summary = "sum";
    IngestResult r = ingest_outcome(ws, completed_with({{"9", img}}), 0, "wf",
                                    ArtifactKind::Image, {ann});
    ordered_json doc = r.workspace.to_json();
    CHECK(doc["instruction"] == "raw");
    CHECK(doc["artifacts"].size() == 1);
    CHECK(doc["artifacts"][0]["annotation"]["summary"] == "sum");
    CHECK(doc["context_log"].size() == 1);
}

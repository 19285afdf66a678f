#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../tools/cli.hpp"
#include "dlegion/report.hpp"
#include "dlegion/simulator.hpp"

using namespace dlegion;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("dlegion_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

ModelConfig tiny_model() {
    ModelConfig m;
    m.name = "tiny";
    m.layers = 1;
    m.hidden_size = 128;
    m.num_heads = 4;
    m.num_kv_heads = 2;
    m.head_dim = 32;
    m.seq_len = 40;
    return m;
}

}  // namespace

TEST_CASE("help and usage errors", "[cli]") {
    CHECK(invoke({"--help"}).code == cli::kOk);
    CHECK(invoke({}).code == cli::kInputError);
    CHECK(invoke({"frobnicate"}).code == cli::kInputError);
    CHECK(invoke({"simulate", "--seed", "x"}).code == cli::kInputError);
}

TEST_CASE("workloads prints a per-stage table", "[cli]") {
    const auto r = invoke({"workloads", "--model", "bitnet-1.58b"});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("Total") != std::string::npos);
    CHECK(r.out.find("3848290697216") != std::string::npos);
    CHECK(invoke({"workloads", "--model", "gpt-9"}).code == cli::kInputError);
}

TEST_CASE("dse needs at least two candidates", "[cli]") {
    const auto dir = scratch("dse");
    write(dir / "one.json", R"({"schema_version":1,"candidates":[{"label":"a","cores":8,"core_dim":16}]})");
    CHECK(invoke({"dse", "--grid", (dir / "one.json").string()}).code == cli::kInputError);
    write(dir / "two.json", R"({"schema_version":1,"candidates":[{"label":"a","cores":8,"core_dim":16},
                                                              {"label":"b","cores":2,"core_dim":32}]})");
    const auto ok = invoke({"dse", "--grid", (dir / "two.json").string()});
    CHECK(ok.code == cli::kOk);
    CHECK(ok.out.find("granularity") != std::string::npos);
    write(dir / "bad.json", "{ not json");
    CHECK(invoke({"dse", "--grid", (dir / "bad.json").string()}).code == cli::kInputError);
    fs::remove_all(dir);
}

TEST_CASE("compare rejects an empty architecture list", "[cli]") {
    CHECK(invoke({"compare", "--model", "bitnet-1.58b", "--archs", ""}).code == cli::kInputError);
    CHECK(invoke({"compare", "--model", "bitnet-1.58b"}).code == cli::kInputError);
}

TEST_CASE("config files are found through the config directory", "[cli]") {
    const auto dir = scratch("configs");
    write(dir / "tiny.json", to_json(tiny_model()).dump());
    auto arch = arch_preset("dlegion-8");
    arch.name = "small-legion";
    arch.legions = 2;
    arch.core_dim = 8;
    write(dir / "small-legion.json", to_json(arch).dump());
    ::setenv(cli::kConfigDirEnv, dir.string().c_str(), 1);

    const auto r = invoke({"simulate", "--arch", "small-legion", "--model", "tiny", "--functional", "--format", "csv"});
    INFO(r.err);
    REQUIRE(r.code == cli::kOk);
    CHECK(r.err.find("functional: PASS") != std::string::npos);
    const auto report = parse_report(r.out, ReportFormat::Csv);
    const auto expect = simulate(derive_attention_workloads(tiny_model()), arch, {}, "tiny").report;
    CHECK(report.total == expect.total);
    REQUIRE(report.manifest);
    CHECK(report.manifest->subcommand == "simulate");

    const auto cmp_dir = dir / "cmp";
    const auto c = invoke({"compare", "--model", "tiny", "--archs", "dip-64,small-legion", "--out", cmp_dir.string()});
    CHECK(c.code == cli::kOk);
    CHECK(fs::exists(cmp_dir / "compare.csv"));
    CHECK(fs::exists(cmp_dir / "small-legion.csv"));

    write(dir / "broken.json", R"({"name":"broken","legions":0})");
    CHECK(invoke({"simulate", "--arch", "broken", "--model", "tiny"}).code == cli::kInputError);
    ::unsetenv(cli::kConfigDirEnv);
    CHECK(invoke({"simulate", "--arch", "small-legion", "--model", "tiny"}).code == cli::kInputError);
    fs::remove_all(dir);
}

TEST_CASE("zero-tile books from ztb-gen drive simulate", "[cli]") {
    const auto dir = scratch("ztb");
    const auto book = (dir / "q.ztb").string();
    REQUIRE(invoke({"ztb-gen", "--arch", "dlegion-8", "--model", "bitnet-1.58b", "--stage", "QProj", "--sparsity", "0.5",
                 "--out", book})
                .code == cli::kOk);
    const auto r = invoke({"simulate", "--arch", "dlegion-8", "--model", "bitnet-1.58b", "--ztb", book});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.err.find("skipped windows: ") != std::string::npos);
    CHECK(r.err.find("skipped windows: 0\n") == std::string::npos);

    const auto wrong = (dir / "wrong.ztb").string();
    REQUIRE(invoke({"ztb-gen", "--arch", "dlegion-8", "-K", "64", "-N", "64", "--out", wrong}).code == cli::kOk);
    const auto m = invoke({"simulate", "--arch", "dlegion-8", "--model", "bitnet-1.58b", "--ztb", wrong});
    CHECK(m.code == cli::kDataMismatch);
    write(dir / "garbage.ztb", "nope");
    CHECK(invoke({"simulate", "--arch", "dlegion-8", "--model", "bitnet-1.58b", "--ztb", (dir / "garbage.ztb").string()})
              .code == cli::kDataMismatch);
    fs::remove_all(dir);
}

#include <catch_amalgamated.hpp>

#include <random>

#include "dlegion/baselines.hpp"
#include "dlegion/errors.hpp"
#include "dlegion/simulator.hpp"
#include "oracles.hpp"

using namespace dlegion;

namespace {

Stage stage_for(PrecisionMode mode) { return mode == PrecisionMode::Dense8x8 ? Stage::AttnScore : Stage::QProj; }

}  // namespace

TEST_CASE("DiP and ADiP follow the single-core closed form", "[baselines]") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<Count> dim(1, 3000);
    const auto dip = arch_preset("dip-64");
    const auto adip = arch_preset("adip-64");
    for (int i = 0; i < 300; ++i) {
        const auto mode = static_cast<PrecisionMode>(i % 3);
        const auto s = oracle::spec(dim(rng), dim(rng), dim(rng), mode, stage_for(mode));
        REQUIRE(baseline_latency(s, dip) == oracle::latency(s.M, s.K, s.N, 64, 1, dip.pipeline_stages, 1));
        REQUIRE(baseline_latency(s, adip) ==
                oracle::latency(s.M, s.K, s.N, 64, 1, adip.pipeline_stages, acceleration_ratio(mode)));
    }
}

TEST_CASE("single exact-fit tile on DiP", "[baselines]") {
    auto dip = arch_preset("dip-64");
    dip.pipeline_stages = 0;
    CHECK(baseline_latency(oracle::spec(64, 64, 64, PrecisionMode::Dense8x8, Stage::AttnScore), dip) == 3 * 64);
}

TEST_CASE("WS pays fill and drain on top of DiP", "[baselines]") {
    const auto ws = arch_preset("ws-64");
    const auto dip = arch_preset("dip-64");
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<Count> dim(1, 3000);
    for (int i = 0; i < 100; ++i) {
        const auto s = oracle::spec(dim(rng), dim(rng), dim(rng), PrecisionMode::Proj8x2, Stage::QProj);
        const Count passes = oracle::up(s.K, 64) * oracle::up(s.N, 64);
        REQUIRE(baseline_latency(s, ws) == baseline_latency(s, dip) + passes * 2 * 63 + 63);
        REQUIRE(baseline_latency(s, dip) < baseline_latency(s, ws));
    }
    const auto s = oracle::spec(640, 640, 640, PrecisionMode::Dense8x8, Stage::AttnScore);
    CHECK(baseline_latency(s, ws, {.ws_pass_overhead = 0, .ws_drain = 0}) == baseline_latency(s, dip));
}

TEST_CASE("ADiP on a 128-wide projection gains only 2x", "[baselines]") {
    const auto s = oracle::spec(2048, 2560, 128, PrecisionMode::Proj8x2, Stage::QProj);
    const Cycles dip = baseline_latency(s, arch_preset("dip-64"));
    const Cycles adip = baseline_latency(s, arch_preset("adip-64"));
    CHECK(dip - 64 == 2 * (adip - 64));
    INFO("raw ratio " << static_cast<double>(dip) / static_cast<double>(adip));
    CHECK(static_cast<double>(dip) / static_cast<double>(adip) < 2.0);
}

TEST_CASE("baseline traffic has no reuse across passes", "[baselines]") {
    const auto dip = arch_preset("dip-64");
    const auto s = oracle::spec(300, 200, 130, PrecisionMode::Proj8x2, Stage::QProj);
    const auto t = baseline_traffic(s, dip);
    CHECK(t.activation_bytes == 3 * 300 * 200);
    CHECK(t.weight_bytes == oracle::up(200 * 130 * 2, 8));
    CHECK(t.psum_bytes == oracle::psum_traffic(300, 130, 200, 64));
    const auto a = oracle::spec(300, 200, 130, PrecisionMode::Dense8x8, Stage::AttnScore);
    CHECK(baseline_traffic(a, dip).weight_bytes == 200 * 130);
}

TEST_CASE("TPU heads go round-robin over four cores", "[baselines]") {
    const auto tpu = arch_preset("tpuv4i");
    REQUIRE(tpu.legions == 4);
    auto heads = [](Count n) {
        std::vector<WorkloadSpec> v;
        for (Count h = 0; h < n; ++h) {
            auto s = oracle::spec(512, 2560, 128, PrecisionMode::Proj8x2, Stage::QProj);
            s.head_id = h;
            v.push_back(s);
        }
        return WorkloadSet::from_specs(v);
    };
    const Cycles one = baseline_latency(heads(1).specs[0], tpu);
    CHECK(run_baseline(heads(4), tpu).report.total.cycles == one);
    CHECK(run_baseline(heads(5), tpu).report.total.cycles == 2 * one);
    CHECK(run_baseline(heads(8), tpu).report.total.ops == 8 * heads(1).total_ops);
}

TEST_CASE("baseline runs reject Legion machines", "[baselines]") {
    const auto set = WorkloadSet::from_specs({oracle::spec(8, 8, 8, PrecisionMode::Dense8x8, Stage::AttnScore)});
    CHECK_THROWS_AS(run_baseline(set, arch_preset("dlegion-8")), ConfigError);
}

TEST_CASE("latency dominance on every BitNet stage", "[baselines]") {
    std::vector<WorkloadSpec> layer0;
    for (const auto& s : derive_attention_workloads(model_preset("bitnet-1.58b")).specs)
        if (s.layer == 0) layer0.push_back(s);
    const auto set = WorkloadSet::from_specs(layer0);
    const auto dl = simulate(set, arch_preset("dlegion-8")).report;
    const auto adip = run_baseline(set, arch_preset("adip-64")).report;
    const auto dip = run_baseline(set, arch_preset("dip-64")).report;
    const auto ws = run_baseline(set, arch_preset("ws-64")).report;
    for (const auto& [stage, m] : dl.stages) {
        if (m.ops == 0) continue;
        INFO(to_string(stage));
        CHECK(m.cycles <= adip.stages.at(stage).cycles);
        CHECK(adip.stages.at(stage).cycles <= dip.stages.at(stage).cycles);
        CHECK(dip.stages.at(stage).cycles < ws.stages.at(stage).cycles);
    }
}

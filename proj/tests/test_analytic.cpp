#include <catch_amalgamated.hpp>

#include <random>

#include "dlegion/analytic.hpp"
#include "oracles.hpp"

using namespace dlegion;

namespace {

ArchConfig legion(Count L, Count C, Count D, Count P = 4) {
    ArchConfig a = arch_preset("dlegion-8");
    a.legions = L;
    a.cores_per_legion = C;
    a.core_dim = D;
    a.pipeline_stages = P;
    a.psum_bank_bytes = 1 << 30;
    return a;
}

}  // namespace

TEST_CASE("tile counts", "[analytic]") {
    const auto a = legion(8, 8, 16);
    CHECK(tile_counts(2048, 2560, 2048, a, PrecisionMode::Proj8x2) == TileCounts{128, 20, 32});
    CHECK(tile_counts(16, 16, 16, legion(1, 1, 16), PrecisionMode::Dense8x8) == TileCounts{1, 1, 1});
    CHECK(tile_counts(17, 129, 65, a, PrecisionMode::Proj8x2) == TileCounts{2, 2, 2});
    // INT8-only machines run projection modes at R = 1.
    ArchConfig dip = arch_preset("dip-64");
    CHECK(tile_counts(64, 64, 256, dip, PrecisionMode::Proj8x2).NT == 4);
}

TEST_CASE("Legion latency closed form", "[analytic]") {
    CHECK(legion_latency({128, 20, 32}, legion(8, 8, 16, 4)) == 1'323'536);
    CHECK(legion_latency({1, 1, 1}, legion(1, 1, 16, 0)) == 48);

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<Count> dim(1, 3000);
    for (int i = 0; i < 500; ++i) {
        const Count M = dim(rng), K = dim(rng), N = dim(rng);
        for (Count D : {2, 4, 8, 16, 32})
            for (Count C : {1, 4, 8}) {
                const auto a = legion(1, C, D, i % 7);
                for (auto mode : {PrecisionMode::Dense8x8, PrecisionMode::Proj8x4, PrecisionMode::Proj8x2})
                    REQUIRE(legion_latency(tile_counts(M, K, N, a, mode), a) ==
                            oracle::latency(M, K, N, D, C, i % 7, acceleration_ratio(mode)));
            }
    }
}

TEST_CASE("latency is monotone in every tiling parameter", "[analytic][property]") {
    for (Count D : {4, 16})
        for (Count P : {0, 4}) {
            const auto a = legion(1, 8, D, P);
            const auto base = legion_latency({3, 3, 3}, a);
            CHECK(legion_latency({4, 3, 3}, a) >= base);
            CHECK(legion_latency({3, 4, 3}, a) >= base);
            CHECK(legion_latency({3, 3, 4}, a) >= base);
            CHECK(legion_latency({3, 3, 3}, legion(1, 8, D + 1, P)) >= base);
            CHECK(legion_latency({3, 3, 3}, legion(1, 8, D, P + 1)) >= base);
        }
}

TEST_CASE("quantized modes only shrink NT", "[analytic][property]") {
    const auto a = legion(8, 8, 16);
    for (Count N : {64, 128, 2560}) {
        const auto dense = tile_counts(2048, 2560, N, a, PrecisionMode::Dense8x8);
        const auto p4 = tile_counts(2048, 2560, N, a, PrecisionMode::Proj8x4);
        const auto p2 = tile_counts(2048, 2560, N, a, PrecisionMode::Proj8x2);
        CHECK(dense.NT == 4 * p2.NT);
        CHECK(dense.NT == 2 * p4.NT);
        CHECK(dense.MT == p2.MT);
        CHECK(dense.KT == p2.KT);
        // The trailing drain is paid once, so the 4x holds on the tile-pass part.
        CHECK(legion_latency(dense, a) - 16 == 4 * (legion_latency(p2, a) - 16));
        CHECK(legion_latency(dense, a) - 16 == 2 * (legion_latency(p4, a) - 16));
    }
}

TEST_CASE("widening the Legion divides KT", "[analytic][property]") {
    for (Count k : {2, 4})
        for (Count KT : {1, 3, 8}) {
            const Count C = 2, D = 8;
            const Count K = C * D * k * KT;
            const auto narrow = tile_counts(64, K, 64, legion(1, C, D), PrecisionMode::Dense8x8);
            const auto wide = tile_counts(64, K, 64, legion(1, C * k, D), PrecisionMode::Dense8x8);
            CHECK(wide.KT == oracle::up(narrow.KT, k));
        }
}

TEST_CASE("TFU equals the core dimension", "[analytic]") {
    CHECK(tfu(legion(1, 8, 16), Topology::Legion) == 16);
    CHECK(tfu(legion(1, 1, 64), Topology::SingleCore) == 64);
    CHECK(tfu(legion(1, 16, 16), Topology::Legion) * 4 == tfu(legion(1, 1, 64), Topology::SingleCore));
    CHECK(tfu(legion(1, 1, 1), Topology::SingleCore) == 1);
}

TEST_CASE("peak throughput", "[analytic]") {
    CHECK(peak_throughput(arch_preset("dlegion-8"), PrecisionMode::Proj8x2) == 131'072e9);
    CHECK(peak_throughput(arch_preset("dlegion-8"), PrecisionMode::Dense8x8) == 32'768e9);
    CHECK(peak_throughput(arch_preset("dlegion-64"), PrecisionMode::Proj8x2) == 1'048'576e9);
    ArchConfig tiny = legion(1, 1, 1);
    tiny.frequency_hz = 1;
    tiny.psum_bank_bytes = 64;
    CHECK(peak_throughput(tiny, PrecisionMode::Dense8x8) == 2);
    for (Count L = 1; L <= 64; L *= 2)
        CHECK(peak_throughput(legion(L, 8, 16), PrecisionMode::Proj8x2) ==
              static_cast<double>(L) * peak_throughput(legion(1, 8, 16), PrecisionMode::Proj8x2));
}

TEST_CASE("bandwidth profile", "[analytic]") {
    const auto mono = bandwidth_profile(legion(1, 1, 64), PrecisionMode::Dense8x8);
    const auto spatial = bandwidth_profile(legion(1, 16, 16), PrecisionMode::Dense8x8);
    CHECK(spatial.legion_input_Bps == 4 * mono.legion_input_Bps);
    CHECK(spatial.psum_memory_Bps * 4 == mono.psum_memory_Bps);

    const auto ref = bandwidth_profile(arch_preset("dlegion-8"), PrecisionMode::Dense8x8);
    CHECK(ref.legion_input_Bps == 128e9);  // 1024 bits per cycle at 1 GHz
    CHECK(ref.legion_input_Bps * 8 / 1e9 == arch_preset("dlegion-8").legion_link_bits);

    ArchConfig tiny = legion(1, 1, 1);
    tiny.frequency_hz = 1;
    tiny.psum_bank_bytes = 64;
    CHECK(bandwidth_profile(tiny, PrecisionMode::Dense8x8).legion_input_Bps == 1.0);
}

TEST_CASE("CRI ranks 8x16x16 first on the corner workloads", "[analytic][cri]") {
    const auto scores = cri(default_cri_candidates(), dse_corner_workloads());
    REQUIRE(scores.size() == 4);
    CHECK(scores.front().label == "8x16x16");
    for (const auto& s : scores) {
        CHECK(s.bw_norm >= 0);
        CHECK(s.bw_norm <= 1);
        CHECK(s.tfu_norm <= 1);
        CHECK(s.latency_norm <= 1);
    }
    for (std::size_t i = 1; i < scores.size(); ++i) CHECK(scores[i - 1].cri >= scores[i].cri);
}

TEST_CASE("CRI edge cases", "[analytic][cri]") {
    auto cands = default_cri_candidates();
    const auto corners = dse_corner_workloads();
    CHECK_THROWS_WITH(cri({cands[0]}, corners), Catch::Matchers::ContainsSubstring("≥2 candidates required"));
    CHECK_THROWS(cri({}, corners));

    // Identical candidates tie and keep input order.
    auto twin = cands[2];
    twin.label = "twin";
    const auto tied = cri({cands[2], twin}, corners);
    CHECK(tied[0].cri == tied[1].cri);
    CHECK(tied[0].label == "8x16x16");
    CHECK(tied[1].label == "twin");

    // A candidate worse on every axis scores strictly lower.
    auto worse = cands[2];
    worse.label = "worse";
    worse.arch.pipeline_stages = 400;
    worse.arch.core_dim = 17;
    const auto pair = cri({worse, cands[2]}, corners);
    CHECK(pair[0].label == "8x16x16");
    CHECK(pair[0].cri > pair[1].cri);
}

TEST_CASE("CRI ranking is invariant under rescaling one component", "[analytic][cri][property]") {
    auto cands = default_cri_candidates();
    const auto corners = dse_corner_workloads();
    const auto base = cri(cands, corners);
    // Doubling the frequency doubles every bandwidth figure; latency in cycles is unchanged.
    for (auto& c : cands) c.arch.frequency_hz *= 2;
    const auto scaled = cri(cands, corners);
    REQUIRE(base.size() == scaled.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(base[i].label == scaled[i].label);
        CHECK(base[i].cri == scaled[i].cri);
    }
}

TEST_CASE("CRI weights shift the ranking", "[analytic][cri]") {
    const auto scores = cri(default_cri_candidates(), dse_corner_workloads(), {0.0, 0.0, 1.0});
    CHECK(scores.front().label == "2x64x64");  // lowest mean latency alone
}

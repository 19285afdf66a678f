#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dlegion/errors.hpp"
#include "dlegion/report.hpp"

using namespace dlegion;

namespace {

std::vector<StageEvent> random_events(std::mt19937_64& rng, int n) {
    std::uniform_int_distribution<std::int64_t> v(0, 1'000'000'000);
    std::vector<StageEvent> out;
    for (int i = 0; i < n; ++i)
        out.push_back({static_cast<Stage>(i % 6), v(rng), v(rng), v(rng), v(rng), v(rng), v(rng), v(rng) % 1000,
                       v(rng)});
    return out;
}

SimReport sample_report(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto arch = arch_preset("dlegion-8");
    arch.frequency_hz = 1.05e9;
    auto r = aggregate(random_events(rng, 17), arch, "bitnet-1.58b");
    r.manifest = RunManifest{"simulate", {"a.json", "b,c.json"}, seed, {"out.csv"}, kToolVersion, "00ff"};
    return r;
}

}  // namespace

TEST_CASE("empty event log gives a zero report", "[report]") {
    const auto r = aggregate({}, arch_preset("dlegion-8"), "m");
    CHECK(r.stages.size() == 6);
    for (const auto& [s, m] : r.stages) CHECK(m == StageMetrics{});
    CHECK(r.total == StageMetrics{});
    CHECK(r.total_pes == 8 * 8 * 16 * 16);
}

TEST_CASE("corrupt logs are rejected", "[report]") {
    StageEvent bad;
    bad.cycles = -1;
    CHECK_THROWS_AS(aggregate(std::vector{bad}, arch_preset("dlegion-8")), InconsistentEvents);
    StageEvent big;
    big.ops = std::numeric_limits<std::int64_t>::max();
    CHECK_THROWS_AS(aggregate(std::vector{big, big, big}, arch_preset("dlegion-8")), InconsistentEvents);
}

TEST_CASE("aggregation ignores event order and sums stages into the total", "[report][property]") {
    std::mt19937_64 rng(3);
    const auto arch = arch_preset("dlegion-32");
    for (int i = 0; i < 30; ++i) {
        auto ev = random_events(rng, 40);
        const auto a = aggregate(ev, arch);
        std::shuffle(ev.begin(), ev.end(), rng);
        CHECK(aggregate(ev, arch) == a);

        StageMetrics sum;
        for (const auto& [s, m] : a.stages) {
            sum.cycles += m.cycles;
            sum.ops += m.ops;
            sum.weight_bytes += m.weight_bytes;
            sum.activation_bytes += m.activation_bytes;
            sum.psum_bytes += m.psum_bytes;
            sum.skipped_windows += m.skipped_windows;
            if (m.cycles) CHECK(std::abs(m.throughput_ops * m.wall_time_s - static_cast<double>(m.ops)) <=
                                1e-9 * static_cast<double>(m.ops));
            CHECK(m.wall_time_s == static_cast<double>(m.cycles) / arch.frequency_hz);
        }
        CHECK(sum.cycles == a.total.cycles);
        CHECK(sum.ops == a.total.ops);
        CHECK(sum.memory_bytes() == a.total.memory_bytes());
        CHECK(sum.psum_bytes == a.total.psum_bytes);
        CHECK(sum.skipped_windows == a.total.skipped_windows);
    }
}

TEST_CASE("JSON and CSV round-trip bit-exactly", "[report]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = sample_report(seed);
        const auto csv = emit(r, ReportFormat::Csv);
        const auto json = emit(r, ReportFormat::Json);
        CHECK(parse_report(csv, ReportFormat::Csv) == r);
        CHECK(parse_report(json, ReportFormat::Json) == r);
        CHECK(emit(parse_report(json, ReportFormat::Json), ReportFormat::Csv) == csv);
    }
}

TEST_CASE("CSV has a header, six stage rows and a total", "[report]") {
    const auto csv = emit(sample_report(1), ReportFormat::Csv);
    std::istringstream in(csv);
    std::vector<std::string> rows;
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#') rows.push_back(line);
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].rfind("stage,cycles,", 0) == 0);
    CHECK(rows[7].rfind("Total,", 0) == 0);
    CHECK_THROWS(parse_report("stage,cycles\n", ReportFormat::Csv));
    CHECK_THROWS(parse_report("{", ReportFormat::Json));
    CHECK_THROWS_AS(report_format_from_string("xml"), std::invalid_argument);
}

TEST_CASE("ratio tables are antisymmetric", "[report]") {
    const auto a = sample_report(4);
    const auto b = sample_report(5);
    const auto ab = ratio_table(a, b);
    const auto ba = ratio_table(b, a);
    REQUIRE(ab.size() == 7);
    REQUIRE(ab.back().row == "Total");
    for (std::size_t i = 0; i < ab.size(); ++i)
        for (std::size_t j = 0; j < ab[i].ratios.size(); ++j)
            if (std::isfinite(ab[i].ratios[j]) && ab[i].ratios[j] != 0)
                CHECK(ab[i].ratios[j] * ba[i].ratios[j] == Catch::Approx(1.0).epsilon(1e-12));
    for (const auto& row : ratio_table(a, a))
        for (double v : row.ratios) CHECK((std::isnan(v) || v == 1.0));
    const auto zero = aggregate({}, arch_preset("dlegion-8"));
    const auto to_zero = ratio_table(a, zero).back().ratios;
    for (std::size_t j = 0; j < to_zero.size(); ++j) {
        INFO(j);
        CHECK(std::isnan(to_zero[j]));
    }
}

#include <catch_amalgamated.hpp>

#include <random>

#include "dlegion/functional_core.hpp"
#include "oracles.hpp"

using namespace dlegion;

namespace {

std::vector<IntMatrix> random_tiles(std::size_t D, PrecisionMode mode, std::mt19937_64& rng) {
    std::vector<IntMatrix> tiles;
    for (unsigned t = 0; t < acceleration_ratio(mode); ++t)
        tiles.push_back(oracle::from_mat(oracle::random_mat(D, D, weight_width(mode), rng), weight_width(mode)));
    return tiles;
}

}  // namespace

TEST_CASE("PE products match plain multiplication in every mode", "[functional][pe]") {
    for (std::int64_t a = -128; a <= 127; ++a) {
        for (std::int64_t w = -128; w <= 127; w += 3) {
            const std::int64_t ws[1] = {w};
            REQUIRE(ReconfigurablePe::multiply(a, ws, PrecisionMode::Dense8x8)[0] == a * w);
        }
        for (std::int64_t w0 = -8; w0 <= 7; ++w0) {
            const std::int64_t ws[2] = {w0, -1 - w0};
            const auto p = ReconfigurablePe::multiply(a, ws, PrecisionMode::Proj8x4);
            REQUIRE(p[0] == a * ws[0]);
            REQUIRE(p[1] == a * ws[1]);
        }
        const std::int64_t ws[4] = {-2, -1, 0, 1};
        const auto p = ReconfigurablePe::multiply(a, ws, PrecisionMode::Proj8x2);
        for (int t = 0; t < 4; ++t) REQUIRE(p[t] == a * ws[t]);
    }
}

TEST_CASE("every mode keeps all sixteen multipliers busy", "[functional][pe]") {
    const std::int64_t ws[4] = {1, -1, 0, 1};
    for (auto mode : {PrecisionMode::Dense8x8, PrecisionMode::Proj8x4, PrecisionMode::Proj8x2}) {
        const auto before = ReconfigurablePe::multiplier_ops();
        ReconfigurablePe::multiply(-77, std::span<const std::int64_t>(ws, acceleration_ratio(mode)), mode);
        CHECK(ReconfigurablePe::multiplier_ops() - before == 16);
    }
}

TEST_CASE("weight permutation", "[functional][permute]") {
    IntMatrix w(2, 2, 8, {1, 2, 3, 4});  // [[a,b],[c,d]]
    CHECK(permute_weights(w, 2) == IntMatrix(2, 2, 8, {1, 4, 3, 2}));  // [[a,d],[c,b]]

    std::mt19937_64 rng(9);
    for (int i = 0; i < 20; ++i) {
        const auto W = oracle::from_mat(oracle::random_mat(16, 16, 8, rng), 8);
        const auto P = permute_weights(W, 16);
        for (std::size_t r = 0; r < 16; ++r) CHECK(P(r, 0) == W(r, 0));
        CHECK(unpermute_weights(P, 16) == W);
    }
    CHECK_THROWS_AS(permute_weights(IntMatrix(2, 3, 8), 2), std::invalid_argument);
}

TEST_CASE("core_matmul basic identities", "[functional][core]") {
    std::mt19937_64 rng(1);
    const auto W = random_tiles(16, PrecisionMode::Dense8x8, rng);
    const auto out = core_matmul(IntMatrix::identity(16), W, PrecisionMode::Dense8x8);
    REQUIRE(out.size() == 1);
    CHECK(oracle::to_mat(out[0]) == oracle::to_mat(W[0]));

    const auto A = oracle::from_mat(oracle::random_mat(40, 16, 8, rng), 8);
    std::vector<IntMatrix> zeros(4, IntMatrix(16, 16, 2));
    for (const auto& o : core_matmul(A, zeros, PrecisionMode::Proj8x2))
        for (auto v : o.values()) CHECK(v == 0);
}

TEST_CASE("ternary Proj8x2 tiles against four triple-loop products", "[functional][core]") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::int64_t> tern(-1, 1);
    const auto Am = oracle::random_mat(64, 16, 8, rng);
    std::vector<IntMatrix> tiles;
    std::vector<oracle::Mat> mats;
    for (int t = 0; t < 4; ++t) {
        oracle::Mat w(16, std::vector<std::int64_t>(16));
        for (auto& row : w)
            for (auto& v : row) v = tern(rng);
        mats.push_back(w);
        tiles.push_back(oracle::from_mat(w, 2));
    }
    const auto out = core_matmul(oracle::from_mat(Am, 8), tiles, PrecisionMode::Proj8x2, {.ternary_strict = true});
    for (int t = 0; t < 4; ++t) CHECK(oracle::to_mat(out[t]) == oracle::naive_gemm(Am, mats[t]));
}

TEST_CASE("core_matmul rejects malformed inputs", "[functional][core]") {
    std::mt19937_64 rng(4);
    const auto A = oracle::from_mat(oracle::random_mat(8, 4, 8, rng), 8);
    CHECK_THROWS_AS(core_matmul(A, random_tiles(4, PrecisionMode::Dense8x8, rng), PrecisionMode::Proj8x2),
                    std::invalid_argument);
    std::vector<IntMatrix> wide(2, IntMatrix(4, 4, 8));
    wide[0].set(0, 0, 100);
    CHECK_THROWS_AS(core_matmul(A, wide, PrecisionMode::Proj8x4), std::out_of_range);
    std::vector<IntMatrix> minus2(4, IntMatrix(4, 4, 2));
    minus2[1].set(2, 2, -2);
    CHECK_NOTHROW(core_matmul(A, minus2, PrecisionMode::Proj8x2));
    CHECK_THROWS_AS(core_matmul(A, minus2, PrecisionMode::Proj8x2, {.ternary_strict = true}), std::out_of_range);
    CHECK_THROWS_AS(IntMatrix(1, 1, 2, {2}), std::out_of_range);
    CHECK_THROWS_AS(IntMatrix(1, 1, 3), std::invalid_argument);
}

TEST_CASE("dataflow equals the naive oracle over random shapes", "[functional][core][property]") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> rows(1, 64);
    const std::size_t dims[] = {2, 4, 8, 16};
    const PrecisionMode modes[] = {PrecisionMode::Dense8x8, PrecisionMode::Proj8x4, PrecisionMode::Proj8x2};
    for (int seed = 0; seed < 1000; ++seed) {
        const std::size_t D = dims[seed % 4];
        const PrecisionMode mode = modes[(seed / 4) % 3];
        const auto Am = oracle::random_mat(rows(rng), D, 8, rng);
        const auto tiles = random_tiles(D, mode, rng);
        const auto out = core_matmul(oracle::from_mat(Am, 8), tiles, mode);
        for (std::size_t t = 0; t < tiles.size(); ++t)
            REQUIRE(oracle::to_mat(out[t]) == oracle::naive_gemm(Am, oracle::to_mat(tiles[t])));
    }
}

TEST_CASE("accumulators cannot overflow for D up to 16", "[functional][core][property]") {
    for (unsigned w : {2U, 4U, 8U}) {
        const std::int64_t bound = 128LL * (1LL << (w - 1)) * 16;
        CHECK(bound <= (1LL << 31) - 1);
    }
    // Worst case: -128 activations against the most negative weight.
    const IntMatrix A(16, 16, 8, std::vector<std::int64_t>(256, -128));
    const IntMatrix W(16, 16, 8, std::vector<std::int64_t>(256, -128));
    const auto out = core_matmul(A, std::vector<IntMatrix>{W}, PrecisionMode::Dense8x8);
    for (auto v : out[0].values()) CHECK(v == 128 * 128 * 16);
}

TEST_CASE("core_matmul is linear in the activations", "[functional][core][property]") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i) {
        const auto A1 = oracle::random_mat(24, 8, 7, rng);
        const auto A2 = oracle::random_mat(24, 8, 7, rng);
        oracle::Mat sum = A1;
        for (std::size_t r = 0; r < sum.size(); ++r)
            for (std::size_t c = 0; c < sum[r].size(); ++c) sum[r][c] += A2[r][c];
        const auto tiles = random_tiles(8, PrecisionMode::Proj8x4, rng);
        const auto o1 = core_matmul(oracle::from_mat(A1, 8), tiles, PrecisionMode::Proj8x4);
        const auto o2 = core_matmul(oracle::from_mat(A2, 8), tiles, PrecisionMode::Proj8x4);
        const auto os = core_matmul(oracle::from_mat(sum, 8), tiles, PrecisionMode::Proj8x4);
        for (std::size_t t = 0; t < 2; ++t)
            for (std::size_t k = 0; k < os[t].values().size(); ++k)
                REQUIRE(os[t].values()[k] == o1[t].values()[k] + o2[t].values()[k]);
    }
}

TEST_CASE("core cycle count", "[functional][timing]") {
    ArchConfig a = arch_preset("dlegion-8");
    a.pipeline_stages = 0;
    CHECK(core_cycle_count(16, PrecisionMode::Dense8x8, a) == 48);
    a.pipeline_stages = 4;
    CHECK(core_cycle_count(16, PrecisionMode::Dense8x8, a) == 52);
    for (Count M : {16, 64, 100})
        CHECK(core_cycle_count(M, PrecisionMode::Proj8x2, a) == core_cycle_count(M, PrecisionMode::Dense8x8, a));
}

#pragma once

#include <array>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "dlegion/arch_config.hpp"

namespace dlegion {

enum class Stage { QProj, KProj, VProj, AttnScore, AttnOutput, OutProj };

inline constexpr std::array<Stage, 6> kAllStages = {Stage::QProj,     Stage::KProj,
                                                     Stage::VProj,     Stage::AttnScore,
                                                     Stage::AttnOutput, Stage::OutProj};

std::string_view to_string(Stage stage) noexcept;
Stage stage_from_string(std::string_view text);

/// Activation-to-weight stages run in a projection mode; the two
/// activation-to-activation stages always run Dense8x8.
constexpr bool is_projection(Stage s) noexcept {
    return s != Stage::AttnScore && s != Stage::AttnOutput;
}

/// One GEMM: (M x K) activations times (K x N) stationary operand.
struct WorkloadSpec {
    Count M = 1;
    Count K = 1;
    Count N = 1;
    PrecisionMode mode = PrecisionMode::Dense8x8;
    Stage stage = Stage::QProj;
    std::optional<Count> head_id;
    std::optional<Count> kv_group_id;
    Count layer = 0;

    Count ops() const noexcept { return 2 * M * K * N; }

    friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

/// Throws ConfigError on zero dimensions or a stage/mode mismatch.
const WorkloadSpec& validate(const WorkloadSpec& spec);

struct WorkloadSet {
    std::vector<WorkloadSpec> specs;
    Count total_ops = 0;
    std::map<Stage, Count> per_stage_ops;

    static WorkloadSet from_specs(std::vector<WorkloadSpec> specs);
};

struct WorkloadOptions {
    /// Emit one Q/K/V projection with N = heads x head_dim instead of per-head GEMMs.
    bool fused_projections = false;
};

/// Projection mode matching a weight width (2 -> Proj8x2, 4 -> Proj8x4, 8 -> Dense8x8).
PrecisionMode projection_mode(Count weight_bits);

WorkloadSet derive_attention_workloads(const ModelConfig& model, const WorkloadOptions& opts = {});

/// Fraction of total ops per stage; every stage key is present. Throws
/// std::invalid_argument on an empty set.
std::map<Stage, double> stage_distribution(const WorkloadSet& set);

nlohmann::json to_json(const WorkloadSet& set);
std::string to_csv(const WorkloadSet& set);

}  // namespace dlegion

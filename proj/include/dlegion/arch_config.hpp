#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dlegion/errors.hpp"

namespace dlegion {

using Count = std::uint64_t;
using Cycles = std::uint64_t;

inline constexpr int kConfigSchemaVersion = 1;

enum class PrecisionMode { Dense8x8, Proj8x4, Proj8x2 };

/// Products per PE per cycle: 1, 2 or 4.
constexpr unsigned acceleration_ratio(PrecisionMode mode) noexcept {
    switch (mode) {
        case PrecisionMode::Dense8x8: return 1;
        case PrecisionMode::Proj8x4: return 2;
        case PrecisionMode::Proj8x2: return 4;
    }
    return 1;
}

/// Weight operand width for the mode, in bits.
constexpr unsigned weight_width(PrecisionMode mode) noexcept {
    switch (mode) {
        case PrecisionMode::Dense8x8: return 8;
        case PrecisionMode::Proj8x4: return 4;
        case PrecisionMode::Proj8x2: return 2;
    }
    return 8;
}

std::string_view to_string(PrecisionMode mode) noexcept;
PrecisionMode precision_mode_from_string(std::string_view text);

/// Dataflow of the compute cores. `Legion` is the many-core adaptive-precision
/// organisation; the rest are single-core (or independent multi-core)
/// comparison machines.
enum class Dataflow { Legion, WS, DiP, ADiP };

std::string_view to_string(Dataflow dataflow) noexcept;
Dataflow dataflow_from_string(std::string_view text);

struct ArchConfig {
    std::string name = "custom";
    Dataflow dataflow = Dataflow::Legion;
    Count legions = 1;             // L
    Count cores_per_legion = 1;    // C
    Count core_dim = 16;           // D
    Count pipeline_stages = 4;     // P
    double frequency_hz = 1e9;
    Count accumulators_per_legion = 4;
    Count psum_bank_count = 4;
    Count psum_bank_bytes = 660'000;
    Count legion_link_bits = 1024;
    Count psum_element_bits = 32;

    Count total_pes() const noexcept { return legions * cores_per_legion * core_dim * core_dim; }
    bool supports_quantized() const noexcept {
        return dataflow == Dataflow::Legion || dataflow == Dataflow::ADiP;
    }
    /// Acceleration ratio actually available to a workload in `mode` on this
    /// machine. INT8-only machines run every mode at R = 1.
    unsigned effective_ratio(PrecisionMode mode) const noexcept {
        return supports_quantized() ? acceleration_ratio(mode) : 1U;
    }

    friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

enum class AttentionType { MHA, GQA, MQA };

std::string_view to_string(AttentionType type) noexcept;

struct ModelConfig {
    std::string name = "custom";
    Count layers = 1;
    Count hidden_size = 1;
    Count num_heads = 1;     // H
    Count num_kv_heads = 1;  // G
    Count head_dim = 1;
    Count seq_len = 1;
    Count weight_bits = 2;
    Count activation_bits = 8;

    AttentionType attention_type() const noexcept {
        if (num_kv_heads == num_heads) return AttentionType::MHA;
        if (num_kv_heads == 1) return AttentionType::MQA;
        return AttentionType::GQA;
    }
    Count heads_per_kv_group() const noexcept { return num_heads / num_kv_heads; }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Every violated invariant, as human readable diagnostics. Empty when valid.
std::vector<std::string> check(const ArchConfig& arch);
std::vector<std::string> check(const ModelConfig& model);

/// Returns the config unchanged, or throws ConfigError listing every violation.
const ArchConfig& validate(const ArchConfig& arch);
const ModelConfig& validate(const ModelConfig& model);

const std::vector<std::string>& preset_names();
bool is_arch_preset(std::string_view name);
bool is_model_preset(std::string_view name);

/// Canonical configuration pair for a preset. Architecture presets come with
/// the BitNet-1.58B model; model presets come with the 8-Legion architecture.
std::pair<ArchConfig, ModelConfig> preset(std::string_view name);
ArchConfig arch_preset(std::string_view name);
ModelConfig model_preset(std::string_view name);

// JSON schema: {"schema_version": 1, "arch": {...}} / {"schema_version": 1, "model": {...}}.
// Missing pipeline_stages, psum_element_bits and frequency_hz take their
// documented defaults; every other field is required.
nlohmann::json to_json(const ArchConfig& arch);
nlohmann::json to_json(const ModelConfig& model);
ArchConfig arch_from_json(const nlohmann::json& doc);
ModelConfig model_from_json(const nlohmann::json& doc);

ArchConfig load_arch_file(const std::string& path);
ModelConfig load_model_file(const std::string& path);

/// FNV-1a over the canonical JSON dump; stable across runs and platforms.
std::uint64_t config_hash(const nlohmann::json& canonical);

}  // namespace dlegion

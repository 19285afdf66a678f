#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlegion/arch_config.hpp"
#include "dlegion/workload.hpp"

namespace dlegion {

inline constexpr const char* kToolVersion = "1.0.0";

/// Raw counts for one stage of one phase; the unit the simulator and the
/// baseline models hand to aggregate(). Signed so that corrupt logs are
/// detectable.
struct StageEvent {
    Stage stage = Stage::QProj;
    std::int64_t cycles = 0;
    std::int64_t ops = 0;
    std::int64_t weight_bytes = 0;
    std::int64_t activation_bytes = 0;
    std::int64_t psum_bytes = 0;
    std::int64_t active_pe_cycles = 0;
    std::int64_t skipped_windows = 0;
    std::int64_t deactivated_core_cycles = 0;
};

struct StageMetrics {
    std::uint64_t cycles = 0;
    double wall_time_s = 0;
    std::uint64_t ops = 0;
    double throughput_ops = 0;
    std::uint64_t weight_bytes = 0;
    std::uint64_t activation_bytes = 0;
    std::uint64_t psum_bytes = 0;
    std::uint64_t active_pe_cycles = 0;
    double pe_active_fraction = 0;
    std::uint64_t skipped_windows = 0;
    std::uint64_t deactivated_core_cycles = 0;

    /// Off-chip weight plus activation traffic.
    std::uint64_t memory_bytes() const noexcept { return weight_bytes + activation_bytes; }

    friend bool operator==(const StageMetrics&, const StageMetrics&) = default;
};

struct RunManifest {
    std::string subcommand;
    std::vector<std::string> config_paths;
    std::uint64_t seed = 0;
    std::vector<std::string> output_paths;
    std::string tool_version = kToolVersion;
    std::string config_hash;

    friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

struct SimReport {
    std::string arch;
    std::string model;
    double frequency_hz = 1e9;
    std::uint64_t total_pes = 0;
    std::map<Stage, StageMetrics> stages;  // all six stages, zero when unused
    StageMetrics total;
    std::optional<RunManifest> manifest;

    friend bool operator==(const SimReport&, const SimReport&) = default;
};

/// Sums the event log per stage and derives time, throughput and utilisation.
/// Order of `events` does not matter. Throws InconsistentEvents on negative
/// counts or 64-bit overflow.
SimReport aggregate(std::span<const StageEvent> events, const ArchConfig& arch, std::string model_name = {});

enum class ReportFormat { Json, Csv };

ReportFormat report_format_from_string(std::string_view text);

nlohmann::json to_json(const SimReport& report);
SimReport report_from_json(const nlohmann::json& doc);

/// Stable field order. JSON and CSV both round-trip losslessly.
std::string emit(const SimReport& report, ReportFormat format);
SimReport parse_report(const std::string& text, ReportFormat format);

/// Names of the per-row metrics, in emission order.
const std::vector<std::string>& metric_names();
double metric_value(const StageMetrics& m, std::string_view name);

/// numerator / denominator for every metric, per stage and total.
struct RatioRow {
    std::string row;  // stage name or "Total"
    std::vector<double> ratios;
};
std::vector<RatioRow> ratio_table(const SimReport& numerator, const SimReport& denominator);
std::string emit_ratio_table(const SimReport& numerator, const SimReport& denominator, ReportFormat format);

}  // namespace dlegion

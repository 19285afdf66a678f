#pragma once

#include <cstdint>
#include <vector>

#include "dlegion/arch_config.hpp"
#include "dlegion/workload.hpp"

namespace dlegion {

/// Names an operand matrix so that Legions reading the same matrix can share
/// a fetch.
enum class MatrixKind : std::uint8_t {
    LayerInput,
    AttnConcat,
    Query,
    Key,
    Value,
    Score,
    WeightQ,
    WeightK,
    WeightV,
    WeightO,
    Output,
};

constexpr std::uint64_t matrix_id(MatrixKind kind, Count layer, std::uint64_t index) noexcept {
    return (std::uint64_t(kind) << 56) | ((layer & 0xFFFFFFULL) << 32) | (index & 0xFFFFFFFFULL);
}

inline constexpr std::uint64_t kNoIndex = 0xFFFFFFFFULL;

/// How activation-to-activation workloads are spread over Legions.
enum class AttentionMapping {
    /// Each head is split along N over a group of min(L, head_dim / D)
    /// Legions; the remaining groups take further heads concurrently. With
    /// L x D ≤ head_dim every head spans all Legions.
    HeadAligned,
    /// Each head is split along N over min(L, NT) Legions.
    AllLegions,
    /// Whole heads round-robin over Legions, like projections.
    PerHead,
};

std::string_view to_string(AttentionMapping m) noexcept;
AttentionMapping attention_mapping_from_string(std::string_view text);

struct MappingPolicy {
    AttentionMapping attention = AttentionMapping::HeadAligned;
    /// When a stage has fewer (head, n-tile) units than Legions, split
    /// projection heads along N and then every workload along M so idle
    /// Legions take a share.
    bool fill_idle_legions = true;
};

/// One Legion's share of a workload: a column slice of the parent GEMM.
struct LegionWorkload {
    std::size_t spec_index = 0;   // into WorkloadSet::specs
    WorkloadSpec slice;           // the M rows and N columns this Legion computes, full K
    Count row_offset = 0;         // first parent row of the slice
    Count m_tile_offset = 0;      // first parent m-tile of the slice
    Count col_offset = 0;         // first parent column of the slice
    Count n_tile_offset = 0;      // first parent n-tile of the slice (R*D wide)
    Count parent_n = 0;
    Count round = 0;              // scheduling round within the phase
    std::uint32_t legion = 0;
    std::uint64_t activation_matrix = 0;
    std::uint64_t stationary_matrix = 0;
    std::uint64_t output_matrix = 0;
    /// Legions streaming the same activation operand in the same round.
    std::uint64_t multicast_mask = 0;
};

/// Work between two stage barriers: one stage of one layer.
struct Phase {
    Count layer = 0;
    Stage stage = Stage::QProj;
    std::vector<std::vector<LegionWorkload>> queues;  // per Legion, in issue order
    Count rounds = 0;
};

struct Assignment {
    Count legions = 0;
    std::vector<Phase> phases;

    std::size_t workload_count() const noexcept;
};

/// Maps every spec of the set onto Legion queues, one phase per (layer, stage).
Assignment orchestrate(const WorkloadSet& workloads, const ArchConfig& arch, const MappingPolicy& policy = {});

}  // namespace dlegion

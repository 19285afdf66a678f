#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dlegion/analytic.hpp"
#include "dlegion/orchestrator.hpp"
#include "dlegion/ztb.hpp"

namespace dlegion {

struct TileEvent {
    std::uint32_t n_tile = 0;   // local to the Legion's slice
    std::uint32_t k_chunk = 0;
    std::uint32_t m_tile = 0;
    bool skip = false;          // window fully sparse
    std::uint64_t active_cores = 0;       // cores holding a present, non-zero tile
    std::uint64_t deactivated_cores = 0;  // present but zero (partially-sparse window)
    std::uint64_t destinations = 0;       // Legions receiving this event's activation tile
};

/// Events in N -> K -> M order for one Legion workload.
struct TileSchedule {
    TileCounts tiles;
    Count k_tiles_raw = 0;
    std::vector<TileEvent> events;

    Count compute_events() const noexcept;
    Count skipped_windows() const noexcept;
    Count partial_windows() const noexcept;
};

/// Throws ShapeMismatch when `ztb` does not have (ceil(K/D), NT, C) of the
/// parent workload.
void check_ztb_shape(const ZeroTileBook& ztb, const WorkloadSpec& parent, const ArchConfig& arch);

/// `ztb`, when given, covers the parent workload; the Legion's column slice is
/// taken from it.
TileSchedule build_schedule(const LegionWorkload& work, const ZeroTileBook* ztb, const ArchConfig& arch);

/// Convenience for a whole workload on one Legion.
TileSchedule build_schedule(const WorkloadSpec& spec, const ZeroTileBook* ztb, const ArchConfig& arch);

}  // namespace dlegion

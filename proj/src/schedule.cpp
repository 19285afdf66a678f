#include "dlegion/schedule.hpp"

#include <string>

namespace dlegion {

Count TileSchedule::compute_events() const noexcept {
    Count n = 0;
    for (const auto& e : events) n += !e.skip;
    return n;
}

Count TileSchedule::skipped_windows() const noexcept {
    Count n = 0;
    for (const auto& e : events) n += e.skip && e.m_tile == 0;
    return n;
}

Count TileSchedule::partial_windows() const noexcept {
    Count n = 0;
    for (const auto& e : events) n += !e.skip && e.m_tile == 0 && e.deactivated_cores != 0;
    return n;
}

void check_ztb_shape(const ZeroTileBook& ztb, const WorkloadSpec& parent, const ArchConfig& arch) {
    const Count D = arch.core_dim;
    const Count kt_raw = ceil_div(parent.K, D);
    const Count nt = ceil_div(parent.N, arch.effective_ratio(parent.mode) * D);
    const Count C = arch.cores_per_legion;
    if (ztb.k_tiles_raw() != kt_raw || ztb.n_tiles() != nt || ztb.cores() != C)
        throw ShapeMismatch("zero-tile book shape mismatch: expected (KT_raw=" + std::to_string(kt_raw) +
                            ", NT=" + std::to_string(nt) + ", C=" + std::to_string(C) + "), found (KT_raw=" +
                            std::to_string(ztb.k_tiles_raw()) + ", NT=" + std::to_string(ztb.n_tiles()) +
                            ", C=" + std::to_string(ztb.cores()) + ")");
}

TileSchedule build_schedule(const LegionWorkload& work, const ZeroTileBook* ztb, const ArchConfig& arch) {
    const WorkloadSpec& s = work.slice;
    const Count D = arch.core_dim;
    const Count C = arch.cores_per_legion;

    TileSchedule sched;
    sched.tiles = tile_counts(s, arch);
    sched.k_tiles_raw = ceil_div(s.K, D);
    const auto [MT, KT, NT] = sched.tiles;

    std::optional<ZeroTileBook> local;
    if (ztb) {
        WorkloadSpec parent = s;
        parent.N = work.parent_n;
        check_ztb_shape(*ztb, parent, arch);
        local = ztb->slice_columns(work.n_tile_offset, NT);
    }

    sched.events.reserve(MT * KT * NT);
    for (Count n = 0; n < NT; ++n) {
        for (Count k = 0; k < KT; ++k) {
            std::uint64_t present = 0;
            for (Count c = 0; c < C; ++c)
                if (k * C + c < sched.k_tiles_raw) present |= std::uint64_t{1} << c;
            std::uint64_t zero = 0;
            if (local) zero = local->zero_core_mask(n, k) & present;
            const bool skip = zero == present;
            for (Count m = 0; m < MT; ++m) {
                TileEvent e;
                e.n_tile = static_cast<std::uint32_t>(n);
                e.k_chunk = static_cast<std::uint32_t>(k);
                e.m_tile = static_cast<std::uint32_t>(m);
                e.skip = skip;
                e.active_cores = skip ? 0 : present & ~zero;
                e.deactivated_cores = skip ? 0 : zero;
                e.destinations = skip ? 0 : work.multicast_mask;
                sched.events.push_back(e);
            }
        }
    }
    return sched;
}

TileSchedule build_schedule(const WorkloadSpec& spec, const ZeroTileBook* ztb, const ArchConfig& arch) {
    LegionWorkload w;
    w.slice = spec;
    w.parent_n = spec.N;
    w.multicast_mask = 1;
    return build_schedule(w, ztb, arch);
}

}  // namespace dlegion

#include "dlegion/simulator.hpp"

#include <algorithm>
#include <bit>
#include <queue>
#include <random>
#include <string>

#include "dlegion/errors.hpp"

namespace dlegion {

namespace {

Count slice_ops(const WorkloadSpec& s) { return 2 * s.M * s.K * s.N; }

void check_psum_capacity(const LegionWorkload& w, const ArchConfig& arch) {
    // One n-tile strip of psums (all M rows, R*D columns) lives in the banks
    // while the K chunks accumulate into it.
    const Count R = arch.effective_ratio(w.slice.mode);
    const Count cols = std::min(R * arch.core_dim, w.slice.N);
    const Count strip = w.slice.M * cols * (arch.psum_element_bits / 8);
    const Count per_bank = ceil_div(strip, arch.psum_bank_count);
    if (per_bank > arch.psum_bank_bytes)
        throw PsumOverflow("psum strip of " + std::to_string(strip) + " B needs " + std::to_string(per_bank) +
                           " B per bank, bank holds " + std::to_string(arch.psum_bank_bytes) + " B (M=" +
                           std::to_string(w.slice.M) + ")");
}

struct Geometry {
    Count D, C, R, K, M, parent_n, kt_raw, w_bits, pbytes;

    Count rows(Count m) const { return std::min(D, M - m * D); }
    Count chunk_cols(Count k) const { return std::min(C * D, K - k * C * D); }
    Count k_rows(Count raw) const { return std::min(D, K - raw * D); }
    Count n_cols(Count gn) const { return std::min(R * D, parent_n - gn * R * D); }
};

Geometry geometry_of(const LegionWorkload& w, const ArchConfig& arch) {
    const Count R = arch.effective_ratio(w.slice.mode);
    return {arch.core_dim,
            arch.cores_per_legion,
            R,
            w.slice.K,
            w.slice.M,
            w.parent_n,
            ceil_div(w.slice.K, arch.core_dim),
            R == 1 ? 8 : weight_width(w.slice.mode),
            arch.psum_element_bits / 8};
}

}  // namespace

WorkloadCost workload_cost(const LegionWorkload& work, const TileSchedule& sched, const ArchConfig& arch,
                           bool bw_stall) {
    const auto g = geometry_of(work, arch);
    const Count MT = sched.tiles.MT;
    const Count link = arch.legion_link_bits / 8;
    const Cycles window = window_cycles(MT, g.D, arch.pipeline_stages);

    WorkloadCost cost;
    cost.ops = slice_ops(work.slice);
    for (std::size_t i = 0; i < sched.events.size(); i += MT) {
        const TileEvent& e = sched.events[i];
        if (e.skip) {
            ++cost.skipped_windows;
            cost.cycles += 1;
            continue;
        }
        ++cost.computed_windows;
        cost.partial_windows += e.deactivated_cores != 0;
        const Count active = std::popcount(e.active_cores);
        cost.active_pe_cycles += active * g.D * g.D * g.D * MT;
        cost.deactivated_core_cycles += std::popcount(e.deactivated_cores) * g.D * MT;
        Cycles stall = 0;
        if (bw_stall) {
            const Count act_bytes = g.M * g.chunk_cols(e.k_chunk);
            Count w_bytes = 0;
            const Count gn = work.n_tile_offset + e.n_tile;
            for (Count c = 0; c < g.C; ++c)
                if (e.active_cores >> c & 1)
                    w_bytes += ceil_div(g.k_rows(e.k_chunk * g.C + c) * g.n_cols(gn) * g.w_bits, 8);
            const Cycles act_time = ceil_div(act_bytes, link);
            const Cycles w_time = ceil_div(w_bytes, link);
            stall = (act_time > g.D * MT ? act_time - g.D * MT : 0) + (w_time > g.D ? w_time - g.D : 0);
        }
        cost.stall_cycles += stall;
        cost.cycles += window + stall;
    }
    if (cost.computed_windows) cost.cycles += g.D;
    return cost;
}

namespace {

struct PhaseCounters {
    Count psum_bytes = 0;
    Count active_pe_cycles = 0;
    Count skipped_windows = 0;
    Count deactivated_core_cycles = 0;
    Count ops = 0;
};

// Operand and psum traffic of one workload. Weights are fetched once per
// (matrix, k tile, n tile); activations once per (k chunk, m tile) per pass
// and round, so Legions of a multicast group share them.
void account_traffic(const LegionWorkload& work, const TileSchedule& sched, const ArchConfig& arch,
                     bool spatial_reduction, NocLedger& ledger, PhaseCounters& pc) {
    const auto g = geometry_of(work, arch);
    const Count MT = sched.tiles.MT;
    std::vector<bool> written(MT);
    Count current_n = ~Count{0};
    for (const TileEvent& e : sched.events) {
        if (e.n_tile != current_n) {
            current_n = e.n_tile;
            std::fill(written.begin(), written.end(), false);
        }
        if (e.skip) continue;
        const Count gn = work.n_tile_offset + e.n_tile;
        if (e.m_tile == 0) {
            for (Count c = 0; c < g.C; ++c) {
                if (!(e.active_cores >> c & 1)) continue;
                const Count raw = e.k_chunk * g.C + c;
                const Count bytes = ceil_div(g.k_rows(raw) * g.n_cols(gn) * g.w_bits, 8);
                ledger.deliver({work.stationary_matrix, static_cast<std::uint32_t>(raw),
                                static_cast<std::uint32_t>(gn), 0},
                               LinkId::Weights, bytes, work.legion);
            }
        }
        const std::uint64_t epoch = (std::uint64_t{work.round} << 32) | e.n_tile;
        ledger.deliver({work.activation_matrix, static_cast<std::uint32_t>(work.m_tile_offset + e.m_tile), e.k_chunk, epoch}, LinkId::Activations,
                       g.rows(e.m_tile) * g.chunk_cols(e.k_chunk), work.legion);

        // First computed chunk of an output tile writes, later ones read and write.
        const Count tile = g.rows(e.m_tile) * g.n_cols(gn) * g.pbytes;
        const Count writers = spatial_reduction ? 1 : static_cast<Count>(std::popcount(e.active_cores));
        pc.psum_bytes += tile * writers * (written[e.m_tile] ? 2 : 1);
        written[e.m_tile] = true;
    }
}

}  // namespace

SimResult simulate(const WorkloadSet& workloads, const ArchConfig& arch, const SimOptions& options,
                   std::string model_name) {
    validate(arch);
    if (arch.dataflow != Dataflow::Legion)
        throw ConfigError({"the Legion simulator needs a legion dataflow, got " + std::string(to_string(arch.dataflow))});
    for (const auto& s : workloads.specs) validate(s);

    const Assignment plan = orchestrate(workloads, arch, options.mapping);
    SimResult result;
    NocLedger ledger;
    Count psum_total = 0;

    for (std::size_t p = 0; p < plan.phases.size(); ++p) {
        const Phase& phase = plan.phases[p];
        const ZeroTileBook* ztb = nullptr;
        if (auto it = options.ztbs.find(phase.stage); it != options.ztbs.end()) ztb = &it->second;

        const LinkTraffic before = ledger.traffic();
        PhaseCounters pc;

        // Legions pull their next workload when idle; the heap orders completions.
        using Slot = std::pair<Cycles, std::uint32_t>;
        std::priority_queue<Slot, std::vector<Slot>, std::greater<>> ready;
        std::vector<std::size_t> next(phase.queues.size(), 0);
        for (std::uint32_t l = 0; l < phase.queues.size(); ++l)
            if (!phase.queues[l].empty()) ready.push({0, l});
        Cycles phase_end = 0;
        while (!ready.empty()) {
            const auto [now, l] = ready.top();
            ready.pop();
            const LegionWorkload& w = phase.queues[l][next[l]++];
            check_psum_capacity(w, arch);
            const TileSchedule sched = build_schedule(w, ztb, arch);
            const WorkloadCost cost = workload_cost(w, sched, arch, options.bw_stall);
            account_traffic(w, sched, arch, options.spatial_reduction, ledger, pc);
            pc.ops += cost.ops;
            pc.active_pe_cycles += cost.active_pe_cycles;
            pc.skipped_windows += cost.skipped_windows;
            pc.deactivated_core_cycles += cost.deactivated_core_cycles;
            result.timings.push_back({p, l, w.spec_index, now, now + cost.cycles});
            phase_end = std::max(phase_end, now + cost.cycles);
            if (next[l] < phase.queues[l].size()) ready.push({now + cost.cycles, l});
        }

        if (ledger.delivered_since_flush() != ledger.fanout_weighted_bytes())
            throw InconsistentEvents("multicast accounting broken in phase " + std::to_string(p));
        ledger.flush();

        const LinkTraffic& after = ledger.traffic();
        StageEvent ev;
        ev.stage = phase.stage;
        ev.cycles = static_cast<std::int64_t>(phase_end);
        ev.ops = static_cast<std::int64_t>(pc.ops);
        ev.weight_bytes = static_cast<std::int64_t>(after.off_chip[0] - before.off_chip[0]);
        ev.activation_bytes = static_cast<std::int64_t>(after.off_chip[1] - before.off_chip[1]);
        ev.psum_bytes = static_cast<std::int64_t>(pc.psum_bytes);
        ev.active_pe_cycles = static_cast<std::int64_t>(pc.active_pe_cycles);
        ev.skipped_windows = static_cast<std::int64_t>(pc.skipped_windows);
        ev.deactivated_core_cycles = static_cast<std::int64_t>(pc.deactivated_core_cycles);
        result.events.push_back(ev);
        psum_total += pc.psum_bytes;
    }

    result.traffic = ledger.traffic();
    result.traffic.off_chip[2] += psum_total;
    result.traffic.delivered[2] += psum_total;
    result.report = aggregate(result.events, arch, std::move(model_name));

    const auto& t = result.report.total;
    if (t.weight_bytes != result.traffic.off_chip[0] || t.activation_bytes != result.traffic.off_chip[1] ||
        t.psum_bytes != result.traffic.off_chip[2])
        throw InconsistentEvents("stage events do not sum to link traffic");
    return result;
}

IntMatrix run_functional(const WorkloadSpec& spec, const ArchConfig& arch, const IntMatrix& A, const IntMatrix& W,
                         const ZeroTileBook* ztb, const CoreOptions& opts) {
    validate(spec);
    if (A.rows() != spec.M || A.cols() != spec.K || W.rows() != spec.K || W.cols() != spec.N)
        throw ShapeMismatch("operand shapes do not match the workload (" + std::to_string(spec.M) + "x" +
                            std::to_string(spec.K) + "x" + std::to_string(spec.N) + ")");
    const Count D = arch.core_dim;
    const Count C = arch.cores_per_legion;
    const Count R = arch.effective_ratio(spec.mode);
    const PrecisionMode mode = R == 1 ? PrecisionMode::Dense8x8 : spec.mode;
    const unsigned wbits = R == 1 ? 8 : weight_width(spec.mode);
    const Count kt_raw = ceil_div(spec.K, D);
    const TileCounts tiles = tile_counts(spec, arch);
    if (ztb) check_ztb_shape(*ztb, spec, arch);

    std::vector<std::int64_t> acc(spec.M * spec.N, 0);
    for (Count n = 0; n < tiles.NT; ++n) {
        for (Count k = 0; k < tiles.KT; ++k) {
            for (Count c = 0; c < C; ++c) {
                const Count raw = k * C + c;
                if (raw >= kt_raw || (ztb && ztb->is_zero(n, k, c))) continue;
                IntMatrix a(spec.M, D, 8);
                for (Count i = 0; i < spec.M; ++i)
                    for (Count j = 0; j < D && raw * D + j < spec.K; ++j) a.set(i, j, A(i, raw * D + j));
                std::vector<IntMatrix> wt;
                for (Count r = 0; r < R; ++r) {
                    IntMatrix t(D, D, wbits);
                    for (Count i = 0; i < D && raw * D + i < spec.K; ++i)
                        for (Count j = 0; j < D; ++j) {
                            const Count col = n * R * D + r * D + j;
                            if (col < spec.N) t.set(i, j, W(raw * D + i, col));
                        }
                    wt.push_back(std::move(t));
                }
                const auto parts = core_matmul(a, wt, mode, opts);
                for (Count r = 0; r < R; ++r)
                    for (Count i = 0; i < spec.M; ++i)
                        for (Count j = 0; j < D; ++j) {
                            const Count col = n * R * D + r * D + j;
                            if (col < spec.N) acc[i * spec.N + col] += parts[r](i, j);
                        }
            }
        }
    }
    IntMatrix out(spec.M, spec.N, kAccumulatorBits);
    for (Count i = 0; i < spec.M; ++i)
        for (Count j = 0; j < spec.N; ++j) {
            const auto v = acc[i * spec.N + j];
            if (!out.fits(v)) throw PsumOverflow("accumulator overflow at (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ")");
            out.set(i, j, v);
        }
    return out;
}

std::pair<IntMatrix, IntMatrix> random_operands(const WorkloadSpec& spec, const ArchConfig& arch,
                                                std::uint64_t seed, const ZeroTileBook* ztb) {
    std::mt19937_64 rng(seed);
    const Count R = arch.effective_ratio(spec.mode);
    const unsigned wbits = weight_width(spec.mode);
    std::uniform_int_distribution<std::int64_t> act(-128, 127);
    const std::int64_t wmax = (std::int64_t{1} << (wbits - 1)) - 1;
    std::uniform_int_distribution<std::int64_t> wdist(-wmax - 1, wmax);

    IntMatrix A(spec.M, spec.K, 8);
    for (Count i = 0; i < spec.M; ++i)
        for (Count j = 0; j < spec.K; ++j) A.set(i, j, act(rng));
    IntMatrix W(spec.K, spec.N, R == 1 ? 8 : wbits);
    const Count D = arch.core_dim;
    for (Count i = 0; i < spec.K; ++i)
        for (Count j = 0; j < spec.N; ++j) {
            const Count n = j / (R * D);
            const Count raw = i / D;
            const bool zero = ztb && ztb->is_zero_tile(n, raw);
            W.set(i, j, zero ? 0 : wdist(rng));
        }
    return {std::move(A), std::move(W)};
}

}  // namespace dlegion

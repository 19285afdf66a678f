#include "dlegion/baselines.hpp"

#include <algorithm>
#include <map>

#include "dlegion/errors.hpp"

namespace dlegion {

namespace {

void require_baseline(const ArchConfig& arch) {
    validate(arch);
    if (arch.dataflow == Dataflow::Legion)
        throw ConfigError({"baseline models cover ws, dip and adip dataflows; use the Legion simulator for " +
                           arch.name});
}

Count single_core_k_tiles(const WorkloadSpec& s, const ArchConfig& arch) { return ceil_div(s.K, arch.core_dim); }

}  // namespace

Cycles baseline_latency(const WorkloadSpec& spec, const ArchConfig& arch, const BaselineOptions& opts) {
    validate(spec);
    const Count D = arch.core_dim;
    const Count R = arch.effective_ratio(spec.mode);
    const Count MT = ceil_div(spec.M, D);
    const Count KT = single_core_k_tiles(spec, arch);
    const Count NT = ceil_div(spec.N, R * D);
    Cycles pass = window_cycles(MT, D, arch.pipeline_stages);
    Cycles tail = D;
    if (arch.dataflow == Dataflow::WS) {
        pass += opts.ws_pass_overhead.value_or(2 * (D - 1));
        tail += opts.ws_drain.value_or(D - 1);
    }
    return KT * NT * pass + tail;
}

BaselineTraffic baseline_traffic(const WorkloadSpec& spec, const ArchConfig& arch, Count activation_bits) {
    validate(spec);
    const Count D = arch.core_dim;
    const Count R = arch.effective_ratio(spec.mode);
    const Count NT = ceil_div(spec.N, R * D);
    const Count KT = single_core_k_tiles(spec, arch);
    // Stationary operand width follows the workload, not the datapath: an
    // INT8 core still reads packed 2-bit weights.
    const Count wbits = is_projection(spec.stage) ? weight_width(spec.mode) : activation_bits;
    BaselineTraffic t;
    t.weight_bytes = ceil_div(spec.K * spec.N * wbits, 8);
    t.activation_bytes = NT * ceil_div(spec.M * spec.K * activation_bits, 8);
    t.psum_bytes = spec.M * spec.N * (arch.psum_element_bits / 8) * (2 * KT - 1);
    return t;
}

BaselineResult run_baseline(const WorkloadSet& workloads, const ArchConfig& arch, const BaselineOptions& opts,
                            std::string model_name) {
    require_baseline(arch);
    const Count cores = arch.legions;
    const Count D = arch.core_dim;

    std::map<std::pair<Count, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < workloads.specs.size(); ++i)
        groups[{workloads.specs[i].layer, static_cast<int>(workloads.specs[i].stage)}].push_back(i);

    BaselineResult result;
    for (const auto& [key, indices] : groups) {
        StageEvent ev;
        ev.stage = static_cast<Stage>(key.second);
        std::vector<Cycles> busy(cores, 0);
        auto run_on = [&](const WorkloadSpec& s, Count core) {
            const Count R = arch.effective_ratio(s.mode);
            const auto t = baseline_traffic(s, arch);
            busy[core] += baseline_latency(s, arch, opts);
            ev.ops += static_cast<std::int64_t>(s.ops());
            ev.weight_bytes += static_cast<std::int64_t>(t.weight_bytes);
            ev.activation_bytes += static_cast<std::int64_t>(t.activation_bytes);
            ev.psum_bytes += static_cast<std::int64_t>(t.psum_bytes);
            const Count passes = ceil_div(s.M, D) * ceil_div(s.K, D) * ceil_div(s.N, R * D);
            ev.active_pe_cycles += static_cast<std::int64_t>(passes * D * D * D);
        };
        Count next_core = 0;
        for (auto i : indices) {
            const WorkloadSpec& s = workloads.specs[i];
            if (s.head_id || s.kv_group_id || cores == 1) {
                run_on(s, next_core);
                next_core = (next_core + 1) % cores;
                continue;
            }
            // Split along N in whole n-tiles.
            const Count width = arch.effective_ratio(s.mode) * D;
            const Count nt = ceil_div(s.N, width);
            const Count parts = std::min(cores, nt);
            Count first = 0;
            for (Count j = 0; j < parts; ++j) {
                const Count tiles = nt / parts + (j < nt % parts ? 1 : 0);
                WorkloadSpec part = s;
                part.N = std::min(s.N, (first + tiles) * width) - first * width;
                run_on(part, j);
                first += tiles;
            }
        }
        ev.cycles = static_cast<std::int64_t>(*std::max_element(busy.begin(), busy.end()));
        result.events.push_back(ev);
    }
    result.report = aggregate(result.events, arch, std::move(model_name));
    return result;
}

}  // namespace dlegion

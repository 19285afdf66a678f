#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "dlegion/functional_core.hpp"
#include "dlegion/noc.hpp"
#include "dlegion/orchestrator.hpp"
#include "dlegion/report.hpp"
#include "dlegion/schedule.hpp"
#include "dlegion/ztb.hpp"

namespace dlegion {

struct SimOptions {
    /// Stall a window when its operand bytes exceed what the Legion links
    /// carry in the window's compute time.
    bool bw_stall = false;
    /// Reduce the C core psums inside the Legion before writing; off means
    /// every active core writes its own psum tile.
    bool spatial_reduction = true;
    std::uint64_t seed = 0;
    MappingPolicy mapping;
    /// Zero-tile books by stage, each applied to every workload of that stage.
    std::map<Stage, ZeroTileBook> ztbs;
};

/// Start and end of one Legion workload inside its phase.
struct LegionTiming {
    std::size_t phase = 0;
    std::uint32_t legion = 0;
    std::size_t spec_index = 0;
    Cycles start = 0;
    Cycles end = 0;
};

struct WorkloadCost {
    Cycles cycles = 0;
    Count ops = 0;
    Count computed_windows = 0;
    Count skipped_windows = 0;
    Count partial_windows = 0;
    Count active_pe_cycles = 0;
    Count deactivated_core_cycles = 0;
    Cycles stall_cycles = 0;
};

struct SimResult {
    std::vector<StageEvent> events;  // one per phase
    std::vector<LegionTiming> timings;
    LinkTraffic traffic;
    SimReport report;
};

/// Cycles and counters of one Legion workload given its schedule. A skipped
/// window costs one cycle; the drain of D cycles is paid once if any window
/// computed.
WorkloadCost workload_cost(const LegionWorkload& work, const TileSchedule& sched, const ArchConfig& arch,
                           bool bw_stall);

/// Runs every phase on the Legion array. Throws PsumOverflow, ShapeMismatch
/// (bad zero-tile book) or InconsistentEvents (traffic conservation broken).
SimResult simulate(const WorkloadSet& workloads, const ArchConfig& arch, const SimOptions& options = {},
                   std::string model_name = {});

/// Element-level execution of one workload on one Legion: every computed
/// window runs through core_matmul on each active core and the core psums are
/// reduced into the output. `A` is M x K (8-bit), `W` is K x N at the mode's
/// weight width. Skipped tiles are not computed, so a book that marks a
/// non-zero tile as zero yields a wrong result.
IntMatrix run_functional(const WorkloadSpec& spec, const ArchConfig& arch, const IntMatrix& A, const IntMatrix& W,
                         const ZeroTileBook* ztb = nullptr, const CoreOptions& opts = {});

/// Random operands for `spec` drawn from `seed`; weights cover the mode's full
/// signed range. Tiles marked in `ztb` are zeroed.
std::pair<IntMatrix, IntMatrix> random_operands(const WorkloadSpec& spec, const ArchConfig& arch,
                                                std::uint64_t seed, const ZeroTileBook* ztb = nullptr);

}  // namespace dlegion

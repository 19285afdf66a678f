#pragma once

#include <string>
#include <vector>

#include "dlegion/arch_config.hpp"
#include "dlegion/workload.hpp"

namespace dlegion {

constexpr Count ceil_div(Count a, Count b) noexcept { return (a + b - 1) / b; }

struct TileCounts {
    Count MT = 1;
    Count KT = 1;
    Count NT = 1;

    friend bool operator==(const TileCounts&, const TileCounts&) = default;
};

/// MT = ceil(M/D), KT = ceil(K/(C*D)), NT = ceil(N/(R*D)) with R the ratio
/// the machine actually grants `mode`.
TileCounts tile_counts(Count M, Count K, Count N, const ArchConfig& arch, PrecisionMode mode);
inline TileCounts tile_counts(const WorkloadSpec& s, const ArchConfig& arch) {
    return tile_counts(s.M, s.K, s.N, arch, s.mode);
}

/// Cycles of one window: weight load (D), M stream (D*MT) and pipeline (P).
constexpr Cycles window_cycles(Count MT, Count D, Count P) noexcept { return D * (MT + 1) + P; }

/// KT * NT * (D * (MT + 1) + P) + D
Cycles legion_latency(const TileCounts& tiles, const ArchConfig& arch);

enum class Topology { SingleCore, Legion };

/// Cycles until every PE of the constituent core is busy; equals D.
Cycles tfu(const ArchConfig& arch, Topology topology);

/// L * C * D^2 * 2 * f * R, in operations per second.
double peak_throughput(const ArchConfig& arch, PrecisionMode mode);

/// Bytes per second.
struct BandwidthProfile {
    double legion_input_Bps = 0;
    double accumulator_Bps = 0;
    double psum_memory_Bps = 0;
};

BandwidthProfile bandwidth_profile(const ArchConfig& arch, PrecisionMode mode,
                                   Count activation_bits = 8);

struct CriWeights {
    double bandwidth = 1.0;
    double tfu = 1.0;
    double latency = 1.0;
};

inline constexpr double kCriEpsilon = 1e-9;

struct CriCandidate {
    std::string label;
    ArchConfig arch;
};

struct CriScore {
    std::string label;
    Count cores = 0;
    Count core_dim = 0;
    double bandwidth_raw = 0;   // Legion input bytes/s
    double tfu_raw = 0;         // cycles
    double latency_raw = 0;     // mean cycles over the corner workloads
    double bw_norm = 0;
    double tfu_norm = 0;
    double latency_norm = 0;
    double cri = 0;
};

/// The three granularity corner workloads: QKV projection, attention score
/// and attention output for one head of `head_dim`.
std::vector<WorkloadSpec> dse_corner_workloads(Count seq_len = 2048, Count hidden = 2560,
                                               Count head_dim = 64, Count weight_bits = 2);

/// Four Legion shapes of the granularity sweep: 2x64x64, 4x32x32, 8x16x16, 16x8x8.
std::vector<CriCandidate> default_cri_candidates();

/// Min-max normalises each cost across candidates, scores
/// 1 / (wb*bw + wt*tfu + wl*lat + eps) and sorts best first. Ties go to the
/// smaller core, then to more cores. Throws std::invalid_argument on fewer than
/// two candidates or an empty workload set.
std::vector<CriScore> cri(const std::vector<CriCandidate>& candidates,
                          const std::vector<WorkloadSpec>& workloads, const CriWeights& weights = {});

}  // namespace dlegion

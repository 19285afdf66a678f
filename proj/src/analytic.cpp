#include "dlegion/analytic.hpp"

#include <algorithm>
#include <stdexcept>

namespace dlegion {

TileCounts tile_counts(Count M, Count K, Count N, const ArchConfig& arch, PrecisionMode mode) {
    const Count D = arch.core_dim;
    const Count R = arch.effective_ratio(mode);
    return TileCounts{ceil_div(M, D), ceil_div(K, arch.cores_per_legion * D), ceil_div(N, R * D)};
}

Cycles legion_latency(const TileCounts& t, const ArchConfig& arch) {
    return t.KT * t.NT * window_cycles(t.MT, arch.core_dim, arch.pipeline_stages) + arch.core_dim;
}

Cycles tfu(const ArchConfig& arch, Topology) {
    // Legions fill their cores in parallel, so topology does not change the result.
    return arch.core_dim;
}

double peak_throughput(const ArchConfig& arch, PrecisionMode mode) {
    return static_cast<double>(arch.total_pes()) * 2.0 * arch.frequency_hz *
           static_cast<double>(arch.effective_ratio(mode));
}

BandwidthProfile bandwidth_profile(const ArchConfig& arch, PrecisionMode mode, Count activation_bits) {
    const double f = arch.frequency_hz;
    const double C = static_cast<double>(arch.cores_per_legion);
    const double D = static_cast<double>(arch.core_dim);
    const double R = static_cast<double>(arch.effective_ratio(mode));
    const double psum_bits = static_cast<double>(arch.psum_element_bits);
    BandwidthProfile bw;
    bw.legion_input_Bps = C * D * static_cast<double>(activation_bits) * f / 8.0;
    bw.accumulator_Bps = C * R * D * psum_bits * f / 8.0;
    bw.psum_memory_Bps = R * D * psum_bits * f / 8.0;
    return bw;
}

std::vector<WorkloadSpec> dse_corner_workloads(Count seq_len, Count hidden, Count head_dim, Count weight_bits) {
    const PrecisionMode proj = projection_mode(weight_bits);
    return {
        WorkloadSpec{seq_len, hidden, head_dim, proj, Stage::QProj, 0, 0, 0},
        WorkloadSpec{seq_len, head_dim, seq_len, PrecisionMode::Dense8x8, Stage::AttnScore, 0, 0, 0},
        WorkloadSpec{seq_len, seq_len, head_dim, PrecisionMode::Dense8x8, Stage::AttnOutput, 0, 0, 0},
    };
}

std::vector<CriCandidate> default_cri_candidates() {
    std::vector<CriCandidate> out;
    for (auto [cores, dim] : {std::pair<Count, Count>{2, 64}, {4, 32}, {8, 16}, {16, 8}}) {
        ArchConfig a;
        a.dataflow = Dataflow::Legion;
        a.legions = 1;
        a.cores_per_legion = cores;
        a.core_dim = dim;
        a.psum_bank_bytes = 660'000;
        a.name = std::to_string(cores) + "x" + std::to_string(dim) + "x" + std::to_string(dim);
        out.push_back({a.name, a});
    }
    return out;
}

namespace {

void min_max(std::vector<CriScore>& scores, double CriScore::*raw, double CriScore::*norm) {
    auto [lo, hi] = std::minmax_element(scores.begin(), scores.end(),
                                        [&](const auto& a, const auto& b) { return a.*raw < b.*raw; });
    const double min = (*lo).*raw;
    const double span = (*hi).*raw - min;
    for (auto& s : scores) s.*norm = span > 0 ? (s.*raw - min) / span : 0.0;
}

}  // namespace

std::vector<CriScore> cri(const std::vector<CriCandidate>& candidates,
                          const std::vector<WorkloadSpec>& workloads, const CriWeights& w) {
    if (candidates.size() < 2) throw std::invalid_argument("cri: ≥2 candidates required");
    if (workloads.empty()) throw std::invalid_argument("cri: empty workload set");

    std::vector<CriScore> scores;
    for (const auto& c : candidates) {
        validate(c.arch);
        CriScore s;
        s.label = c.label;
        s.cores = c.arch.cores_per_legion;
        s.core_dim = c.arch.core_dim;
        s.bandwidth_raw = bandwidth_profile(c.arch, PrecisionMode::Dense8x8).legion_input_Bps;
        s.tfu_raw = static_cast<double>(tfu(c.arch, Topology::Legion));
        double sum = 0;
        for (const auto& wl : workloads)
            sum += static_cast<double>(legion_latency(tile_counts(wl, c.arch), c.arch));
        s.latency_raw = sum / static_cast<double>(workloads.size());
        scores.push_back(std::move(s));
    }
    min_max(scores, &CriScore::bandwidth_raw, &CriScore::bw_norm);
    min_max(scores, &CriScore::tfu_raw, &CriScore::tfu_norm);
    min_max(scores, &CriScore::latency_raw, &CriScore::latency_norm);
    for (auto& s : scores)
        s.cri = 1.0 / (w.bandwidth * s.bw_norm + w.tfu * s.tfu_norm + w.latency * s.latency_norm + kCriEpsilon);

    std::stable_sort(scores.begin(), scores.end(), [](const CriScore& a, const CriScore& b) {
        if (a.cri != b.cri) return a.cri > b.cri;
        if (a.core_dim != b.core_dim) return a.core_dim < b.core_dim;
        return a.cores > b.cores;
    });
    return scores;
}

}  // namespace dlegion

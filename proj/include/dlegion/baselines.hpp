#pragma once

#include <optional>
#include <vector>

#include "dlegion/analytic.hpp"
#include "dlegion/report.hpp"

namespace dlegion {

/// Weight-stationary cores pay a fill of 2(D-1) cycles per tile pass (skewed
/// weight load and activation skew) and a final drain of D-1. Either can be
/// overridden.
struct BaselineOptions {
    std::optional<Cycles> ws_pass_overhead;
    std::optional<Cycles> ws_drain;
};

/// Single-core latency of `spec` on one core of a WS, DiP or ADiP machine.
/// Tiles are D x D (C = 1); INT8-only machines run projections at R = 1.
Cycles baseline_latency(const WorkloadSpec& spec, const ArchConfig& arch, const BaselineOptions& opts = {});

/// Off-chip traffic of one workload on one core without any sharing: the
/// activation block is streamed once per n-tile pass, weights are read once
/// at their stored width, and psums are read-modify-written per K tile.
struct BaselineTraffic {
    Count weight_bytes = 0;
    Count activation_bytes = 0;
    Count psum_bytes = 0;
};
BaselineTraffic baseline_traffic(const WorkloadSpec& spec, const ArchConfig& arch, Count activation_bits = 8);

struct BaselineResult {
    std::vector<StageEvent> events;  // one per (layer, stage)
    SimReport report;
};

/// Runs a workload set on a WS/DiP/ADiP machine with `legions` private cores
/// (the TPU preset has four). Per-head workloads go round-robin over cores;
/// the rest are split along N over the cores.
BaselineResult run_baseline(const WorkloadSet& workloads, const ArchConfig& arch, const BaselineOptions& opts = {},
                            std::string model_name = {});

}  // namespace dlegion

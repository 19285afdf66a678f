#include "dlegion/orchestrator.hpp"

#include <algorithm>
#include <map>

#include "dlegion/analytic.hpp"

namespace dlegion {

std::string_view to_string(AttentionMapping m) noexcept {
    switch (m) {
        case AttentionMapping::HeadAligned: return "head-aligned";
        case AttentionMapping::AllLegions: return "all-legions";
        case AttentionMapping::PerHead: return "per-head";
    }
    return "?";
}

AttentionMapping attention_mapping_from_string(std::string_view text) {
    if (text == "head-aligned") return AttentionMapping::HeadAligned;
    if (text == "all-legions") return AttentionMapping::AllLegions;
    if (text == "per-head") return AttentionMapping::PerHead;
    throw ConfigError({"unknown attention mapping '" + std::string(text) + "'"});
}

std::size_t Assignment::workload_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : phases)
        for (const auto& q : p.queues) n += q.size();
    return n;
}

namespace {

struct Operands {
    std::uint64_t activation;
    std::uint64_t stationary;
    std::uint64_t output;
};

Operands operands_of(const WorkloadSpec& s, std::size_t spec_index) {
    const Count L = s.layer;
    const std::uint64_t head = s.head_id.value_or(kNoIndex);
    const std::uint64_t kv = s.kv_group_id.value_or(kNoIndex);
    const std::uint64_t out = matrix_id(MatrixKind::Output, L, spec_index);
    switch (s.stage) {
        case Stage::QProj:
            return {matrix_id(MatrixKind::LayerInput, L, 0), matrix_id(MatrixKind::WeightQ, L, head), out};
        case Stage::KProj:
            return {matrix_id(MatrixKind::LayerInput, L, 0), matrix_id(MatrixKind::WeightK, L, kv), out};
        case Stage::VProj:
            return {matrix_id(MatrixKind::LayerInput, L, 0), matrix_id(MatrixKind::WeightV, L, kv), out};
        case Stage::AttnScore:
            return {matrix_id(MatrixKind::Query, L, head), matrix_id(MatrixKind::Key, L, kv), out};
        case Stage::AttnOutput:
            return {matrix_id(MatrixKind::Score, L, head), matrix_id(MatrixKind::Value, L, kv), out};
        case Stage::OutProj:
            return {matrix_id(MatrixKind::AttnConcat, L, 0), matrix_id(MatrixKind::WeightO, L, 0), out};
    }
    return {};
}

bool per_head(const WorkloadSpec& s) { return s.head_id.has_value() || s.kv_group_id.has_value(); }

// Splits `tiles` n-tiles over `parts` Legions, earlier Legions taking the remainder.
std::pair<Count, Count> share(Count tiles, Count parts, Count j) {
    const Count base = tiles / parts;
    const Count extra = tiles % parts;
    const Count first = j * base + std::min(j, extra);
    return {first, base + (j < extra ? 1 : 0)};
}

}  // namespace

Assignment orchestrate(const WorkloadSet& set, const ArchConfig& arch, const MappingPolicy& policy) {
    validate(arch);
    const Count L = arch.legions;
    const Count D = arch.core_dim;

    // Group spec indices by (layer, stage), preserving emission order.
    std::map<std::pair<Count, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < set.specs.size(); ++i)
        groups[{set.specs[i].layer, static_cast<int>(set.specs[i].stage)}].push_back(i);

    Assignment out;
    out.legions = L;
    for (const auto& [key, indices] : groups) {
        Phase phase;
        phase.layer = key.first;
        phase.stage = static_cast<Stage>(key.second);
        phase.queues.assign(L, {});

        // Specs handled one at a time (N-partitioned) vs heads spread over groups.
        std::vector<std::size_t> heads;
        std::vector<std::size_t> partitioned;
        for (auto i : indices) (per_head(set.specs[i]) ? heads : partitioned).push_back(i);

        // Legions per N slice, splitting M, when N slices leave Legions idle.
        auto m_parts = [&](const WorkloadSpec& s, Count busy) {
            if (!policy.fill_idle_legions || busy >= L) return Count{1};
            return std::clamp<Count>(L / busy, 1, ceil_div(s.M, D));
        };

        auto emit = [&](std::size_t spec_index, Count legion, Count first_tile, Count tiles, Count round,
                        Count m_part, Count m_count) {
            const WorkloadSpec& parent = set.specs[spec_index];
            const Count width = arch.effective_ratio(parent.mode) * D;
            const Count col0 = first_tile * width;
            const Count cols = std::min(parent.N, (first_tile + tiles) * width) - col0;
            const auto [m0, mt] = share(ceil_div(parent.M, D), m_count, m_part);
            LegionWorkload w;
            w.spec_index = spec_index;
            w.slice = parent;
            w.slice.N = cols;
            w.slice.M = std::min(parent.M, (m0 + mt) * D) - m0 * D;
            w.row_offset = m0 * D;
            w.m_tile_offset = m0;
            w.col_offset = col0;
            w.n_tile_offset = first_tile;
            w.parent_n = parent.N;
            w.round = round;
            w.legion = static_cast<std::uint32_t>(legion);
            const auto ops = operands_of(parent, spec_index);
            w.activation_matrix = ops.activation;
            w.stationary_matrix = ops.stationary;
            w.output_matrix = ops.output;
            phase.queues[legion].push_back(w);
        };

        Count round = 0;
        if (!heads.empty()) {
            const auto& first = set.specs[heads.front()];
            const Count nt = ceil_div(first.N, arch.effective_ratio(first.mode) * D);
            Count group = 1;
            if (is_projection(phase.stage)) {
                if (policy.fill_idle_legions) group = std::clamp<Count>(L / heads.size(), 1, nt);
            } else {
                switch (policy.attention) {
                    case AttentionMapping::HeadAligned: {
                        const Count head_dim = phase.stage == Stage::AttnScore ? first.K : first.N;
                        group = std::clamp<Count>(std::min(L, ceil_div(head_dim, D)), 1, nt);
                        break;
                    }
                    case AttentionMapping::AllLegions: group = std::min(L, nt); break;
                    case AttentionMapping::PerHead: group = 1; break;
                }
            }
            const Count mp = m_parts(first, heads.size() * group);
            const Count width = group * mp;
            const Count concurrent = L / width;
            for (std::size_t i = 0; i < heads.size(); ++i) {
                const Count slot = i % concurrent;
                const Count r = i / concurrent;
                const auto& h = set.specs[heads[i]];
                const Count head_nt = ceil_div(h.N, arch.effective_ratio(h.mode) * D);
                for (Count j = 0; j < group; ++j) {
                    auto [t0, tn] = share(head_nt, group, j);
                    if (tn == 0) continue;
                    for (Count m = 0; m < mp; ++m) emit(heads[i], slot * width + j * mp + m, t0, tn, r, m, mp);
                }
            }
            round = ceil_div(heads.size(), concurrent);
        }
        for (auto i : partitioned) {
            const auto& spec = set.specs[i];
            const Count nt = ceil_div(spec.N, arch.effective_ratio(spec.mode) * D);
            const Count parts = std::min(L, nt);
            const Count mp = m_parts(spec, parts);
            for (Count j = 0; j < parts; ++j) {
                auto [t0, tn] = share(nt, parts, j);
                for (Count m = 0; m < mp; ++m) emit(i, j * mp + m, t0, tn, round, m, mp);
            }
            ++round;
        }
        phase.rounds = round;

        // Multicast groups: same activation operand in the same round.
        std::map<std::pair<std::uint64_t, Count>, std::uint64_t> masks;
        for (const auto& q : phase.queues)
            for (const auto& w : q) masks[{w.activation_matrix, w.round}] |= std::uint64_t{1} << w.legion;
        for (auto& q : phase.queues)
            for (auto& w : q) w.multicast_mask = masks[{w.activation_matrix, w.round}];

        out.phases.push_back(std::move(phase));
    }
    return out;
}

}  // namespace dlegion

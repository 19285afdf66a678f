#include "dlegion/workload.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dlegion {

std::string_view to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::QProj: return "QProj";
        case Stage::KProj: return "KProj";
        case Stage::VProj: return "VProj";
        case Stage::AttnScore: return "AttnScore";
        case Stage::AttnOutput: return "AttnOutput";
        case Stage::OutProj: return "OutProj";
    }
    return "?";
}

Stage stage_from_string(std::string_view text) {
    for (Stage s : kAllStages)
        if (to_string(s) == text) return s;
    throw ConfigError({"unknown stage '" + std::string(text) + "'"});
}

const WorkloadSpec& validate(const WorkloadSpec& spec) {
    std::vector<std::string> errs;
    if (spec.M < 1) errs.emplace_back("M ≥ 1 violated");
    if (spec.K < 1) errs.emplace_back("K ≥ 1 violated");
    if (spec.N < 1) errs.emplace_back("N ≥ 1 violated");
    if (!is_projection(spec.stage) && spec.mode != PrecisionMode::Dense8x8)
        errs.emplace_back(std::string(to_string(spec.stage)) + " must run Dense8x8");
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return spec;
}

WorkloadSet WorkloadSet::from_specs(std::vector<WorkloadSpec> specs) {
    WorkloadSet set;
    for (Stage s : kAllStages) set.per_stage_ops[s] = 0;
    for (const auto& spec : specs) {
        validate(spec);
        set.per_stage_ops[spec.stage] += spec.ops();
        set.total_ops += spec.ops();
    }
    set.specs = std::move(specs);
    return set;
}

PrecisionMode projection_mode(Count weight_bits) {
    switch (weight_bits) {
        case 2: return PrecisionMode::Proj8x2;
        case 4: return PrecisionMode::Proj8x4;
        case 8: return PrecisionMode::Dense8x8;
        default: throw ConfigError({"no projection mode for " + std::to_string(weight_bits) + "-bit weights"});
    }
}

WorkloadSet derive_attention_workloads(const ModelConfig& model, const WorkloadOptions& opts) {
    validate(model);
    const PrecisionMode proj = projection_mode(model.weight_bits);
    const Count S = model.seq_len;
    const Count H = model.num_heads;
    const Count G = model.num_kv_heads;
    const Count hd = model.head_dim;
    const Count group = model.heads_per_kv_group();

    std::vector<WorkloadSpec> specs;
    for (Count layer = 0; layer < model.layers; ++layer) {
        auto push = [&](Stage stage, Count M, Count K, Count N, PrecisionMode mode,
                        std::optional<Count> head, std::optional<Count> kv) {
            specs.push_back(WorkloadSpec{M, K, N, mode, stage, head, kv, layer});
        };
        if (opts.fused_projections) {
            push(Stage::QProj, S, model.hidden_size, H * hd, proj, std::nullopt, std::nullopt);
            push(Stage::KProj, S, model.hidden_size, G * hd, proj, std::nullopt, std::nullopt);
            push(Stage::VProj, S, model.hidden_size, G * hd, proj, std::nullopt, std::nullopt);
        } else {
            for (Count h = 0; h < H; ++h)
                push(Stage::QProj, S, model.hidden_size, hd, proj, h, h / group);
            for (Count g = 0; g < G; ++g)
                push(Stage::KProj, S, model.hidden_size, hd, proj, std::nullopt, g);
            for (Count g = 0; g < G; ++g)
                push(Stage::VProj, S, model.hidden_size, hd, proj, std::nullopt, g);
        }
        // scores = Q_h . K_g^T, out = P_h . V_g
        for (Count h = 0; h < H; ++h)
            push(Stage::AttnScore, S, hd, S, PrecisionMode::Dense8x8, h, h / group);
        for (Count h = 0; h < H; ++h)
            push(Stage::AttnOutput, S, S, hd, PrecisionMode::Dense8x8, h, h / group);
        push(Stage::OutProj, S, H * hd, model.hidden_size, proj, std::nullopt, std::nullopt);
    }
    return WorkloadSet::from_specs(std::move(specs));
}

std::map<Stage, double> stage_distribution(const WorkloadSet& set) {
    if (set.specs.empty() || set.total_ops == 0)
        throw std::invalid_argument("stage_distribution: empty workload set");
    std::map<Stage, double> out;
    for (Stage s : kAllStages) {
        auto it = set.per_stage_ops.find(s);
        const Count ops = it == set.per_stage_ops.end() ? 0 : it->second;
        out[s] = static_cast<double>(ops) / static_cast<double>(set.total_ops);
    }
    return out;
}

nlohmann::json to_json(const WorkloadSet& set) {
    nlohmann::json specs = nlohmann::json::array();
    for (const auto& s : set.specs) {
        nlohmann::json row = {{"layer", s.layer},
                              {"stage", std::string(to_string(s.stage))},
                              {"M", s.M},
                              {"K", s.K},
                              {"N", s.N},
                              {"mode", std::string(to_string(s.mode))},
                              {"ops", s.ops()}};
        row["head"] = s.head_id ? nlohmann::json(*s.head_id) : nlohmann::json(nullptr);
        row["kv_group"] = s.kv_group_id ? nlohmann::json(*s.kv_group_id) : nlohmann::json(nullptr);
        specs.push_back(std::move(row));
    }
    nlohmann::json per_stage = nlohmann::json::object();
    for (const auto& [stage, ops] : set.per_stage_ops) per_stage[std::string(to_string(stage))] = ops;
    return {{"specs", specs}, {"per_stage_ops", per_stage}, {"total_ops", set.total_ops}};
}

std::string to_csv(const WorkloadSet& set) {
    std::ostringstream out;
    out << "layer,stage,head,kv_group,M,K,N,mode,ops\n";
    for (const auto& s : set.specs) {
        out << s.layer << ',' << to_string(s.stage) << ',';
        if (s.head_id) out << *s.head_id;
        out << ',';
        if (s.kv_group_id) out << *s.kv_group_id;
        out << ',' << s.M << ',' << s.K << ',' << s.N << ',' << to_string(s.mode) << ',' << s.ops() << '\n';
    }
    return out.str();
}

}  // namespace dlegion

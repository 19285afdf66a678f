#include "dlegion/arch_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dlegion {

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration";
          for (const auto& d : diagnostics) msg += "\n  " + d;
          return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

std::string_view to_string(PrecisionMode mode) noexcept {
    switch (mode) {
        case PrecisionMode::Dense8x8: return "Dense8x8";
        case PrecisionMode::Proj8x4: return "Proj8x4";
        case PrecisionMode::Proj8x2: return "Proj8x2";
    }
    return "?";
}

PrecisionMode precision_mode_from_string(std::string_view text) {
    if (text == "Dense8x8") return PrecisionMode::Dense8x8;
    if (text == "Proj8x4") return PrecisionMode::Proj8x4;
    if (text == "Proj8x2") return PrecisionMode::Proj8x2;
    throw ConfigError({"unknown precision mode '" + std::string(text) + "'"});
}

std::string_view to_string(Dataflow dataflow) noexcept {
    switch (dataflow) {
        case Dataflow::Legion: return "legion";
        case Dataflow::WS: return "ws";
        case Dataflow::DiP: return "dip";
        case Dataflow::ADiP: return "adip";
    }
    return "?";
}

Dataflow dataflow_from_string(std::string_view text) {
    if (text == "legion") return Dataflow::Legion;
    if (text == "ws") return Dataflow::WS;
    if (text == "dip") return Dataflow::DiP;
    if (text == "adip") return Dataflow::ADiP;
    throw ConfigError({"unknown dataflow '" + std::string(text) + "'"});
}

std::string_view to_string(AttentionType type) noexcept {
    switch (type) {
        case AttentionType::MHA: return "MHA";
        case AttentionType::GQA: return "GQA";
        case AttentionType::MQA: return "MQA";
    }
    return "?";
}

std::vector<std::string> check(const ArchConfig& a) {
    std::vector<std::string> errs;
    if (a.legions < 1) errs.emplace_back("L ≥ 1 violated");
    if (a.legions > 64) errs.emplace_back("L ≤ 64 violated (6-bit legion id)");
    if (a.cores_per_legion < 1) errs.emplace_back("C ≥ 1 violated");
    if (a.core_dim < 1) errs.emplace_back("D ≥ 1 violated");
    if (!(a.frequency_hz > 0.0)) errs.emplace_back("frequency > 0 violated");
    if (a.accumulators_per_legion < 1) errs.emplace_back("accumulators_per_legion ≥ 1 violated");
    if (a.psum_bank_count < 1) errs.emplace_back("psum_bank_count ≥ 1 violated");
    if (a.psum_element_bits == 0 || a.psum_element_bits % 8 != 0)
        errs.emplace_back("psum_element_bits must be a positive multiple of 8");
    if (a.legion_link_bits == 0 || a.legion_link_bits % 8 != 0)
        errs.emplace_back("legion_link_bits divisible by 8 violated");
    if (a.core_dim >= 1 && a.psum_element_bits % 8 == 0) {
        const Count widest_tile = a.core_dim * (4 * a.core_dim) * (a.psum_element_bits / 8);
        if (a.psum_bank_bytes * a.psum_bank_count < widest_tile)
            errs.emplace_back("psum capacity violated: " + std::to_string(a.psum_bank_count) + " × " +
                              std::to_string(a.psum_bank_bytes) + " B < one output tile of " +
                              std::to_string(widest_tile) + " B");
    }
    return errs;
}

std::vector<std::string> check(const ModelConfig& m) {
    std::vector<std::string> errs;
    if (m.layers < 1) errs.emplace_back("layers ≥ 1 violated");
    if (m.hidden_size < 1) errs.emplace_back("hidden_size ≥ 1 violated");
    if (m.num_heads < 1) errs.emplace_back("H ≥ 1 violated");
    if (m.num_kv_heads < 1) errs.emplace_back("G ≥ 1 violated");
    if (m.num_heads >= 1 && m.num_kv_heads >= 1 && m.num_heads % m.num_kv_heads != 0)
        errs.emplace_back("H mod G ≠ 0 (H=" + std::to_string(m.num_heads) +
                          ", G=" + std::to_string(m.num_kv_heads) + ")");
    if (m.head_dim < 1) errs.emplace_back("head_dim ≥ 1 violated");
    if (m.seq_len < 1) errs.emplace_back("seq_len ≥ 1 violated");
    if (m.weight_bits != 2 && m.weight_bits != 4 && m.weight_bits != 8)
        errs.emplace_back("weight_bits must be 2, 4 or 8");
    if (m.activation_bits != 8) errs.emplace_back("activation_bits must be 8");
    return errs;
}

const ArchConfig& validate(const ArchConfig& arch) {
    if (auto errs = check(arch); !errs.empty()) throw ConfigError(std::move(errs));
    return arch;
}

const ModelConfig& validate(const ModelConfig& model) {
    if (auto errs = check(model); !errs.empty()) throw ConfigError(std::move(errs));
    return model;
}

namespace {

ArchConfig make_dlegion(Count legions) {
    ArchConfig a;
    a.name = "dlegion-" + std::to_string(legions);
    a.dataflow = Dataflow::Legion;
    a.legions = legions;
    a.cores_per_legion = 8;
    a.core_dim = 16;
    return a;
}

ArchConfig make_single(std::string name, Dataflow dataflow, Count dim) {
    ArchConfig a;
    a.name = std::move(name);
    a.dataflow = dataflow;
    a.legions = 1;
    a.cores_per_legion = 1;
    a.core_dim = dim;
    a.accumulators_per_legion = 1;
    a.psum_bank_count = 1;
    // One 64x(4x64) 32-bit output strip.
    a.psum_bank_bytes = 4 * dim * dim * 4;
    return a;
}

ModelConfig bitnet(Count kv_heads) {
    ModelConfig m;
    m.name = kv_heads == 16 ? "bitnet-1.58b" : "bitnet-1.58b-kv";
    m.layers = 32;
    m.hidden_size = 2560;
    m.num_heads = 16;
    m.num_kv_heads = kv_heads;
    m.head_dim = 128;
    m.seq_len = 2048;
    m.weight_bits = 2;
    m.activation_bits = 8;
    return m;
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "dlegion-8", "dlegion-32", "dlegion-64", "ws-64", "dip-64",
        "adip-64",   "tpuv4i",     "bitnet-1.58b", "bitnet-1.58b-kv"};
    return names;
}

bool is_model_preset(std::string_view name) {
    return name == "bitnet-1.58b" || name == "bitnet-1.58b-kv";
}

bool is_arch_preset(std::string_view name) {
    return !is_model_preset(name) &&
           std::find(preset_names().begin(), preset_names().end(), name) != preset_names().end();
}

ArchConfig arch_preset(std::string_view name) {
    if (name == "dlegion-8") return make_dlegion(8);
    if (name == "dlegion-32") return make_dlegion(32);
    if (name == "dlegion-64") return make_dlegion(64);
    if (name == "ws-64") return make_single("ws-64", Dataflow::WS, 64);
    if (name == "dip-64") return make_single("dip-64", Dataflow::DiP, 64);
    if (name == "adip-64") return make_single("adip-64", Dataflow::ADiP, 64);
    if (name == "tpuv4i") {
        // Four independent 128x128 weight-stationary MXUs, INT8 only.
        ArchConfig a = make_single("tpuv4i", Dataflow::WS, 128);
        a.legions = 4;
        a.frequency_hz = 1.05e9;
        return a;
    }
    throw ConfigError({"unknown architecture preset '" + std::string(name) + "'"});
}

ModelConfig model_preset(std::string_view name) {
    if (name == "bitnet-1.58b") return bitnet(16);
    if (name == "bitnet-1.58b-kv") return bitnet(4);
    throw ConfigError({"unknown model preset '" + std::string(name) + "'"});
}

std::pair<ArchConfig, ModelConfig> preset(std::string_view name) {
    if (is_model_preset(name)) return {arch_preset("dlegion-8"), model_preset(name)};
    if (is_arch_preset(name)) return {arch_preset(name), model_preset("bitnet-1.58b")};
    throw ConfigError({"unknown preset '" + std::string(name) + "'"});
}

nlohmann::json to_json(const ArchConfig& a) {
    nlohmann::json body = {
        {"name", a.name},
        {"dataflow", std::string(to_string(a.dataflow))},
        {"legions", a.legions},
        {"cores_per_legion", a.cores_per_legion},
        {"core_dim", a.core_dim},
        {"pipeline_stages", a.pipeline_stages},
        {"frequency_hz", a.frequency_hz},
        {"accumulators_per_legion", a.accumulators_per_legion},
        {"psum_bank_count", a.psum_bank_count},
        {"psum_bank_bytes", a.psum_bank_bytes},
        {"legion_link_bits", a.legion_link_bits},
        {"psum_element_bits", a.psum_element_bits},
    };
    return {{"schema_version", kConfigSchemaVersion}, {"arch", body}};
}

nlohmann::json to_json(const ModelConfig& m) {
    nlohmann::json body = {
        {"name", m.name},
        {"layers", m.layers},
        {"hidden_size", m.hidden_size},
        {"num_heads", m.num_heads},
        {"num_kv_heads", m.num_kv_heads},
        {"head_dim", m.head_dim},
        {"seq_len", m.seq_len},
        {"weight_bits", m.weight_bits},
        {"activation_bits", m.activation_bits},
    };
    return {{"schema_version", kConfigSchemaVersion}, {"model", body}};
}

namespace {

const nlohmann::json& section(const nlohmann::json& doc, const char* key) {
    std::vector<std::string> errs;
    if (!doc.is_object()) throw ConfigError({"config document must be a JSON object"});
    if (!doc.contains("schema_version"))
        errs.emplace_back("missing required field 'schema_version'");
    else if (doc.at("schema_version") != kConfigSchemaVersion)
        errs.emplace_back("unsupported schema_version " + doc.at("schema_version").dump());
    if (!doc.contains(key) || !doc.at(key).is_object())
        errs.emplace_back(std::string("missing object '") + key + "'");
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return doc.at(key);
}

// Reads field `key` into `out`, collecting diagnostics instead of throwing.
template <typename T>
void read_field(const nlohmann::json& body, const char* key, T& out, bool required,
                std::vector<std::string>& errs) {
    if (!body.contains(key)) {
        if (required) errs.emplace_back(std::string("missing required field '") + key + "'");
        return;
    }
    const auto& v = body.at(key);
    if constexpr (std::is_same_v<T, Count>) {
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0)) {
            errs.emplace_back(std::string("field '") + key + "' must be a non-negative integer");
            return;
        }
    } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) {
            errs.emplace_back(std::string("field '") + key + "' must be a number");
            return;
        }
    } else {
        if (!v.is_string()) {
            errs.emplace_back(std::string("field '") + key + "' must be a string");
            return;
        }
    }
    out = v.get<T>();
}

}  // namespace

ArchConfig arch_from_json(const nlohmann::json& doc) {
    const auto& body = section(doc, "arch");
    ArchConfig a;
    std::vector<std::string> errs;
    std::string dataflow = "legion";
    read_field(body, "name", a.name, false, errs);
    read_field(body, "dataflow", dataflow, true, errs);
    read_field(body, "legions", a.legions, true, errs);
    read_field(body, "cores_per_legion", a.cores_per_legion, true, errs);
    read_field(body, "core_dim", a.core_dim, true, errs);
    read_field(body, "pipeline_stages", a.pipeline_stages, false, errs);
    read_field(body, "frequency_hz", a.frequency_hz, false, errs);
    read_field(body, "accumulators_per_legion", a.accumulators_per_legion, true, errs);
    read_field(body, "psum_bank_count", a.psum_bank_count, true, errs);
    read_field(body, "psum_bank_bytes", a.psum_bank_bytes, true, errs);
    read_field(body, "legion_link_bits", a.legion_link_bits, true, errs);
    read_field(body, "psum_element_bits", a.psum_element_bits, false, errs);
    try {
        a.dataflow = dataflow_from_string(dataflow);
    } catch (const ConfigError& e) {
        errs.insert(errs.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return validate(a);
}

ModelConfig model_from_json(const nlohmann::json& doc) {
    const auto& body = section(doc, "model");
    ModelConfig m;
    std::vector<std::string> errs;
    read_field(body, "name", m.name, false, errs);
    read_field(body, "layers", m.layers, true, errs);
    read_field(body, "hidden_size", m.hidden_size, true, errs);
    read_field(body, "num_heads", m.num_heads, true, errs);
    read_field(body, "num_kv_heads", m.num_kv_heads, true, errs);
    read_field(body, "head_dim", m.head_dim, true, errs);
    read_field(body, "seq_len", m.seq_len, true, errs);
    read_field(body, "weight_bits", m.weight_bits, true, errs);
    read_field(body, "activation_bits", m.activation_bits, true, errs);
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return validate(m);
}

namespace {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({"'" + path + "': " + e.what()});
    }
}

}  // namespace

ArchConfig load_arch_file(const std::string& path) { return arch_from_json(read_json_file(path)); }

ModelConfig load_model_file(const std::string& path) { return model_from_json(read_json_file(path)); }

std::uint64_t config_hash(const nlohmann::json& canonical) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace dlegion

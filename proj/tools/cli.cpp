#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "dlegion/analytic.hpp"
#include "dlegion/baselines.hpp"
#include "dlegion/errors.hpp"
#include "dlegion/report.hpp"
#include "dlegion/simulator.hpp"
#include "dlegion/ztb.hpp"

namespace dlegion::cli {

namespace {

namespace fs = std::filesystem;

struct FunctionalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string hex(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

// A preset name, a path, or a bare name looked up in $DLEGION_CONFIG_DIR
// (with and without a .json suffix).
std::optional<fs::path> locate(const std::string& name) {
    if (fs::is_regular_file(name)) return fs::path(name);
    if (const char* dir = std::getenv(kConfigDirEnv)) {
        for (const auto& candidate : {fs::path(dir) / name, fs::path(dir) / (name + ".json")})
            if (fs::is_regular_file(candidate)) return candidate;
    }
    return std::nullopt;
}

ArchConfig resolve_arch(const std::string& name) {
    if (is_arch_preset(name)) return arch_preset(name);
    if (auto path = locate(name)) return validate(load_arch_file(path->string()));
    throw IoError("unknown architecture '" + name + "': not a preset and no such file");
}

ModelConfig resolve_model(const std::string& name) {
    if (is_model_preset(name)) return model_preset(name);
    if (auto path = locate(name)) return validate(load_model_file(path->string()));
    throw IoError("unknown model '" + name + "': not a preset and no such file");
}

ZeroTileBook load_ztb(const std::string& name) {
    const auto path = locate(name);
    if (!path) throw IoError("cannot open zero-tile book '" + name + "'");
    try {
        return ZeroTileBook::load(path->string());
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw ShapeMismatch(std::string(e.what()) + " in '" + name + "'");
    }
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << text;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) out << text;
    else write_file(path, text);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ','))
        if (!item.empty()) items.push_back(item);
    return items;
}

// ---------------------------------------------------------------- workloads

std::string workloads_table(const WorkloadSet& set, const ModelConfig& model, ReportFormat format) {
    const auto share = stage_distribution(set);
    struct Row {
        Count count = 0;
        const WorkloadSpec* first = nullptr;
    };
    std::map<Stage, Row> rows;
    for (const auto& s : set.specs) {
        auto& r = rows[s.stage];
        if (!r.first) r.first = &s;
        ++r.count;
    }
    if (format == ReportFormat::Json) {
        nlohmann::ordered_json doc;
        doc["model"] = model.name;
        doc["stages"] = nlohmann::ordered_json::array();
        for (Stage st : kAllStages) {
            const auto& r = rows[st];
            nlohmann::ordered_json j;
            j["stage"] = to_string(st);
            j["workloads"] = r.count;
            if (r.first) {
                j["M"] = r.first->M;
                j["K"] = r.first->K;
                j["N"] = r.first->N;
                j["mode"] = to_string(r.first->mode);
            }
            j["ops"] = set.per_stage_ops.count(st) ? set.per_stage_ops.at(st) : 0;
            j["ops_fraction"] = share.at(st);
            doc["stages"].push_back(j);
        }
        doc["total_ops"] = set.total_ops;
        return doc.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "# model=" << model.name << "\nstage,workloads,M,K,N,mode,ops,ops_fraction\n";
    for (Stage st : kAllStages) {
        const auto& r = rows[st];
        out << to_string(st) << ',' << r.count << ',';
        if (r.first)
            out << r.first->M << ',' << r.first->K << ',' << r.first->N << ',' << to_string(r.first->mode);
        else
            out << ",,,";
        out << ',' << (set.per_stage_ops.count(st) ? set.per_stage_ops.at(st) : 0) << ',' << fmt(share.at(st))
            << '\n';
    }
    out << "Total," << set.specs.size() << ",,,,," << set.total_ops << ",1\n";
    return out.str();
}

// ---------------------------------------------------------------------- dse

struct DseGrid {
    std::vector<CriCandidate> candidates = default_cri_candidates();
    CriWeights weights;
    Count seq_len = 2048, hidden = 2560, head_dim = 64, weight_bits = 2;
};

DseGrid load_grid(const std::string& name) {
    const auto path = locate(name);
    if (!path) throw IoError("cannot open grid file '" + name + "'");
    std::ifstream in(*path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({"'" + name + "': " + e.what()});
    }
    DseGrid g;
    std::vector<std::string> errs;
    if (doc.value("schema_version", 0) != 1) errs.emplace_back("schema_version must be 1");
    if (!doc.contains("candidates") || !doc["candidates"].is_array()) {
        errs.emplace_back("candidates: required array");
        throw ConfigError(errs);
    }
    g.candidates.clear();
    for (const auto& c : doc["candidates"]) {
        ArchConfig a = default_cri_candidates().front().arch;
        try {
            a.cores_per_legion = c.at("cores").get<Count>();
            a.core_dim = c.at("core_dim").get<Count>();
            a.legions = c.value("legions", Count{1});
            a.pipeline_stages = c.value("pipeline_stages", a.pipeline_stages);
        } catch (const nlohmann::json::exception& e) {
            errs.emplace_back(std::string("candidate: ") + e.what());
            continue;
        }
        a.name = c.value("label", std::to_string(a.cores_per_legion) + "x" + std::to_string(a.core_dim) + "x" +
                                      std::to_string(a.core_dim));
        for (auto& d : check(a)) errs.push_back(a.name + ": " + d);
        g.candidates.push_back({a.name, a});
    }
    if (doc.contains("weights")) {
        const auto& w = doc["weights"];
        g.weights.bandwidth = w.value("bandwidth", 1.0);
        g.weights.tfu = w.value("tfu", 1.0);
        g.weights.latency = w.value("latency", 1.0);
    }
    if (doc.contains("workloads")) {
        const auto& w = doc["workloads"];
        g.seq_len = w.value("seq_len", g.seq_len);
        g.hidden = w.value("hidden", g.hidden);
        g.head_dim = w.value("head_dim", g.head_dim);
        g.weight_bits = w.value("weight_bits", g.weight_bits);
    }
    if (!errs.empty()) throw ConfigError(errs);
    return g;
}

// One 64x64 core against sixteen 16x16 cores at equal PE count.
std::string granularity_table(ReportFormat format) {
    ArchConfig mono = default_cri_candidates().front().arch;
    mono.cores_per_legion = 1;
    mono.core_dim = 64;
    mono.name = "1x64x64";
    ArchConfig spatial = mono;
    spatial.cores_per_legion = 16;
    spatial.core_dim = 16;
    spatial.name = "16x16x16";

    const auto corners = dse_corner_workloads();
    auto latency = [&](const ArchConfig& a, const WorkloadSpec& s) {
        return static_cast<double>(legion_latency(tile_counts(s, a), a));
    };
    struct Metric {
        std::string name;
        double mono, spatial;
    };
    const auto bm = bandwidth_profile(mono, PrecisionMode::Dense8x8);
    const auto bs = bandwidth_profile(spatial, PrecisionMode::Dense8x8);
    std::vector<Metric> metrics = {
        {"input_bandwidth_Bps", bm.legion_input_Bps, bs.legion_input_Bps},
        {"psum_bandwidth_Bps", bm.psum_memory_Bps, bs.psum_memory_Bps},
        {"tfu_cycles", static_cast<double>(tfu(mono, Topology::SingleCore)),
         static_cast<double>(tfu(spatial, Topology::Legion))},
    };
    for (const auto& s : corners) {
        metrics.push_back({"latency_" + std::string(to_string(s.stage)) + "_cycles", latency(mono, s),
                           latency(spatial, s)});
        WorkloadSpec dense = s;
        dense.mode = PrecisionMode::Dense8x8;
        if (s.mode != PrecisionMode::Dense8x8)
            metrics.push_back({"latency_" + std::string(to_string(s.stage)) + "_dense_cycles", latency(mono, dense),
                               latency(spatial, dense)});
    }
    if (format == ReportFormat::Json) {
        nlohmann::ordered_json doc = nlohmann::ordered_json::array();
        for (const auto& m : metrics)
            doc.push_back({{"metric", m.name}, {mono.name, m.mono}, {spatial.name, m.spatial},
                           {"ratio", m.spatial / m.mono}});
        return doc.dump(2);
    }
    std::ostringstream out;
    out << "metric," << mono.name << ',' << spatial.name << ",ratio\n";
    for (const auto& m : metrics) out << m.name << ',' << fmt(m.mono) << ',' << fmt(m.spatial) << ',' << fmt(m.spatial / m.mono) << '\n';
    return out.str();
}

std::string cri_table(const std::vector<CriScore>& scores, ReportFormat format) {
    if (format == ReportFormat::Json) {
        nlohmann::ordered_json doc = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const auto& s = scores[i];
            doc.push_back({{"rank", i + 1},
                           {"label", s.label},
                           {"cores", s.cores},
                           {"core_dim", s.core_dim},
                           {"legion_input_Bps", s.bandwidth_raw},
                           {"tfu_cycles", s.tfu_raw},
                           {"mean_latency_cycles", s.latency_raw},
                           {"bw_norm", s.bw_norm},
                           {"tfu_norm", s.tfu_norm},
                           {"latency_norm", s.latency_norm},
                           {"cri", s.cri}});
        }
        return doc.dump(2);
    }
    std::ostringstream out;
    out << "rank,label,cores,core_dim,legion_input_Bps,tfu_cycles,mean_latency_cycles,bw_norm,tfu_norm,latency_norm,"
           "cri\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& s = scores[i];
        out << i + 1 << ',' << s.label << ',' << s.cores << ',' << s.core_dim << ',' << fmt(s.bandwidth_raw) << ','
            << fmt(s.tfu_raw) << ',' << fmt(s.latency_raw) << ',' << fmt(s.bw_norm) << ',' << fmt(s.tfu_norm) << ','
            << fmt(s.latency_norm) << ',' << fmt(s.cri) << '\n';
    }
    return out.str();
}

std::string dse_output(const DseGrid& grid, ReportFormat format) {
    const auto corners = dse_corner_workloads(grid.seq_len, grid.hidden, grid.head_dim, grid.weight_bits);
    const auto scores = cri(grid.candidates, corners, grid.weights);
    if (format == ReportFormat::Json)
        return "{\n\"ranking\": " + cri_table(scores, format) + ",\n\"granularity\": " +
               granularity_table(format) + "\n}\n";
    return cri_table(scores, format) + "\n# granularity: 1x64x64 vs 16x16x16 (ratio = spatial / monolithic)\n" +
           granularity_table(format);
}

// ----------------------------------------------------------------- simulate

struct RunSpec {
    ArchConfig arch;
    ModelConfig model;
    SimOptions sim;
    BaselineOptions baseline;
    bool fused_projections = false;
};

SimReport run_arch(const RunSpec& spec) {
    const auto set = derive_attention_workloads(spec.model, {spec.fused_projections});
    if (spec.arch.dataflow == Dataflow::Legion) return simulate(set, spec.arch, spec.sim, spec.model.name).report;
    return run_baseline(set, spec.arch, spec.baseline, spec.model.name).report;
}

std::string manifest_hash(const RunSpec& spec) {
    nlohmann::json doc = {{"arch", to_json(spec.arch)},
                          {"model", to_json(spec.model)},
                          {"bw_stall", spec.sim.bw_stall},
                          {"spatial_reduction", spec.sim.spatial_reduction},
                          {"attention", to_string(spec.sim.mapping.attention)},
                          {"fill_idle", spec.sim.mapping.fill_idle_legions},
                          {"fused", spec.fused_projections},
                          {"seed", spec.sim.seed}};
    for (const auto& [stage, book] : spec.sim.ztbs) {
        const auto bytes = book.serialize();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (auto b : bytes) h = (h ^ b) * 0x100000001b3ULL;
        doc["ztb"][std::string(to_string(stage))] = hex(h);
    }
    return hex(config_hash(doc));
}

// Runs one sampled workload per stage of layer 0 through the element-level
// core model and checks it against the plain integer product.
void functional_check(const RunSpec& spec, Count max_rows, std::ostream& err) {
    const auto set = derive_attention_workloads(spec.model, {spec.fused_projections});
    std::map<Stage, const WorkloadSpec*> sample;
    for (const auto& s : set.specs)
        if (s.layer == 0 && !sample.count(s.stage)) sample[s.stage] = &s;
    std::uint64_t salt = 0;
    for (const auto& [stage, s] : sample) {
        WorkloadSpec w = *s;
        w.M = std::min(w.M, max_rows);
        const ZeroTileBook* ztb = nullptr;
        if (auto it = spec.sim.ztbs.find(stage); it != spec.sim.ztbs.end()) ztb = &it->second;
        const auto [A, W] = random_operands(w, spec.arch, spec.sim.seed * 1000003ULL + salt++, ztb);
        const IntMatrix got = run_functional(w, spec.arch, A, W, ztb);
        const IntMatrix want = reference_matmul(A, W);
        Count mismatches = 0;
        for (std::size_t i = 0; i < want.rows(); ++i)
            for (std::size_t j = 0; j < want.cols(); ++j) mismatches += got(i, j) != want(i, j);
        err << "functional " << to_string(stage) << " (" << w.M << "x" << w.K << "x" << w.N << ", "
            << to_string(w.mode) << "): " << (mismatches ? "FAIL" : "ok") << '\n';
        if (mismatches)
            throw FunctionalFailure("functional: FAIL (" + std::to_string(mismatches) + " mismatching elements in " +
                                    std::string(to_string(stage)) + ")");
    }
    err << "functional: PASS\n";
}

// ------------------------------------------------------------------ compare

struct Comparison {
    std::string model;
    std::vector<SimReport> reports;
    std::size_t reference = 0;
};

Comparison run_comparison(const std::vector<RunSpec>& runs) {
    std::vector<std::future<SimReport>> jobs;
    for (const auto& r : runs) jobs.push_back(std::async(std::launch::async, [&r] { return run_arch(r); }));
    Comparison c;
    c.model = runs.front().model.name;
    for (auto& j : jobs) c.reports.push_back(j.get());
    return c;
}

std::string comparison_table(const Comparison& c, ReportFormat format) {
    const SimReport& ref = c.reports[c.reference];
    std::vector<std::string> names = metric_names();
    names.emplace_back("memory_bytes");
    if (format == ReportFormat::Json) {
        nlohmann::ordered_json doc;
        doc["model"] = c.model;
        doc["reference"] = ref.arch;
        doc["reports"] = nlohmann::ordered_json::object();
        for (const auto& r : c.reports) doc["reports"][r.arch] = nlohmann::ordered_json::parse(emit(r, ReportFormat::Json));
        doc["ratios"] = nlohmann::ordered_json::object();
        for (const auto& r : c.reports) {
            if (&r == &ref) continue;
            doc["ratios"][r.arch + "/" + ref.arch] =
                nlohmann::ordered_json::parse(emit_ratio_table(r, ref, ReportFormat::Json))["ratios"];
        }
        return doc.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "# model=" << c.model << "\narch,stage";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (const auto& r : c.reports) {
        auto row = [&](std::string_view label, const StageMetrics& m) {
            out << r.arch << ',' << label;
            for (const auto& n : names) {
                const double v = metric_value(m, n);
                if (n == "wall_time_s" || n == "throughput_ops" || n == "pe_active_fraction") out << ',' << fmt(v);
                else out << ',' << static_cast<std::uint64_t>(v);
            }
            out << '\n';
        };
        for (Stage s : kAllStages) row(to_string(s), r.stages.at(s));
        row("Total", r.total);
    }
    out << "\n# ratios: arch / " << ref.arch << "\nnumerator,denominator,stage";
    for (const auto& n : names) out << ',' << n << "_ratio";
    out << '\n';
    for (const auto& r : c.reports) {
        if (&r == &ref) continue;
        for (const auto& row : ratio_table(r, ref)) {
            out << r.arch << ',' << ref.arch << ',' << row.row;
            for (double v : row.ratios) out << ',' << (std::isnan(v) ? std::string("nan") : fmt(v));
            out << '\n';
        }
    }
    return out.str();
}

std::size_t default_reference(const std::vector<RunSpec>& runs) {
    for (std::size_t i = runs.size(); i-- > 0;)
        if (runs[i].arch.dataflow == Dataflow::Legion) return i;
    return runs.size() - 1;
}

// -------------------------------------------------------------------- repro

std::string scaling_table(const ModelConfig& model, const std::map<std::string, SimReport>& sims) {
    std::ostringstream out;
    out << "# model=" << model.name << "\narch,legions,pes,peak_ops_proj8x2,peak_ops_dense,cycles,throughput_ops\n";
    for (const char* name : {"dlegion-8", "dlegion-32", "dlegion-64"}) {
        const auto a = arch_preset(name);
        const auto& r = sims.at(name);
        out << name << ',' << a.legions << ',' << a.total_pes() << ',' << fmt(peak_throughput(a, PrecisionMode::Proj8x2))
            << ',' << fmt(peak_throughput(a, PrecisionMode::Dense8x8)) << ',' << r.total.cycles << ','
            << fmt(r.total.throughput_ops) << '\n';
    }
    return out.str();
}

// ------------------------------------------------------------------ helpers

void add_format(CLI::App* cmd, std::string& format, const std::string& def) {
    format = def;
    cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

struct SimFlags {
    std::string attn_policy = "head-aligned";
    bool no_fill_idle = false;
    bool no_spatial_reduction = false;
    bool bw_stall = false;
    bool fused = false;
    std::uint64_t seed = 0;

    void add(CLI::App* cmd) {
        cmd->add_option("--attn-policy", attn_policy, "Attention mapping: head-aligned, all-legions, per-head")
            ->capture_default_str();
        cmd->add_flag("--no-fill-idle", no_fill_idle, "Do not split workloads to occupy idle Legions");
        cmd->add_flag("--no-spatial-reduction", no_spatial_reduction, "Count psum traffic per core");
        cmd->add_flag("--bw-stall", bw_stall, "Stall windows whose operands exceed link bandwidth");
        cmd->add_flag("--fused-proj", fused, "Emit fused Q/K/V projections instead of per-head GEMMs");
        cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    }

    RunSpec spec(const ArchConfig& arch, const ModelConfig& model) const {
        RunSpec r{arch, model, {}, {}, fused};
        r.sim.bw_stall = bw_stall;
        r.sim.spatial_reduction = !no_spatial_reduction;
        r.sim.seed = seed;
        r.sim.mapping.attention = attention_mapping_from_string(attn_policy);
        r.sim.mapping.fill_idle_legions = !no_fill_idle;
        return r;
    }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"D-Legion simulator and analytic toolkit", "dlegion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // workloads
    auto* wl = app.add_subcommand("workloads", "Attention workload table of a model");
    std::string wl_model = "bitnet-1.58b", wl_format, wl_out;
    bool wl_detail = false, wl_fused = false;
    wl->add_option("--preset,--model", wl_model, "Model preset or config file")->capture_default_str();
    wl->add_flag("--detail", wl_detail, "List every workload instead of the per-stage table");
    wl->add_flag("--fused-proj", wl_fused, "Fused Q/K/V projections");
    wl->add_option("--out", wl_out, "Output file (default stdout)");
    add_format(wl, wl_format, "csv");

    // dse
    auto* dse = app.add_subcommand("dse", "Legion granularity sweep and CRI ranking");
    std::string dse_grid, dse_format, dse_out;
    dse->add_option("--grid", dse_grid, "Candidate grid file (default: 2x64x64, 4x32x32, 8x16x16, 16x8x8)");
    dse->add_option("--out", dse_out, "Output file (default stdout)");
    add_format(dse, dse_format, "csv");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate one architecture on one model");
    std::string sim_arch = "dlegion-8", sim_model = "bitnet-1.58b", sim_ztb, sim_format, sim_out, sim_ratio;
    bool sim_functional = false;
    Count sim_rows = 0;
    double sim_sparsity = -1;
    SimFlags sim_flags;
    sim->add_option("--arch", sim_arch, "Architecture preset or config file")->capture_default_str();
    sim->add_option("--model", sim_model, "Model preset or config file")->capture_default_str();
    sim->add_option("--ztb", sim_ztb, "Zero-tile book applied to every Q/K/V projection head");
    sim->add_option("--ztb-sparsity", sim_sparsity, "Generate random fully-sparse windows at this rate instead")
        ->check(CLI::Range(0.0, 1.0));
    sim->add_flag("--functional", sim_functional, "Check sampled workloads element-exactly against an oracle");
    sim->add_option("--functional-rows", sim_rows, "Rows per sampled functional workload (default 2D)");
    sim->add_option("--out", sim_out, "Report file (default stdout)");
    sim->add_option("--ratio", sim_ratio, "Baseline report (JSON) to emit a ratio table against");
    add_format(sim, sim_format, "json");
    sim_flags.add(sim);

    // compare
    auto* cmp = app.add_subcommand("compare", "Run several architectures on one model");
    std::string cmp_model = "bitnet-1.58b", cmp_archs, cmp_format, cmp_out, cmp_ref;
    SimFlags cmp_flags;
    cmp->add_option("--model", cmp_model, "Model preset or config file")->capture_default_str();
    cmp->add_option("--archs", cmp_archs, "Comma-separated architectures")->required();
    cmp->add_option("--reference", cmp_ref, "Denominator of the ratio table (default: last Legion arch)");
    cmp->add_option("--out", cmp_out, "Output directory (default stdout)");
    add_format(cmp, cmp_format, "csv");
    cmp_flags.add(cmp);

    // ztb-gen
    auto* zg = app.add_subcommand("ztb-gen", "Generate a random zero-tile book");
    std::string zg_arch = "dlegion-8", zg_model = "bitnet-1.58b", zg_stage = "QProj", zg_out;
    double zg_rate = 0.5;
    std::uint64_t zg_seed = 0;
    Count zg_k = 0, zg_n = 0;
    std::string zg_mode;
    zg->add_option("--arch", zg_arch, "Architecture preset or config file")->capture_default_str();
    zg->add_option("--model", zg_model, "Model whose workload shape the book covers")->capture_default_str();
    zg->add_option("--stage", zg_stage, "Stage of the model workload")->capture_default_str();
    zg->add_option("-K,--k", zg_k, "Explicit K (overrides the model)");
    zg->add_option("-N,--n", zg_n, "Explicit N (overrides the model)");
    zg->add_option("--mode", zg_mode, "Precision mode with explicit K/N");
    zg->add_option("--sparsity", zg_rate, "Probability a window is fully sparse")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    zg->add_option("--seed", zg_seed, "Random seed")->capture_default_str();
    zg->add_option("--out", zg_out, "Output file")->required();

    // repro
    auto* rp = app.add_subcommand("repro", "Write the full reproduction bundle of CSV tables");
    std::string rp_out;
    rp->add_option("--out", rp_out, "Output directory")->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (wl->parsed()) {
            const auto model = resolve_model(wl_model);
            const auto set = derive_attention_workloads(model, {wl_fused});
            const auto format = report_format_from_string(wl_format);
            std::string text;
            if (!wl_detail) text = workloads_table(set, model, format);
            else if (format == ReportFormat::Json) text = to_json(set).dump(2) + "\n";
            else text = to_csv(set);
            write_output(wl_out, text, out);
        } else if (dse->parsed()) {
            const DseGrid grid = dse_grid.empty() ? DseGrid{} : load_grid(dse_grid);
            write_output(dse_out, dse_output(grid, report_format_from_string(dse_format)), out);
        } else if (sim->parsed()) {
            RunSpec spec = sim_flags.spec(resolve_arch(sim_arch), resolve_model(sim_model));
            if (!sim_ztb.empty() && sim_sparsity >= 0)
                throw std::invalid_argument("--ztb and --ztb-sparsity are mutually exclusive");
            if (!sim_ztb.empty() || sim_sparsity >= 0) {
                if (spec.arch.dataflow != Dataflow::Legion)
                    throw std::invalid_argument("zero-tile books need a Legion architecture");
                const auto set = derive_attention_workloads(spec.model, {spec.fused_projections});
                for (Stage st : {Stage::QProj, Stage::KProj, Stage::VProj}) {
                    const auto it = std::find_if(set.specs.begin(), set.specs.end(),
                                                 [&](const WorkloadSpec& s) { return s.stage == st; });
                    WorkloadSpec parent = *it;
                    ZeroTileBook book;
                    if (!sim_ztb.empty()) {
                        book = load_ztb(sim_ztb);
                    } else {
                        const Count D = spec.arch.core_dim;
                        book = ZeroTileBook::random_windows(
                            ceil_div(parent.K, D), ceil_div(parent.N, spec.arch.effective_ratio(parent.mode) * D),
                            spec.arch.cores_per_legion, sim_sparsity, spec.sim.seed);
                    }
                    check_ztb_shape(book, parent, spec.arch);
                    spec.sim.ztbs[st] = std::move(book);
                }
            }
            if (sim_functional) {
                if (spec.arch.dataflow != Dataflow::Legion)
                    throw std::invalid_argument("--functional needs a Legion architecture");
                functional_check(spec, sim_rows ? sim_rows : 2 * spec.arch.core_dim, err);
            }
            SimReport report = run_arch(spec);
            RunManifest m;
            m.subcommand = "simulate";
            m.config_paths = {sim_arch, sim_model};
            if (!sim_ztb.empty()) m.config_paths.push_back(sim_ztb);
            m.seed = spec.sim.seed;
            if (!sim_out.empty()) m.output_paths = {sim_out};
            m.config_hash = manifest_hash(spec);
            report.manifest = m;
            const auto format = report_format_from_string(sim_format);
            write_output(sim_out, emit(report, format), out);
            if (!sim_ratio.empty()) {
                const auto path = locate(sim_ratio);
                if (!path) throw IoError("cannot open baseline report '" + sim_ratio + "'");
                std::ifstream in(*path);
                std::stringstream buf;
                buf << in.rdbuf();
                SimReport base;
                try {
                    base = parse_report(buf.str(), ReportFormat::Json);
                } catch (const std::exception& e) {
                    throw ShapeMismatch("baseline report '" + sim_ratio + "': " + e.what());
                }
                out << emit_ratio_table(base, report, format);
            }
            if (!spec.sim.ztbs.empty())
                err << "skipped windows: " << report.total.skipped_windows << '\n';
        } else if (cmp->parsed()) {
            const auto names = split_list(cmp_archs);
            if (names.empty()) throw CLI::ValidationError("--archs", "empty architecture list");
            const auto model = resolve_model(cmp_model);
            std::vector<RunSpec> runs;
            for (const auto& n : names) runs.push_back(cmp_flags.spec(resolve_arch(n), model));
            Comparison c = run_comparison(runs);
            c.reference = default_reference(runs);
            if (!cmp_ref.empty()) {
                const auto it = std::find(names.begin(), names.end(), cmp_ref);
                if (it == names.end()) throw std::invalid_argument("--reference must be one of --archs");
                c.reference = static_cast<std::size_t>(it - names.begin());
            }
            const auto format = report_format_from_string(cmp_format);
            const std::string table = comparison_table(c, format);
            if (cmp_out.empty()) {
                out << table;
            } else {
                const std::string ext = format == ReportFormat::Json ? ".json" : ".csv";
                write_file(fs::path(cmp_out) / ("compare" + ext), table);
                for (std::size_t i = 0; i < runs.size(); ++i) {
                    SimReport r = c.reports[i];
                    RunManifest m;
                    m.subcommand = "compare";
                    m.config_paths = {names[i], cmp_model};
                    m.seed = runs[i].sim.seed;
                    m.output_paths = {(fs::path(cmp_out) / (names[i] + ext)).string()};
                    m.config_hash = manifest_hash(runs[i]);
                    r.manifest = m;
                    write_file(m.output_paths.front(), emit(r, format));
                }
            }
        } else if (zg->parsed()) {
            const auto arch = resolve_arch(zg_arch);
            Count K = zg_k, N = zg_n;
            PrecisionMode mode = zg_mode.empty() ? PrecisionMode::Proj8x2 : precision_mode_from_string(zg_mode);
            if (!K || !N) {
                if (K || N) throw std::invalid_argument("--k and --n must be given together");
                const auto set = derive_attention_workloads(resolve_model(zg_model));
                const Stage st = stage_from_string(zg_stage);
                const auto it = std::find_if(set.specs.begin(), set.specs.end(),
                                             [&](const WorkloadSpec& s) { return s.stage == st; });
                K = it->K;
                N = it->N;
                mode = it->mode;
            }
            const Count D = arch.core_dim;
            const auto book = ZeroTileBook::random_windows(ceil_div(K, D), ceil_div(N, arch.effective_ratio(mode) * D),
                                                           arch.cores_per_legion, zg_rate, zg_seed);
            book.save(zg_out);
            out << "wrote " << zg_out << ": KT_raw=" << book.k_tiles_raw() << " NT=" << book.n_tiles()
                << " C=" << book.cores() << " windows=" << book.window_count()
                << " fully_sparse=" << book.fully_sparse_windows() << '\n';
        } else if (rp->parsed()) {
            const fs::path dir(rp_out);
            const auto models = {model_preset("bitnet-1.58b"), model_preset("bitnet-1.58b-kv")};
            for (const auto& m : models) {
                const auto set = derive_attention_workloads(m);
                write_file(dir / ("workloads_" + m.name + ".csv"), workloads_table(set, m, ReportFormat::Csv));
            }
            write_file(dir / "granularity.csv", granularity_table(ReportFormat::Csv));
            write_file(dir / "cri.csv", cri_table(cri(default_cri_candidates(), dse_corner_workloads()), ReportFormat::Csv));

            SimFlags defaults;
            const auto mha = model_preset("bitnet-1.58b");
            std::vector<RunSpec> single;
            for (const char* a : {"ws-64", "dip-64", "adip-64", "dlegion-8"})
                single.push_back(defaults.spec(arch_preset(a), mha));
            Comparison c = run_comparison(single);
            c.reference = 3;
            write_file(dir / "compare_bitnet-1.58b.csv", comparison_table(c, ReportFormat::Csv));

            for (const auto& m : models) {
                std::vector<RunSpec> tpu = {defaults.spec(arch_preset("tpuv4i"), m),
                                            defaults.spec(arch_preset("dlegion-32"), m)};
                Comparison t = run_comparison(tpu);
                t.reference = 1;
                write_file(dir / ("compare_tpuv4i_" + m.name + ".csv"), comparison_table(t, ReportFormat::Csv));
            }

            std::vector<RunSpec> scale;
            for (const char* a : {"dlegion-8", "dlegion-32", "dlegion-64"}) scale.push_back(defaults.spec(arch_preset(a), mha));
            const Comparison s = run_comparison(scale);
            std::map<std::string, SimReport> by_name;
            for (const auto& r : s.reports) by_name[r.arch] = r;
            write_file(dir / "scaling.csv", scaling_table(mha, by_name));

            nlohmann::ordered_json manifest = {{"subcommand", "repro"},
                                               {"tool_version", kToolVersion},
                                               {"seed", 0},
                                               {"outputs", nlohmann::ordered_json::array()}};
            for (const auto& e : fs::directory_iterator(dir))
                if (e.path().extension() == ".csv") manifest["outputs"].push_back(e.path().filename().string());
            std::sort(manifest["outputs"].begin(), manifest["outputs"].end());
            write_file(dir / "manifest.json", manifest.dump(2) + "\n");
            out << "wrote " << manifest["outputs"].size() << " tables to " << dir.string() << '\n';
        }
        return kOk;
    } catch (const FunctionalFailure& e) {
        err << e.what() << '\n';
        return kFunctionalFailure;
    } catch (const ShapeMismatch& e) {
        err << "error: " << e.what() << '\n';
        return kDataMismatch;
    } catch (const ConfigError& e) {
        err << "error: invalid configuration\n";
        for (const auto& d : e.diagnostics()) err << "  " << d << '\n';
        return kInputError;
    } catch (const CLI::Error& e) {
        err << "usage error: " << e.what() << '\n';
        return kInputError;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const PsumOverflow& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

}  // namespace dlegion::cli

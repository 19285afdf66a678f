#include "dlegion/report.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dlegion/errors.hpp"

namespace dlegion {

namespace {

void add_checked(std::uint64_t& into, std::int64_t v, const char* what) {
    if (v < 0) throw InconsistentEvents(std::string("negative ") + what + " in event log");
    if (__builtin_add_overflow(into, static_cast<std::uint64_t>(v), &into))
        throw InconsistentEvents(std::string(what) + " overflows 64 bits");
}

void add_checked(std::uint64_t& into, std::uint64_t v, const char* what) {
    if (__builtin_add_overflow(into, v, &into)) throw InconsistentEvents(std::string(what) + " overflows 64 bits");
}

void finish(StageMetrics& m, double frequency, std::uint64_t pes) {
    m.wall_time_s = static_cast<double>(m.cycles) / frequency;
    m.throughput_ops = m.cycles ? static_cast<double>(m.ops) / m.wall_time_s : 0.0;
    m.pe_active_fraction =
        m.cycles ? static_cast<double>(m.active_pe_cycles) / (static_cast<double>(pes) * static_cast<double>(m.cycles))
                 : 0.0;
}

}  // namespace

SimReport aggregate(std::span<const StageEvent> events, const ArchConfig& arch, std::string model_name) {
    SimReport r;
    r.arch = arch.name;
    r.model = std::move(model_name);
    r.frequency_hz = arch.frequency_hz;
    r.total_pes = arch.total_pes();
    for (Stage s : kAllStages) r.stages[s] = {};
    for (const auto& e : events) {
        auto& m = r.stages[e.stage];
        add_checked(m.cycles, e.cycles, "cycles");
        add_checked(m.ops, e.ops, "ops");
        add_checked(m.weight_bytes, e.weight_bytes, "weight bytes");
        add_checked(m.activation_bytes, e.activation_bytes, "activation bytes");
        add_checked(m.psum_bytes, e.psum_bytes, "psum bytes");
        add_checked(m.active_pe_cycles, e.active_pe_cycles, "active PE cycles");
        add_checked(m.skipped_windows, e.skipped_windows, "skipped windows");
        add_checked(m.deactivated_core_cycles, e.deactivated_core_cycles, "deactivated core cycles");
    }
    for (auto& [stage, m] : r.stages) {
        finish(m, r.frequency_hz, r.total_pes);
        add_checked(r.total.cycles, m.cycles, "cycles");
        add_checked(r.total.ops, m.ops, "ops");
        add_checked(r.total.weight_bytes, m.weight_bytes, "weight bytes");
        add_checked(r.total.activation_bytes, m.activation_bytes, "activation bytes");
        add_checked(r.total.psum_bytes, m.psum_bytes, "psum bytes");
        add_checked(r.total.active_pe_cycles, m.active_pe_cycles, "active PE cycles");
        add_checked(r.total.skipped_windows, m.skipped_windows, "skipped windows");
        add_checked(r.total.deactivated_core_cycles, m.deactivated_core_cycles, "deactivated core cycles");
    }
    finish(r.total, r.frequency_hz, r.total_pes);
    return r;
}

ReportFormat report_format_from_string(std::string_view text) {
    if (text == "json") return ReportFormat::Json;
    if (text == "csv") return ReportFormat::Csv;
    throw std::invalid_argument("unsupported report format '" + std::string(text) + "'");
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {
        "cycles",        "wall_time_s",      "ops",        "throughput_ops",     "weight_bytes",
        "activation_bytes", "psum_bytes",    "active_pe_cycles", "pe_active_fraction", "skipped_windows",
        "deactivated_core_cycles"};
    return names;
}

double metric_value(const StageMetrics& m, std::string_view name) {
    if (name == "cycles") return static_cast<double>(m.cycles);
    if (name == "wall_time_s") return m.wall_time_s;
    if (name == "ops") return static_cast<double>(m.ops);
    if (name == "throughput_ops") return m.throughput_ops;
    if (name == "weight_bytes") return static_cast<double>(m.weight_bytes);
    if (name == "activation_bytes") return static_cast<double>(m.activation_bytes);
    if (name == "psum_bytes") return static_cast<double>(m.psum_bytes);
    if (name == "active_pe_cycles") return static_cast<double>(m.active_pe_cycles);
    if (name == "pe_active_fraction") return m.pe_active_fraction;
    if (name == "skipped_windows") return static_cast<double>(m.skipped_windows);
    if (name == "deactivated_core_cycles") return static_cast<double>(m.deactivated_core_cycles);
    if (name == "memory_bytes") return static_cast<double>(m.memory_bytes());
    throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

namespace {

nlohmann::json metrics_json(const StageMetrics& m) {
    return nlohmann::ordered_json{{"cycles", m.cycles},
                                  {"wall_time_s", m.wall_time_s},
                                  {"ops", m.ops},
                                  {"throughput_ops", m.throughput_ops},
                                  {"weight_bytes", m.weight_bytes},
                                  {"activation_bytes", m.activation_bytes},
                                  {"psum_bytes", m.psum_bytes},
                                  {"active_pe_cycles", m.active_pe_cycles},
                                  {"pe_active_fraction", m.pe_active_fraction},
                                  {"skipped_windows", m.skipped_windows},
                                  {"deactivated_core_cycles", m.deactivated_core_cycles}};
}

StageMetrics metrics_from_json(const nlohmann::json& j) {
    StageMetrics m;
    m.cycles = j.at("cycles").get<std::uint64_t>();
    m.wall_time_s = j.at("wall_time_s").get<double>();
    m.ops = j.at("ops").get<std::uint64_t>();
    m.throughput_ops = j.at("throughput_ops").get<double>();
    m.weight_bytes = j.at("weight_bytes").get<std::uint64_t>();
    m.activation_bytes = j.at("activation_bytes").get<std::uint64_t>();
    m.psum_bytes = j.at("psum_bytes").get<std::uint64_t>();
    m.active_pe_cycles = j.at("active_pe_cycles").get<std::uint64_t>();
    m.pe_active_fraction = j.at("pe_active_fraction").get<double>();
    m.skipped_windows = j.at("skipped_windows").get<std::uint64_t>();
    m.deactivated_core_cycles = j.at("deactivated_core_cycles").get<std::uint64_t>();
    return m;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(std::string_view s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::invalid_argument("bad number '" + std::string(s) + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::invalid_argument("bad integer '" + std::string(s) + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string metric_cell(const StageMetrics& m, const std::string& name) {
    if (name == "wall_time_s") return format_double(m.wall_time_s);
    if (name == "throughput_ops") return format_double(m.throughput_ops);
    if (name == "pe_active_fraction") return format_double(m.pe_active_fraction);
    return std::to_string(static_cast<std::uint64_t>(metric_value(m, name)));
}

void set_metric(StageMetrics& m, const std::string& name, std::string_view cell) {
    if (name == "cycles") m.cycles = parse_u64(cell);
    else if (name == "wall_time_s") m.wall_time_s = parse_double(cell);
    else if (name == "ops") m.ops = parse_u64(cell);
    else if (name == "throughput_ops") m.throughput_ops = parse_double(cell);
    else if (name == "weight_bytes") m.weight_bytes = parse_u64(cell);
    else if (name == "activation_bytes") m.activation_bytes = parse_u64(cell);
    else if (name == "psum_bytes") m.psum_bytes = parse_u64(cell);
    else if (name == "active_pe_cycles") m.active_pe_cycles = parse_u64(cell);
    else if (name == "pe_active_fraction") m.pe_active_fraction = parse_double(cell);
    else if (name == "skipped_windows") m.skipped_windows = parse_u64(cell);
    else if (name == "deactivated_core_cycles") m.deactivated_core_cycles = parse_u64(cell);
    else throw std::invalid_argument("unknown metric column '" + name + "'");
}

}  // namespace

nlohmann::json to_json(const SimReport& r) {
    nlohmann::ordered_json doc;
    doc["arch"] = r.arch;
    doc["model"] = r.model;
    doc["frequency_hz"] = r.frequency_hz;
    doc["total_pes"] = r.total_pes;
    nlohmann::ordered_json stages = nlohmann::ordered_json::object();
    for (Stage s : kAllStages) stages[std::string(to_string(s))] = metrics_json(r.stages.at(s));
    doc["stages"] = stages;
    doc["total"] = metrics_json(r.total);
    if (r.manifest) {
        const auto& m = *r.manifest;
        doc["manifest"] = nlohmann::ordered_json{{"subcommand", m.subcommand},
                                                 {"config_paths", m.config_paths},
                                                 {"seed", m.seed},
                                                 {"output_paths", m.output_paths},
                                                 {"tool_version", m.tool_version},
                                                 {"config_hash", m.config_hash}};
    }
    return nlohmann::json::parse(doc.dump());
}

SimReport report_from_json(const nlohmann::json& doc) {
    SimReport r;
    r.arch = doc.at("arch").get<std::string>();
    r.model = doc.at("model").get<std::string>();
    r.frequency_hz = doc.at("frequency_hz").get<double>();
    r.total_pes = doc.at("total_pes").get<std::uint64_t>();
    for (Stage s : kAllStages) r.stages[s] = metrics_from_json(doc.at("stages").at(std::string(to_string(s))));
    r.total = metrics_from_json(doc.at("total"));
    if (doc.contains("manifest")) {
        const auto& j = doc.at("manifest");
        RunManifest m;
        m.subcommand = j.at("subcommand").get<std::string>();
        m.config_paths = j.at("config_paths").get<std::vector<std::string>>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.output_paths = j.at("output_paths").get<std::vector<std::string>>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        r.manifest = m;
    }
    return r;
}

std::string emit(const SimReport& r, ReportFormat format) {
    if (format == ReportFormat::Json) {
        // Re-order keys as written by to_json (nlohmann::json sorts them).
        nlohmann::ordered_json doc;
        doc["arch"] = r.arch;
        doc["model"] = r.model;
        doc["frequency_hz"] = r.frequency_hz;
        doc["total_pes"] = r.total_pes;
        nlohmann::ordered_json stages = nlohmann::ordered_json::object();
        for (Stage s : kAllStages) stages[std::string(to_string(s))] = metrics_json(r.stages.at(s));
        doc["stages"] = stages;
        doc["total"] = metrics_json(r.total);
        if (r.manifest) doc["manifest"] = to_json(r).at("manifest");
        return doc.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "# arch=" << r.arch << "\n# model=" << r.model << "\n# frequency_hz=" << format_double(r.frequency_hz)
        << "\n# total_pes=" << r.total_pes << "\n";
    if (r.manifest) out << "# manifest=" << to_json(r).at("manifest").dump() << "\n";
    out << "stage";
    for (const auto& name : metric_names()) out << ',' << name;
    out << '\n';
    auto row = [&](std::string_view label, const StageMetrics& m) {
        out << label;
        for (const auto& name : metric_names()) out << ',' << metric_cell(m, name);
        out << '\n';
    };
    for (Stage s : kAllStages) row(to_string(s), r.stages.at(s));
    row("Total", r.total);
    return out.str();
}

SimReport parse_report(const std::string& text, ReportFormat format) {
    if (format == ReportFormat::Json) return report_from_json(nlohmann::json::parse(text));

    SimReport r;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(2, eq - 2);
            const std::string value = line.substr(eq + 1);
            if (key == "arch") r.arch = value;
            else if (key == "model") r.model = value;
            else if (key == "frequency_hz") r.frequency_hz = parse_double(value);
            else if (key == "total_pes") r.total_pes = parse_u64(value);
            else if (key == "manifest") {
                const auto j = nlohmann::json::parse(value);
                RunManifest m;
                m.subcommand = j.at("subcommand").get<std::string>();
                m.config_paths = j.at("config_paths").get<std::vector<std::string>>();
                m.seed = j.at("seed").get<std::uint64_t>();
                m.output_paths = j.at("output_paths").get<std::vector<std::string>>();
                m.tool_version = j.at("tool_version").get<std::string>();
                m.config_hash = j.at("config_hash").get<std::string>();
                r.manifest = m;
            }
            continue;
        }
        auto cells = split(line, ',');
        if (header.empty()) {
            header = std::move(cells);
            continue;
        }
        if (cells.size() != header.size()) throw std::invalid_argument("CSV row has wrong number of cells");
        StageMetrics m;
        for (std::size_t i = 1; i < cells.size(); ++i) set_metric(m, header[i], cells[i]);
        if (cells[0] == "Total") r.total = m;
        else r.stages[stage_from_string(cells[0])] = m;
    }
    for (Stage s : kAllStages)
        if (!r.stages.count(s)) throw std::invalid_argument("CSV is missing stage " + std::string(to_string(s)));
    return r;
}

std::vector<RatioRow> ratio_table(const SimReport& num, const SimReport& den) {
    std::vector<RatioRow> rows;
    auto ratio_row = [](std::string label, const StageMetrics& a, const StageMetrics& b) {
        RatioRow row{std::move(label), {}};
        for (const auto& name : metric_names()) {
            const double x = metric_value(a, name);
            const double y = metric_value(b, name);
            row.ratios.push_back(y != 0 ? x / y : std::numeric_limits<double>::quiet_NaN());
        }
        const double mx = metric_value(a, "memory_bytes");
        const double my = metric_value(b, "memory_bytes");
        row.ratios.push_back(my != 0 ? mx / my : std::numeric_limits<double>::quiet_NaN());
        return row;
    };
    for (Stage s : kAllStages) rows.push_back(ratio_row(std::string(to_string(s)), num.stages.at(s), den.stages.at(s)));
    rows.push_back(ratio_row("Total", num.total, den.total));
    return rows;
}

std::string emit_ratio_table(const SimReport& num, const SimReport& den, ReportFormat format) {
    const auto rows = ratio_table(num, den);
    std::vector<std::string> names = metric_names();
    names.emplace_back("memory_bytes");
    if (format == ReportFormat::Json) {
        nlohmann::ordered_json doc;
        doc["numerator"] = num.arch;
        doc["denominator"] = den.arch;
        nlohmann::ordered_json table = nlohmann::ordered_json::object();
        for (const auto& row : rows) {
            nlohmann::ordered_json cols = nlohmann::ordered_json::object();
            for (std::size_t i = 0; i < names.size(); ++i)
                cols[names[i] + "_ratio"] = std::isnan(row.ratios[i]) ? nlohmann::ordered_json(nullptr)
                                                                      : nlohmann::ordered_json(row.ratios[i]);
            table[row.row] = cols;
        }
        doc["ratios"] = table;
        return doc.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "# numerator=" << num.arch << "\n# denominator=" << den.arch << "\nstage";
    for (const auto& n : names) out << ',' << n << "_ratio";
    out << '\n';
    for (const auto& row : rows) {
        out << row.row;
        for (double v : row.ratios) out << ',' << (std::isnan(v) ? std::string("nan") : format_double(v));
        out << '\n';
    }
    return out.str();
}

}  // namespace dlegion

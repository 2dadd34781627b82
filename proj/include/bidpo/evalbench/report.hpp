#pragma once

#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bidpo/datapipe/dataset_io.hpp"
#include "bidpo/evalbench/ablation.hpp"

namespace bidpo {

enum class ReportFormat { csv, json, markdown };

inline std::string to_string(ReportFormat f) {
    switch (f) {
        case ReportFormat::csv: return "csv";
        case ReportFormat::json: return "json";
        case ReportFormat::markdown: return "markdown";
    }
    return "?";
}

inline ReportFormat parse_report_format(const std::string& s) {
    for (auto f : {ReportFormat::csv, ReportFormat::json, ReportFormat::markdown})
        if (to_string(f) == s) return f;
    if (s == "md") return ReportFormat::markdown;
    throw InvalidRange("unknown report format '" + s + "'");
}

inline constexpr int kReportVersion = 1;

inline json to_json(const Scorecard& c) {
    json dims = json::object();
    for (Dimension d : kAllDimensions) {
        auto i = static_cast<std::size_t>(d);
        json e = {{"prompts", c.prompts[i]}, {"samples", c.samples[i]}, {"passes", c.passes[i]}};
        auto a = c.accuracy(d);
        e["accuracy"] = a ? json(*a) : json(nullptr);
        dims[to_string(d)] = e;
    }
    auto am = c.attribute_mean();
    return {{"dimensions", dims},
            {"valid", c.valid},
            {"validity", c.validity()},
            {"attribute_mean", am ? json(*am) : json(nullptr)},
            {"sample_count", c.sample_count},
            {"samples_per_prompt", c.samples_per_prompt},
            {"seed", c.seed}};
}

// derived fields (accuracy, validity, attribute_mean) are recomputed, not read
inline Scorecard scorecard_from_json(const json& j) {
    Scorecard c;
    for (Dimension d : kAllDimensions) {
        const auto& e = j.at("dimensions").at(to_string(d));
        auto i = static_cast<std::size_t>(d);
        c.prompts[i] = e.at("prompts").get<int>();
        c.samples[i] = e.at("samples").get<int>();
        c.passes[i] = e.at("passes").get<int>();
    }
    c.valid = j.at("valid").get<int>();
    c.sample_count = j.at("sample_count").get<int>();
    c.samples_per_prompt = j.at("samples_per_prompt").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

inline json to_json(const AblationReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"method", row.method},
                        {"ok", row.ok},
                        {"error", row.error},
                        {"params_checksum", row.params_checksum},
                        {"scorecard", to_json(row.card)}});
    json prompts = json::array();
    for (const auto& p : r.prompts) prompts.push_back({{"text", to_text(p)}, {"caption", to_json(p)}});
    return {{"format", "bidpo-ablation-report"},
            {"version", kReportVersion},
            {"eval_seed", r.eval_seed},
            {"samples_per_prompt", r.samples_per_prompt},
            {"base_checksum", r.base_checksum},
            {"prompts", prompts},
            {"rows", rows}};
}

inline AblationReport report_from_json(const json& j) {
    AblationReport r;
    try {
        if (j.at("format") != "bidpo-ablation-report")
            throw FormatError(FormatError::Kind::malformed_record, "report: not an ablation report");
        if (j.at("version").get<int>() != kReportVersion)
            throw FormatError(FormatError::Kind::version_mismatch, "report: unsupported version");
        r.eval_seed = j.at("eval_seed").get<std::uint64_t>();
        r.samples_per_prompt = j.at("samples_per_prompt").get<int>();
        r.base_checksum = j.at("base_checksum").get<std::uint32_t>();
        for (const auto& p : j.at("prompts")) r.prompts.push_back(caption_from_json(p.at("caption")));
        for (const auto& e : j.at("rows")) {
            AblationRow row;
            row.method = e.at("method").get<std::string>();
            row.ok = e.at("ok").get<bool>();
            row.error = e.at("error").get<std::string>();
            row.params_checksum = e.at("params_checksum").get<std::uint32_t>();
            row.card = scorecard_from_json(e.at("scorecard"));
            r.rows.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw FormatError(FormatError::Kind::malformed_record, std::string("report: ") + e.what());
    }
    return r;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Splits CSV text into records. Quoted fields may hold commas, doubled
/// quotes and newlines. Lines starting with '#' outside a record come back as
/// a single field holding the whole line, flagged as comments.
struct CsvRecord {
    int line = 0;
    bool comment = false;
    std::vector<std::string> fields;
};

inline std::vector<CsvRecord> csv_records(const std::string& text) {
    std::vector<CsvRecord> out;
    int line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        CsvRecord rec;
        rec.line = line;
        if (text[i] == '\n') {
            ++i, ++line;
            continue;
        }
        if (text[i] == '#') {
            auto end = text.find('\n', i);
            if (end == std::string::npos) end = text.size();
            rec.comment = true;
            rec.fields.push_back(text.substr(i, end - i));
            out.push_back(std::move(rec));
            i = end + 1, ++line;
            continue;
        }
        rec.fields.emplace_back();
        bool quoted = false;
        for (; i < text.size(); ++i) {
            char c = text[i];
            if (quoted) {
                if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') rec.fields.back() += '"', ++i;
                else if (c == '"') quoted = false;
                else {
                    if (c == '\n') ++line;
                    rec.fields.back() += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                rec.fields.emplace_back();
            } else if (c == '\n') {
                ++i, ++line;
                break;
            } else if (c != '\r') {
                rec.fields.back() += c;
            }
        }
        if (quoted) throw FormatError(FormatError::Kind::malformed_record,
                                      "report csv line " + std::to_string(rec.line) + ": unterminated quote");
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

inline std::vector<std::string> csv_header() {
    std::vector<std::string> h{"method", "ok", "error", "params_checksum", "seed", "samples_per_prompt",
                               "sample_count", "valid"};
    for (Dimension d : kAllDimensions)
        for (const char* f : {"prompts", "samples", "passes"}) h.push_back(to_string(d) + "_" + f);
    for (Dimension d : kAllDimensions) h.push_back(to_string(d) + "_accuracy");
    h.push_back("attribute_mean");
    h.push_back("validity");
    return h;
}

}  // namespace detail

/// CSV with one row per method. Report-level fields and the prompt set ride
/// in leading `#` comment lines so the file reads back to an equal report;
/// the accuracy columns are derived from the counts.
inline std::string report_csv(const AblationReport& r) {
    std::ostringstream os;
    os << "# format=bidpo-ablation-report version=" << kReportVersion << "\n";
    os << "# eval_seed=" << r.eval_seed << "\n";
    os << "# samples_per_prompt=" << r.samples_per_prompt << "\n";
    os << "# base_checksum=" << r.base_checksum << "\n";
    for (const auto& p : r.prompts) os << "# prompt=" << to_json(p).dump() << "\n";
    auto header = detail::csv_header();
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : r.rows) {
        const Scorecard& c = row.card;
        std::vector<std::string> f{detail::csv_field(row.method), row.ok ? "1" : "0", detail::csv_field(row.error),
                                   std::to_string(row.params_checksum), std::to_string(c.seed),
                                   std::to_string(c.samples_per_prompt), std::to_string(c.sample_count),
                                   std::to_string(c.valid)};
        for (Dimension d : kAllDimensions) {
            auto i = static_cast<std::size_t>(d);
            f.push_back(std::to_string(c.prompts[i]));
            f.push_back(std::to_string(c.samples[i]));
            f.push_back(std::to_string(c.passes[i]));
        }
        for (Dimension d : kAllDimensions) {
            auto a = c.accuracy(d);
            f.push_back(a ? detail::fixed(*a) : "");
        }
        auto am = c.attribute_mean();
        f.push_back(am ? detail::fixed(*am) : "");
        f.push_back(detail::fixed(c.validity()));
        for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
        os << "\n";
    }
    return os.str();
}

inline AblationReport parse_report_csv(const std::string& text) {
    AblationReport r;
    bool have_header = false;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw FormatError(FormatError::Kind::malformed_record,
                          "report csv line " + std::to_string(lineno) + ": " + what);
    };
    const auto header = detail::csv_header();
    try {
        for (const auto& rec : detail::csv_records(text)) {
            lineno = rec.line;
            if (rec.comment) {
                const std::string& line = rec.fields.front();
                auto eq = line.find('=');
                if (eq == std::string::npos || line.size() < 2) continue;
                std::string key = line.substr(2, eq - 2), val = line.substr(eq + 1);
                if (key == "format") {
                    if (val != "bidpo-ablation-report version=" + std::to_string(kReportVersion))
                        throw FormatError(FormatError::Kind::version_mismatch, "report csv: unsupported format " + val);
                } else if (key == "eval_seed") {
                    r.eval_seed = std::stoull(val);
                } else if (key == "samples_per_prompt") {
                    r.samples_per_prompt = std::stoi(val);
                } else if (key == "base_checksum") {
                    r.base_checksum = static_cast<std::uint32_t>(std::stoul(val));
                } else if (key == "prompt") {
                    r.prompts.push_back(caption_from_json(json::parse(val)));
                }
                continue;
            }
            const auto& f = rec.fields;
            if (!have_header) {
                if (f != header) fail("unexpected header");
                have_header = true;
                continue;
            }
            if (f.size() != header.size()) fail("wrong field count");
            AblationRow row;
            std::size_t k = 0;
            row.method = f[k++];
            row.ok = f[k++] == "1";
            row.error = f[k++];
            row.params_checksum = static_cast<std::uint32_t>(std::stoul(f[k++]));
            row.card.seed = std::stoull(f[k++]);
            row.card.samples_per_prompt = std::stoi(f[k++]);
            row.card.sample_count = std::stoi(f[k++]);
            row.card.valid = std::stoi(f[k++]);
            for (Dimension d : kAllDimensions) {
                auto i = static_cast<std::size_t>(d);
                row.card.prompts[i] = std::stoi(f[k++]);
                row.card.samples[i] = std::stoi(f[k++]);
                row.card.passes[i] = std::stoi(f[k++]);
            }
            r.rows.push_back(std::move(row));
        }
    } catch (const std::logic_error&) {
        fail("bad number");
    } catch (const json::exception& e) {
        fail(e.what());
    }
    if (!have_header) throw FormatError(FormatError::Kind::malformed_record, "report csv: missing header");
    return r;
}

/// Methods down, benchmark dimensions across, as percentages.
inline std::string report_markdown(const AblationReport& r) {
    std::ostringstream os;
    os << "| Method |";
    for (Dimension d : kAllDimensions) os << " " << to_string(d) << " |";
    os << " attribute mean | validity |\n|---|";
    for (std::size_t i = 0; i < kAllDimensions.size(); ++i) os << "---:|";
    os << "---:|---:|\n";
    auto pct = [](std::optional<double> v) { return v ? detail::fixed(100.0 * *v, 2) : std::string("n/a"); };
    for (const auto& row : r.rows) {
        os << "| " << row.method << " |";
        if (!row.ok) {
            for (std::size_t i = 0; i < kAllDimensions.size() + 2; ++i) os << " failed |";
            os << "\n";
            continue;
        }
        for (Dimension d : kAllDimensions) os << " " << pct(row.card.accuracy(d)) << " |";
        os << " " << pct(row.card.attribute_mean()) << " | " << pct(row.card.validity()) << " |\n";
    }
    return os.str();
}

inline std::string render_report(const AblationReport& r, ReportFormat f) {
    switch (f) {
        case ReportFormat::csv: return report_csv(r);
        case ReportFormat::json: return to_json(r).dump(2) + "\n";
        case ReportFormat::markdown: return report_markdown(r);
    }
    return {};
}

inline void emit_report(const AblationReport& r, ReportFormat f, const std::filesystem::path& path) {
    atomic_write(path, render_report(r, f));
}

inline AblationReport read_report(const std::filesystem::path& path) {
    std::string text = read_file(path);
    if (path.extension() == ".csv") return parse_report_csv(text);
    try {
        return report_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
        throw FormatError(FormatError::Kind::malformed_record, std::string("report: ") + e.what());
    }
}

}  // namespace bidpo

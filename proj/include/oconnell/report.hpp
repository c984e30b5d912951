#pragma once

#include "oconnell/numkit.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace oconnell {

struct ReportRow {
    std::string method;
    std::size_t N = 0;
    double a = 0, t = 0, h = 0;
    double value = 0, error = 0;
    std::string warnings;
    std::uint64_t seed = 0;
    double wall_time_ms = 0;
};

inline constexpr const char* kCsvHeader = "method,N,a,t,h,value,error,warnings,seed,wall_time_ms";

enum class ReportFormat { csv, json };

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

}  // namespace detail

inline nlohmann::ordered_json row_to_json(const ReportRow& r) {
    nlohmann::ordered_json j;
    j["method"] = r.method;
    j["N"] = r.N;
    j["a"] = r.a;
    j["t"] = r.t;
    j["h"] = r.h;
    j["value"] = r.value;
    j["error"] = r.error;
    j["warnings"] = r.warnings;
    j["seed"] = r.seed;
    j["wall_time_ms"] = r.wall_time_ms;
    return j;
}

inline ReportRow row_from_json(const nlohmann::ordered_json& j) {
    ReportRow r;
    r.method = j.at("method").get<std::string>();
    r.N = j.at("N").get<std::size_t>();
    r.a = j.at("a").get<double>();
    r.t = j.at("t").get<double>();
    r.h = j.at("h").get<double>();
    r.value = j.at("value").get<double>();
    r.error = j.at("error").get<double>();
    r.warnings = j.at("warnings").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.wall_time_ms = j.at("wall_time_ms").get<double>();
    return r;
}

inline std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat fmt) {
    if (rows.empty()) throw Error(Errc::EmptyReport, "report has no rows");
    std::ostringstream os;
    if (fmt == ReportFormat::csv) {
        os << kCsvHeader << '\n';
        for (const auto& r : rows)
            os << detail::csv_field(r.method) << ',' << r.N << ',' << detail::fmt17(r.a) << ',' << detail::fmt17(r.t)
               << ',' << detail::fmt17(r.h) << ',' << detail::fmt17(r.value) << ',' << detail::fmt17(r.error) << ','
               << detail::csv_field(r.warnings) << ',' << r.seed << ',' << detail::fmt17(r.wall_time_ms) << '\n';
    } else {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : rows) arr.push_back(row_to_json(r));
        os << arr.dump(2) << '\n';
    }
    return os.str();
}

inline std::vector<ReportRow> parse_json_report(const std::string& text) {
    auto arr = nlohmann::ordered_json::parse(text);
    std::vector<ReportRow> rows;
    for (const auto& j : arr) rows.push_back(row_from_json(j));
    return rows;
}

inline void write_report(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::IoError, "cannot open " + path);
    f << body;
    if (!f) throw Error(Errc::IoError, "write failed for " + path);
}

}  // namespace oconnell

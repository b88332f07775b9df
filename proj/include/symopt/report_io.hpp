#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "symopt/error.hpp"
#include "symopt/families.hpp"
#include "symopt/fmt.hpp"
#include "symopt/optics.hpp"
#include "symopt/verify.hpp"

namespace symopt {

enum class ReportFormat { kText, kCsv, kStructured };

inline ReportFormat parse_format(const std::string& s) {
    if (s == "text") return ReportFormat::kText;
    if (s == "csv") return ReportFormat::kCsv;
    if (s == "structured") return ReportFormat::kStructured;
    throw Error("unknown format '" + s + "' (expected text, csv or structured)");
}

inline std::string_view to_string(PartialMode m) {
    return m == PartialMode::kAnalytic ? "analytic"
         : m == PartialMode::kFiniteDifference ? "fd"
                                               : "auto";
}

// ---------------------------------------------------------------------------
// CheckReport

namespace detail {

// Structured emission is byte-canonical: fixed key order, 17-digit
// floats, "sub" always present. Timing never appears in any format.
inline void check_report_json(const CheckReport& r, std::string& out) {
    out += "{\"check\":\"" + json_escape(r.check) + "\"";
    out += ",\"seed\":" + std::to_string(r.seed);
    out += ",\"samples\":" + std::to_string(r.samples);
    out += ",\"tolerance\":" + float17(r.tolerance);
    out += ",\"max_residual\":" + float17(r.max_residual);
    out += ",\"location\":\"" + json_escape(r.location) + "\"";
    out += std::string(",\"pass\":") + (r.pass ? "true" : "false");
    out += ",\"sub\":[";
    for (std::size_t i = 0; i < r.sub.size(); ++i) {
        if (i) out += ",";
        check_report_json(r.sub[i], out);
    }
    out += "]}";
}

inline void check_report_text(const CheckReport& r, std::string& out, int depth) {
    out.append(static_cast<std::size_t>(2 * depth), ' ');
    out += r.pass ? "[PASS] " : "[FAIL] ";
    out += r.check + ": max residual " + float_short(r.max_residual) +
           (r.pass ? " <= " : " > ") + "tol " + float_short(r.tolerance) + " (samples " +
           std::to_string(r.samples) + ", seed " + std::to_string(r.seed);
    if (!r.location.empty()) out += ", at " + r.location;
    out += ")\n";
    for (const CheckReport& s : r.sub) check_report_text(s, out, depth + 1);
}

inline void check_report_csv(const CheckReport& r, std::string& out,
                             const std::string& prefix) {
    std::string name = prefix.empty() ? r.check : prefix + "/" + r.check;
    out += "\"" + name + "\"," + std::to_string(r.samples) + "," + float17(r.max_residual) +
           ",\"" + r.location + "\"," + float17(r.tolerance) + "," +
           (r.pass ? "true" : "false") + "," + std::to_string(r.seed) + "\n";
    for (const CheckReport& s : r.sub) check_report_csv(s, out, name);
}

inline CheckReport check_report_from_json(const nlohmann::json& j) {
    CheckReport r;
    r.check = j.at("check").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.samples = j.at("samples").get<long>();
    r.tolerance = j.at("tolerance").get<double>();
    r.max_residual = j.at("max_residual").get<double>();
    r.location = j.at("location").get<std::string>();
    r.pass = j.at("pass").get<bool>();
    for (const nlohmann::json& s : j.at("sub")) r.sub.push_back(check_report_from_json(s));
    return r;
}

} // namespace detail

inline std::string emit_report(const CheckReport& report, ReportFormat format) {
    std::string out;
    switch (format) {
        case ReportFormat::kText:
            detail::check_report_text(report, out, 0);
            break;
        case ReportFormat::kCsv:
            out = "check,samples,max_residual,location,tolerance,pass,seed\n";
            detail::check_report_csv(report, out, "");
            break;
        case ReportFormat::kStructured:
            detail::check_report_json(report, out);
            out += "\n";
            break;
    }
    return out;
}

inline CheckReport parse_check_report(const std::string& text) {
    try {
        return detail::check_report_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("parse_check_report: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// NormalityReport

inline std::string emit_report(const NormalityReport& r, ReportFormat format) {
    std::string out;
    switch (format) {
        case ReportFormat::kText: {
            out += r.pass ? "[PASS] " : "[FAIL] ";
            out += "normality " + r.family + ": max |coefficient| " +
                   float_short(r.max_abs_coefficient) + (r.pass ? " <= " : " > ") + "tol " +
                   float_short(r.tolerance) + " at (k1=" + float_short(r.max_k1) +
                   ", k2=" + float_short(r.max_k2) + "), grid " + std::to_string(r.n1) + "x" +
                   std::to_string(r.n2) + ", " + std::string(to_string(r.mode)) + " partials, ";
            if (r.rank_ok) {
                out += "rank 2 everywhere (min sigma2 " + float_short(r.min_sigma2) + ")\n";
            } else {
                out += "RANK DEFICIENT at grid (" + std::to_string(r.rank_fail_i) + "," +
                       std::to_string(r.rank_fail_j) + ")\n";
            }
            break;
        }
        case ReportFormat::kCsv: {
            out = "i,j,k1,k2,coefficient\n";
            for (int i = 0; i < r.n1; ++i)
                for (int j = 0; j < r.n2; ++j)
                    out += std::to_string(i) + "," + std::to_string(j) + "," +
                           float17(r.node_k1[i]) + "," + float17(r.node_k2[j]) + "," +
                           float17(r.coefficients[static_cast<std::size_t>(i) * r.n2 + j]) +
                           "\n";
            break;
        }
        case ReportFormat::kStructured: {
            out += "{\"check\":\"normality\"";
            out += ",\"family\":\"" + json_escape(r.family) + "\"";
            out += ",\"grid\":[" + std::to_string(r.n1) + "," + std::to_string(r.n2) + "]";
            out += ",\"mode\":\"" + std::string(to_string(r.mode)) + "\"";
            out += ",\"tolerance\":" + float17(r.tolerance);
            out += ",\"max\":{\"value\":" + float17(r.max_abs_coefficient) +
                   ",\"i\":" + std::to_string(r.max_i) + ",\"j\":" + std::to_string(r.max_j) +
                   ",\"k1\":" + float17(r.max_k1) + ",\"k2\":" + float17(r.max_k2) + "}";
            out += ",\"rank\":{\"ok\":" + std::string(r.rank_ok ? "true" : "false") +
                   ",\"i\":" + std::to_string(r.rank_fail_i) +
                   ",\"j\":" + std::to_string(r.rank_fail_j) +
                   ",\"min_sigma2\":" + float17(r.min_sigma2) + "}";
            out += std::string(",\"pass\":") + (r.pass ? "true" : "false");
            auto arr = [&out](const char* key, const std::vector<double>& v) {
                out += std::string(",\"") + key + "\":[";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ",";
                    out += float17(v[i]);
                }
                out += "]";
            };
            arr("node_k1", r.node_k1);
            arr("node_k2", r.node_k2);
            arr("coefficients", r.coefficients);
            out += "}\n";
            break;
        }
    }
    return out;
}

inline NormalityReport parse_normality_report(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        NormalityReport r;
        r.family = j.at("family").get<std::string>();
        r.n1 = j.at("grid").at(0).get<int>();
        r.n2 = j.at("grid").at(1).get<int>();
        std::string mode = j.at("mode").get<std::string>();
        r.mode = mode == "analytic" ? PartialMode::kAnalytic : PartialMode::kFiniteDifference;
        r.tolerance = j.at("tolerance").get<double>();
        r.max_abs_coefficient = j.at("max").at("value").get<double>();
        r.max_i = j.at("max").at("i").get<int>();
        r.max_j = j.at("max").at("j").get<int>();
        r.max_k1 = j.at("max").at("k1").get<double>();
        r.max_k2 = j.at("max").at("k2").get<double>();
        r.rank_ok = j.at("rank").at("ok").get<bool>();
        r.rank_fail_i = j.at("rank").at("i").get<int>();
        r.rank_fail_j = j.at("rank").at("j").get<int>();
        r.min_sigma2 = j.at("rank").at("min_sigma2").get<double>();
        r.pass = j.at("pass").get<bool>();
        r.node_k1 = j.at("node_k1").get<std::vector<double>>();
        r.node_k2 = j.at("node_k2").get<std::vector<double>>();
        r.coefficients = j.at("coefficients").get<std::vector<double>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("parse_normality_report: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Wavefront samples and trace results (data tables: CSV is the natural
// payload and doubles as the text form; structured is a JSON array)

inline std::string emit_wavefront(const std::vector<WavefrontSample>& samples,
                                  ReportFormat format) {
    std::string out;
    if (format == ReportFormat::kStructured) {
        out += "[";
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const WavefrontSample& s = samples[i];
            if (i) out += ",";
            out += "{\"k1\":" + float17(s.k1) + ",\"k2\":" + float17(s.k2) +
                   ",\"lambda\":" + float17(s.lambda) + ",\"w\":[" + float17(s.W.x) + "," +
                   float17(s.W.y) + "," + float17(s.W.z) + "]}";
        }
        out += "]\n";
        return out;
    }
    out = "k1,k2,lambda,wx,wy,wz\n";
    for (const WavefrontSample& s : samples)
        out += float17(s.k1) + "," + float17(s.k2) + "," + float17(s.lambda) + "," +
               float17(s.W.x) + "," + float17(s.W.y) + "," + float17(s.W.z) + "\n";
    return out;
}

/// Rows of per-ray trace output; one row per ray, hit points and
/// segment lengths flattened, so the column set depends only on the
/// number of interfaces in the system.
inline std::string emit_traces(const std::vector<TraceResult>& traces,
                               std::size_t n_interfaces, ReportFormat format) {
    std::string out;
    if (format == ReportFormat::kStructured) {
        out += "[";
        for (std::size_t r = 0; r < traces.size(); ++r) {
            const TraceResult& t = traces[r];
            if (r) out += ",";
            out += "{\"ray\":" + std::to_string(r) + ",\"hits\":[";
            for (std::size_t i = 0; i < t.hits.size(); ++i) {
                if (i) out += ",";
                out += "[" + float17(t.hits[i].x) + "," + float17(t.hits[i].y) + "," +
                       float17(t.hits[i].z) + "]";
            }
            out += "],\"segment_lengths\":[";
            for (std::size_t i = 0; i < t.segment_lengths.size(); ++i) {
                if (i) out += ",";
                out += float17(t.segment_lengths[i]);
            }
            const Vec3& u = t.line.direction().vec();
            const Point3& q = t.line.foot();
            out += "],\"final_direction\":[" + float17(u.x) + "," + float17(u.y) + "," +
                   float17(u.z) + "]";
            out += ",\"final_foot\":[" + float17(q.x) + "," + float17(q.y) + "," +
                   float17(q.z) + "]";
            out += ",\"optical_path_length\":" + float17(t.optical_path_length) + "}";
        }
        out += "]\n";
        return out;
    }
    out = "ray";
    for (std::size_t i = 0; i < n_interfaces; ++i) {
        std::string n = std::to_string(i);
        out += ",hit" + n + "_x,hit" + n + "_y,hit" + n + "_z,seg" + n + "_len";
    }
    out += ",final_ux,final_uy,final_uz,final_qx,final_qy,final_qz,optical_path_length\n";
    for (std::size_t r = 0; r < traces.size(); ++r) {
        const TraceResult& t = traces[r];
        out += std::to_string(r);
        for (std::size_t i = 0; i < n_interfaces; ++i) {
            out += "," + float17(t.hits[i].x) + "," + float17(t.hits[i].y) + "," +
                   float17(t.hits[i].z) + "," + float17(t.segment_lengths[i]);
        }
        const Vec3& u = t.line.direction().vec();
        const Point3& q = t.line.foot();
        out += "," + float17(u.x) + "," + float17(u.y) + "," + float17(u.z);
        out += "," + float17(q.x) + "," + float17(q.y) + "," + float17(q.z);
        out += "," + float17(t.optical_path_length) + "\n";
    }
    return out;
}

} // namespace symopt

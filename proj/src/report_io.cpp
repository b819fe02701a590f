#include "sirlab/report_io.hpp"

#include "sirlab/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace sirlab {

using nlohmann::json;

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

void append_state_rows(std::string& out, double t, const PatchState& x, const std::string& suffix) {
    const std::string ts = format_number(t);
    for (std::size_t k = 0; k < x.s.size(); ++k) {
        out += ts;
        out += ',';
        out += std::to_string(k);
        out += ',';
        out += format_number(x.s[k]);
        out += ',';
        out += format_number(x.i[k]);
        out += ',';
        out += format_number(x.r[k]);
        out += suffix;
        out += '\n';
    }
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string finish(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,site_index,s,i,r\n";
    for (std::size_t k = 0; k < traj.size(); ++k) append_state_rows(out, traj.times[k], traj.states[k], "");
    return out;
}

std::string ssa_csv(const SimOutput& out, int replica_id) {
    std::string text = "t,site_index,s,i,r,replica_id,event_count\n";
    for (std::size_t k = 0; k < out.times.size(); ++k) {
        const std::string suffix =
            "," + std::to_string(replica_id) + "," + std::to_string(k < out.events_at.size() ? out.events_at[k] : 0);
        append_state_rows(text, out.times[k], out.states[k], suffix);
    }
    return text;
}

std::string study_csv(const DiscretizationStudy& study) {
    std::string out = "eps,sup_error_S,sup_error_I,sup_error_R,sup_error_total\n";
    for (const auto& row : study.rows)
        out += format_number(row.eps) + "," + format_number(row.sup_error_S) + "," + format_number(row.sup_error_I) +
               "," + format_number(row.sup_error_R) + "," + format_number(row.sup_error_total) + "\n";
    return out;
}

std::string report_csv(const ExperimentReport& report) {
    std::string out = "inv_eps,eps,N,replicas,mean_error,stderr_error\n";
    for (const auto& row : report.rows)
        out += std::to_string(row.inv_eps) + "," + format_number(row.eps) + "," + std::to_string(row.N) + "," +
               std::to_string(row.replicas) + "," + format_number(row.mean_error) + "," +
               format_number(row.stderr_error) + "\n";
    return out;
}

std::string mean_checks_csv(const ExperimentReport& report) {
    std::string out = "N,t,compartment,mean,stderr_mean,within_3_stderr\n";
    for (const auto& c : report.mean_checks)
        out += std::to_string(c.N) + "," + format_number(c.t) + "," + std::string(1, "SIR"[c.compartment]) + "," +
               format_number(c.mean) + "," + format_number(c.stderr_mean) + "," + (c.within_3_stderr ? "1" : "0") +
               "\n";
    return out;
}

std::string trajectory_json(const Trajectory& traj, std::string_view scenario_hash, std::string_view route) {
    json samples = json::array();
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const PatchState& x = traj.states[k];
        samples.push_back({{"t", traj.times[k]},
                           {"mass", mass(x)},
                           {"sup_S", sup_norm(x.s)},
                           {"sup_I", sup_norm(x.i)},
                           {"sup_R", sup_norm(x.r)},
                           {"min_component", min_component(x)}});
    }
    const GridSpec& g = traj.states.front().grid();
    json j = {{"schema_version", kReportSchemaVersion},
              {"kind", "trajectory"},
              {"scenario_hash", std::string(scenario_hash)},
              {"route", std::string(route)},
              {"grid", {{"dim", g.dim()}, {"inv_eps", g.inv_eps()}, {"boundary", std::string(to_string(g.boundary()))}}},
              {"samples", samples}};
    return finish(j);
}

std::string ssa_json(const SimOutput& out, std::string_view scenario_hash) {
    json samples = json::array();
    for (std::size_t k = 0; k < out.times.size(); ++k)
        samples.push_back({{"t", out.times[k]},
                           {"events", k < out.events_at.size() ? out.events_at[k] : 0},
                           {"mass", mass(out.states[k])}});
    json j = {{"schema_version", kReportSchemaVersion},
              {"kind", "ssa"},
              {"scenario_hash", std::string(scenario_hash)},
              {"seed", out.seed},
              {"N", out.N},
              {"event_count", out.event_count},
              {"samples", samples}};
    return finish(j);
}

std::string report_json(const ExperimentReport& report, const Verdict& verdict, std::string_view scenario_hash) {
    json rows = json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"inv_eps", r.inv_eps},
                        {"eps", r.eps},
                        {"N", r.N},
                        {"replicas", r.replicas},
                        {"mean_error", number_or_null(r.mean_error)},
                        {"stderr_error", number_or_null(r.stderr_error)}});
    json checks = json::array();
    for (const auto& c : report.mean_checks)
        checks.push_back({{"N", c.N},
                          {"t", c.t},
                          {"compartment", std::string(1, "SIR"[c.compartment])},
                          {"mean", c.mean},
                          {"stderr_mean", c.stderr_mean},
                          {"within_3_stderr", c.within_3_stderr}});
    json j = {{"schema_version", kReportSchemaVersion},
              {"kind", std::string(to_string(report.kind))},
              {"scenario_hash", std::string(scenario_hash)},
              {"seed", report.seed},
              {"sample_intervals", report.sample_intervals},
              {"eps_ref", report.inv_eps_ref > 0 ? json(1.0 / report.inv_eps_ref) : json(nullptr)},
              {"inv_eps_ref", report.inv_eps_ref},
              {"dt", report.dt},
              {"rows", rows},
              {"slope", report.slope ? json(*report.slope) : json(nullptr)},
              {"mean_checks", checks},
              {"verdict", {{"pass", verdict.pass}, {"detail", verdict.detail}}}};
    if (report.kind == ExperimentKind::DiscretizationStudy) {
        json study = json::array();
        for (const auto& r : report.study.rows)
            study.push_back({{"inv_eps", r.inv_eps},
                             {"eps", r.eps},
                             {"sup_error_S", r.sup_error_S},
                             {"sup_error_I", r.sup_error_I},
                             {"sup_error_R", r.sup_error_R},
                             {"sup_error_total", r.sup_error_total}});
        j["study"] = study;
    }
    return finish(j);
}

namespace {

std::string xml_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string loglog_svg(const SvgPlot& plot) {
    constexpr double width = 640, height = 440, left = 80, right = 24, top = 48, bottom = 64;
    const double pw = width - left - right, ph = height - top - bottom;

    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < std::min(plot.data.x.size(), plot.data.y.size()); ++k) {
        if (!(plot.data.x[k] > 0.0) || !(plot.data.y[k] > 0.0)) continue;
        lx.push_back(std::log10(plot.data.x[k]));
        ly.push_back(std::log10(plot.data.y[k]));
    }
    const auto decade_range = [](const std::vector<double>& v) {
        if (v.empty()) return std::pair<double, double>{0.0, 1.0};
        double lo = std::floor(*std::min_element(v.begin(), v.end()));
        double hi = std::ceil(*std::max_element(v.begin(), v.end()));
        if (hi <= lo) hi = lo + 1.0;
        return std::pair<double, double>{lo, hi};
    };
    const auto [x0, x1] = decade_range(lx);
    const auto [y0, y1] = decade_range(ly);
    const auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
    const auto py = [&](double v) { return top + (1.0 - (v - y0) / (y1 - y0)) * ph; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"440\" viewBox=\"0 0 640 440\">\n";
    s += "<rect width=\"640\" height=\"440\" fill=\"white\"/>\n";
    s += "<defs><clipPath id=\"plot\"><rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" +
         fixed(pw) + "\" height=\"" + fixed(ph) + "\"/></clipPath></defs>\n";
    s += "<text x=\"320\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         xml_escape(plot.title) + "</text>\n";
    s += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double d = x0; d <= x1 + 1e-9; d += 1.0) {
        const double x = px(d);
        s += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(x) + "\" y2=\"" + fixed(top + ph) +
             "\" stroke=\"#ddd\"/>\n";
        s += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(top + ph + 18) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">1e" + std::to_string(int(d)) +
             "</text>\n";
    }
    for (double d = y0; d <= y1 + 1e-9; d += 1.0) {
        const double y = py(d);
        s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left + pw) + "\" y2=\"" +
             fixed(y) + "\" stroke=\"#ddd\"/>\n";
        s += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(y + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e" + std::to_string(int(d)) +
             "</text>\n";
    }
    s += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(height - 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + xml_escape(plot.x_label) +
         "</text>\n";
    s += "<text transform=\"translate(20," + fixed(top + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         xml_escape(plot.y_label) + "</text>\n";

    if (plot.guide_slope && !lx.empty()) {
        const double lo = x0, hi = x1;
        const double yl = ly.front() + *plot.guide_slope * (lo - lx.front());
        const double yh = ly.front() + *plot.guide_slope * (hi - lx.front());
        s += "<line x1=\"" + fixed(px(lo)) + "\" y1=\"" + fixed(py(yl)) + "\" x2=\"" + fixed(px(hi)) + "\" y2=\"" +
             fixed(py(yh)) + "\" stroke=\"gray\" stroke-dasharray=\"6 4\" clip-path=\"url(#plot)\"/>\n";
    }
    if (!lx.empty()) {
        s += "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < lx.size(); ++k) s += (k ? " " : "") + fixed(px(lx[k])) + "," + fixed(py(ly[k]));
        s += "\"/>\n";
        for (std::size_t k = 0; k < lx.size(); ++k)
            s += "<circle cx=\"" + fixed(px(lx[k])) + "\" cy=\"" + fixed(py(ly[k])) + "\" r=\"4\" fill=\"#1f5fa8\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

std::size_t CsvTable::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::out_of_range("no CSV column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::numbers(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        const std::string& cell = row[c];
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
            throw std::invalid_argument("malformed number '" + cell + "' in column '" + std::string(name) + "'");
        out.push_back(v);
    }
    return out;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    const auto split = [](std::string_view line) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.emplace_back(line.substr(start, comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return cells;
    };
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        auto cells = split(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
        } else {
            if (cells.size() != table.header.size())
                throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": expected " +
                                            std::to_string(table.header.size()) + " cells, got " +
                                            std::to_string(cells.size()));
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.header.empty()) throw std::invalid_argument("CSV text has no header");
    return table;
}

std::string manifest_json(const RunManifest& m) {
    json outputs = json::array();
    for (const auto& f : m.outputs) outputs.push_back({{"name", f.name}, {"hash", f.hash}, {"bytes", f.bytes}});
    json j = {{"schema_version", kReportSchemaVersion},
              {"kind", "manifest"},
              {"tool_version", std::string(kToolVersion)},
              {"command", m.command},
              {"scenario_hash", m.scenario_hash},
              {"scenario", json::parse(m.scenario_text)},
              {"seed", m.seed},
              {"replicas", m.replicas},
              {"threads", m.threads},
              {"formats", m.formats},
              {"replica_seeds", m.replica_seeds},
              {"started_utc", m.started_utc},
              {"finished_utc", m.finished_utc},
              {"wall_seconds", m.wall_seconds},
              {"outputs", outputs}};
    return finish(j);
}

RunManifest parse_manifest(std::string_view text) {
    try {
        const json j = json::parse(text.begin(), text.end());
        if (j.at("kind") != "manifest") throw std::invalid_argument("not a manifest");
        if (j.at("schema_version").get<int>() != kReportSchemaVersion)
            throw std::invalid_argument("unsupported manifest schema version");
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.scenario_hash = j.at("scenario_hash").get<std::string>();
        m.scenario_text = j.at("scenario").dump();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.replicas = j.at("replicas").get<int>();
        m.threads = j.at("threads").get<unsigned>();
        m.formats = j.at("formats").get<std::vector<std::string>>();
        m.replica_seeds = j.at("replica_seeds").get<std::vector<std::vector<std::uint64_t>>>();
        m.started_utc = j.at("started_utc").get<std::string>();
        m.finished_utc = j.at("finished_utc").get<std::string>();
        m.wall_seconds = j.at("wall_seconds").get<double>();
        for (const auto& f : j.at("outputs"))
            m.outputs.push_back({f.at("name").get<std::string>(), f.at("hash").get<std::string>(),
                                 f.at("bytes").get<std::size_t>()});
        return m;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed manifest: ") + e.what());
    }
}

ManifestFile write_output(const std::filesystem::path& dir, const std::string& name, const std::string& body) {
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
    return {name, hash_hex(fnv1a(body)), body.size()};
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace sirlab

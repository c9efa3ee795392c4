#include "wirtstab/report.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace wirtstab::report {

using json = nlohmann::ordered_json;
using powerflow::to_string;

Format format_from(const std::string& name) {
    if (name == "table")
        return Format::Table;
    if (name == "json")
        return Format::Json;
    if (name == "csv")
        return Format::Csv;
    throw SemanticError("unknown output format '" + name + "' (expected table, json or csv)");
}

std::string format_number(std::optional<double> x) {
    if (!x)
        return "";
    if (std::isinf(*x))
        return *x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *x);
    return buf;
}

namespace {

json number(std::optional<double> x) {
    if (!x)
        return nullptr;
    if (std::isinf(*x))
        return *x > 0 ? "inf" : "-inf";
    return *x;
}

std::string cell(std::optional<double> x) {
    const std::string s = format_number(x);
    return s.empty() ? "-" : s;
}

json metadata(const Metadata& meta) {
    json options = json::object();
    for (const auto& [k, v] : meta.options)
        options[k] = v;
    return {{"case", meta.case_name}, {"tool_version", WIRTSTAB_VERSION}, {"command", meta.command}, {"options", options}};
}

struct BusRow {
    int bus;
    std::string mode;
    std::optional<double> c_w, k_r, l_index, scr, margin, v_mag, v_angle;
};

std::vector<BusRow> bus_rows(const sweep::Evaluation& e) {
    std::vector<BusRow> rows;
    const auto& pt = e.point;
    for (std::size_t k = 0; k < pt.bus_order.size(); ++k) {
        const int bus = pt.bus_order[k];
        BusRow r{bus, to_string(e.profile.at(bus).mode), {}, {}, {}, {}, {}, {}, {}};
        for (const auto& bi : e.dominance.buses)
            if (bi.bus == bus) {
                r.c_w = bi.c_w;
                r.margin = bi.margin;
            }
        r.k_r = e.kr.at(bus);
        r.l_index = e.l_index.at(bus);
        r.scr = e.scr.at(bus);
        r.v_mag = std::abs(pt.v[k]);
        r.v_angle = std::arg(pt.v[k]) * 180.0 / M_PI;
        rows.push_back(r);
    }
    return rows;
}

json evaluation_json(const sweep::Evaluation& e) {
    json j;
    j["lambda"] = e.lambda;
    j["converged"] = e.point.converged;
    j["iterations"] = e.point.iterations;
    j["max_mismatch"] = e.point.max_mismatch;
    j["system_c_w"] = number(e.dominance.system_c_w);
    j["dominant"] = e.dominance.dominant;
    j["min_margin"] = number(e.dominance.min_margin);
    j["sigma_min_conv"] = e.sigma_min_conv;
    j["switched"] = e.switched;
    j["buses"] = json::array();
    for (const auto& r : bus_rows(e))
        j["buses"].push_back({{"bus", r.bus},
                              {"mode", r.mode},
                              {"v_mag", number(r.v_mag)},
                              {"v_angle_deg", number(r.v_angle)},
                              {"c_w", number(r.c_w)},
                              {"k_r", number(r.k_r)},
                              {"l_index", number(r.l_index)},
                              {"scr", number(r.scr)},
                              {"margin", number(r.margin)}});
    return j;
}

void csv_rows(std::ostringstream& out, const sweep::Evaluation& e) {
    for (const auto& r : bus_rows(e))
        out << format_number(e.lambda) << ',' << r.bus << ',' << r.mode << ',' << format_number(r.c_w) << ','
            << format_number(r.k_r) << ',' << format_number(r.l_index) << ',' << format_number(r.scr) << ','
            << format_number(r.margin) << ',' << format_number(e.sigma_min_conv) << '\n';
}

void table_rows(std::ostringstream& out, const sweep::Evaluation& e) {
    char line[256];
    std::snprintf(line, sizeof line, "%6s %-4s %10s %10s %10s %10s %10s %10s %10s\n", "bus", "mode", "|V|", "angle",
                  "C_W", "K_R", "L", "SCR", "margin");
    out << line;
    for (const auto& r : bus_rows(e)) {
        std::snprintf(line, sizeof line, "%6d %-4s %10s %10s %10s %10s %10s %10s %10s\n", r.bus, r.mode.c_str(),
                      cell(r.v_mag).c_str(), cell(r.v_angle).c_str(), cell(r.c_w).c_str(), cell(r.k_r).c_str(),
                      cell(r.l_index).c_str(), cell(r.scr).c_str(), cell(r.margin).c_str());
        out << line;
    }
}

void table_summary(std::ostringstream& out, const sweep::Evaluation& e) {
    out << "lambda " << format_number(e.lambda) << ": " << e.point.iterations << " iterations, max mismatch "
        << format_number(e.point.max_mismatch) << "\n";
    out << "system C_W " << format_number(e.dominance.system_c_w) << ", min margin "
        << format_number(e.dominance.min_margin) << ", dominant " << (e.dominance.dominant ? "yes" : "no")
        << ", sigma_min(J_conv) " << format_number(e.sigma_min_conv) << "\n";
    if (!e.switched.empty()) {
        out << "current-limited:";
        for (int b : e.switched)
            out << ' ' << b;
        out << "\n";
    }
}

void table_header(std::ostringstream& out, const Metadata& meta) {
    out << "case " << meta.case_name << " (" << meta.command << ", wirtstab " << WIRTSTAB_VERSION << ")\n";
    for (const auto& [k, v] : meta.options)
        out << "  " << k << " = " << v << "\n";
}

json boundary_json(const sweep::Boundary& b) {
    json j = {{"predicate", sweep::to_string(b.predicate)},
              {"lambda", b.lambda ? json(*b.lambda) : json(nullptr)},
              {"tolerance", b.tolerance}};
    if (b.bracket_hi > b.bracket_lo)
        j["bracket"] = {b.bracket_lo, b.bracket_hi};
    if (!b.note.empty())
        j["note"] = b.note;
    return j;
}

} // namespace

std::string render_analysis(const Metadata& meta, const sweep::Evaluation& e, Format format) {
    std::ostringstream out;
    switch (format) {
    case Format::Json: {
        json doc;
        doc["metadata"] = metadata(meta);
        doc["result"] = evaluation_json(e);
        out << doc.dump(2) << "\n";
        break;
    }
    case Format::Csv:
        out << kCsvHeader << "\n";
        csv_rows(out, e);
        break;
    case Format::Table:
        table_header(out, meta);
        table_summary(out, e);
        table_rows(out, e);
        break;
    }
    return out.str();
}

std::string sweep_csv(const sweep::SweepResult& r) {
    std::ostringstream out;
    out << kCsvHeader << "\n";
    for (const auto& s : r.samples)
        if (s.eval)
            csv_rows(out, *s.eval);
    return out.str();
}

std::string render_sweep(const Metadata& meta, const sweep::SweepResult& r, Format format) {
    if (format == Format::Csv)
        return sweep_csv(r);
    std::ostringstream out;
    if (format == Format::Json) {
        json doc;
        doc["metadata"] = metadata(meta);
        doc["samples"] = json::array();
        for (const auto& s : r.samples) {
            if (s.eval) {
                doc["samples"].push_back(evaluation_json(*s.eval));
            } else {
                doc["samples"].push_back({{"lambda", s.lambda}, {"converged", false}, {"diagnostic", s.diagnostic}});
            }
        }
        doc["boundaries"] = json::array();
        for (const auto& b : r.boundaries)
            doc["boundaries"].push_back(boundary_json(b));
        doc["transitions"] = json::array();
        for (const auto& t : r.transitions)
            doc["transitions"].push_back(
                {{"lambda", t.lambda}, {"bus", t.bus}, {"from", to_string(t.from)}, {"to", to_string(t.to)}});
        out << doc.dump(2) << "\n";
        return out.str();
    }
    table_header(out, meta);
    for (const auto& s : r.samples) {
        out << "\n";
        if (!s.eval) {
            out << "lambda " << format_number(s.lambda) << ": not converged (" << s.diagnostic << ")\n";
            continue;
        }
        table_summary(out, *s.eval);
        table_rows(out, *s.eval);
    }
    if (!r.transitions.empty()) {
        out << "\ntransitions\n";
        for (const auto& t : r.transitions)
            out << "  lambda " << format_number(t.lambda) << ": bus " << t.bus << " " << to_string(t.from) << " -> "
                << to_string(t.to) << "\n";
    }
    if (!r.boundaries.empty()) {
        out << "\nboundaries\n";
        for (const auto& b : r.boundaries) {
            out << "  boundary " << sweep::to_string(b.predicate) << ": ";
            if (b.lambda)
                out << "lambda* = " << format_number(*b.lambda) << " +/- " << format_number(b.tolerance);
            else
                out << "none";
            if (!b.note.empty())
                out << " (" << b.note << ")";
            out << "\n";
        }
    }
    return out.str();
}

std::string render_verify(const Metadata& meta, const std::vector<VerifyEntry>& entries, Format format) {
    std::ostringstream out;
    if (format == Format::Json) {
        json doc;
        doc["metadata"] = metadata(meta);
        doc["reports"] = json::array();
        for (const auto& e : entries) {
            json j = {{"lambda", e.lambda}};
            if (e.report) {
                const auto& r = *e.report;
                j["residual"] = r.residual;
                j["local_closure_residual"] = r.local_closure_residual;
                j["det_l_magnitude"] = r.det_l_magnitude;
                j["r_min_singular"] = r.r_min_singular;
                j["sigma_min_conv"] = r.sigma_min_conv;
                j["sigma_min_red"] = r.sigma_min_red;
                j["current_limited_extension"] = r.current_limited_extension;
                j["verdict"] = r.verdict ? "pass" : "fail";
            } else {
                j["verdict"] = "fail";
                j["note"] = e.note;
            }
            doc["reports"].push_back(j);
        }
        out << doc.dump(2) << "\n";
        return out.str();
    }
    if (format == Format::Csv) {
        out << "lambda,residual,local_closure_residual,det_l_magnitude,r_min_singular,sigma_min_conv,sigma_min_red,"
               "verdict\n";
        for (const auto& e : entries) {
            out << format_number(e.lambda) << ',';
            if (e.report) {
                const auto& r = *e.report;
                out << format_number(r.residual) << ',' << format_number(r.local_closure_residual) << ','
                    << format_number(r.det_l_magnitude) << ',' << format_number(r.r_min_singular) << ','
                    << format_number(r.sigma_min_conv) << ',' << format_number(r.sigma_min_red) << ','
                    << (r.verdict ? "pass" : "fail") << '\n';
            } else {
                out << ",,,,,,fail\n";
            }
        }
        return out.str();
    }
    table_header(out, meta);
    char line[256];
    std::snprintf(line, sizeof line, "%10s %12s %12s %12s %12s %12s %7s\n", "lambda", "residual", "local_res",
                  "|det L|", "sigma_min R", "sigma_min J", "verdict");
    out << line;
    for (const auto& e : entries) {
        if (!e.report) {
            out << "  lambda " << format_number(e.lambda) << ": fail (" << e.note << ")\n";
            continue;
        }
        const auto& r = *e.report;
        std::snprintf(line, sizeof line, "%10s %12s %12s %12s %12s %12s %7s\n", format_number(e.lambda).c_str(),
                      format_number(r.residual).c_str(), format_number(r.local_closure_residual).c_str(),
                      format_number(r.det_l_magnitude).c_str(), format_number(r.r_min_singular).c_str(),
                      format_number(r.sigma_min_conv).c_str(), r.verdict ? "pass" : "fail");
        out << line;
        if (r.current_limited_extension)
            out << "  (current-limited buses folded into the column map)\n";
    }
    return out.str();
}

} // namespace wirtstab::report

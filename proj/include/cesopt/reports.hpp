#pragma once

// Report emission: 5x5 KPI tables, scenario summaries, coverage tables, KPI
// JSON (round-trippable), dispatch flow CSV and simple SVG line plots.

#include "cesopt/assessment.hpp"
#include "cesopt/dispatch.hpp"
#include "cesopt/error.hpp"
#include "cesopt/reduction.hpp"
#include "cesopt/scenarios.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace cesopt {

using json = nlohmann::json;

inline std::string fmt(double v, int decimals) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s.find_first_not_of("-0.") == std::string::npos) s = decimals > 0 ? "0." + std::string(decimals, '0') : "0";
    return s;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << text;
    if (!f) throw DataError("write failed: " + path);
}

inline std::string grid_key(const GridResult& g) {
    return "s" + std::to_string(g.scenario) + "_" + to_string(g.topology) + "_" + std::to_string(g.year);
}

// ---------------------------------------------------------------------------
// JSON

inline json kpi_to_json(const KpiReport& k) {
    json j;
    j["households"] = k.households;
    j["afb_eu"] = k.afb_eu;
    j["afb_op"] = k.afb_op;
    j["afb"] = k.afb_total;
    j["eac"] = k.eac;
    j["eav"] = k.eav;
    if (k.scr_set) j["scr"] = {{"tot", k.scr_set->tot}, {"el", k.scr_set->el}, {"hp", k.scr_set->hp}, {"storage", k.scr_set->storage}};
    else j["scr"] = nullptr;
    j["ssr"] = k.ssr;
    j["ur"] = k.ur;
    j["self_consumption"] = k.self_consumption;
    j["sc_storage"] = k.sc_storage;
    j["arbitrage_profit"] = k.arbitrage_profit;
    return j;
}

inline KpiReport kpi_from_json(const json& j) {
    try {
        KpiReport k;
        k.households = j.at("households").get<int>();
        k.afb_eu = j.at("afb_eu").get<std::vector<double>>();
        k.afb_op = j.at("afb_op").get<double>();
        k.afb_total = j.at("afb").get<double>();
        k.eac = j.at("eac").get<double>();
        k.eav = j.at("eav").get<double>();
        if (!j.at("scr").is_null()) {
            const json& s = j.at("scr");
            k.scr_set = ScrSet{s.at("tot").get<double>(), s.at("el").get<double>(), s.at("hp").get<double>(),
                               s.at("storage").get<double>()};
        }
        k.ssr = j.at("ssr").get<double>();
        k.ur = j.at("ur").get<double>();
        k.self_consumption = j.at("self_consumption").get<double>();
        k.sc_storage = j.at("sc_storage").get<double>();
        k.arbitrage_profit = j.at("arbitrage_profit").get<double>();
        return k;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed KPI JSON: ") + e.what());
    }
}

inline json grid_to_json(const GridResult& g) {
    json j;
    j["scenario"] = g.scenario;
    j["topology"] = to_string(g.topology);
    j["year"] = g.year;
    j["households"] = g.households;
    j["pv_areas"] = g.pv_areas;
    j["bes_sizes"] = g.bes_sizes;
    j["cells"] = json::array();
    for (const CellResult& c : g.cells) {
        json cj;
        cj["pv_area"] = c.pv_area;
        cj["bes"] = c.bes;
        cj["excluded"] = c.excluded;
        cj["kpi"] = c.kpi ? kpi_to_json(*c.kpi) : json(nullptr);
        if (c.reduction) {
            const CellReduction& r = *c.reduction;
            json pts = json::array();
            for (const auto& p : r.points) pts.push_back({p.capacity_quotient, p.sc_quotient});
            cj["reduction"] = {{"ces_opt", r.ces_opt}, {"ces_dir", r.ces_dir},     {"initial_sc", r.initial_sc},
                               {"monotone", r.monotone}, {"bes_opt", r.bes_opt}, {"afb_opt", r.afb_opt_total},
                               {"points", pts}};
        } else {
            cj["reduction"] = nullptr;
        }
        cj["error"] = c.error;
        j["cells"].push_back(cj);
    }
    return j;
}

inline GridResult grid_from_json(const json& j) {
    try {
        GridResult g;
        g.scenario = j.at("scenario").get<int>();
        g.topology = j.at("topology").get<std::string>() == "hes" ? Topology::HES : Topology::CES;
        g.year = j.at("year").get<int>();
        g.households = j.at("households").get<int>();
        g.pv_areas = j.at("pv_areas").get<std::vector<double>>();
        g.bes_sizes = j.at("bes_sizes").get<std::vector<double>>();
        for (const json& cj : j.at("cells")) {
            CellResult c;
            c.pv_area = cj.at("pv_area").get<double>();
            c.bes = cj.at("bes").get<double>();
            c.excluded = cj.at("excluded").get<bool>();
            if (!cj.at("kpi").is_null()) c.kpi = kpi_from_json(cj.at("kpi"));
            if (!cj.at("reduction").is_null()) {
                const json& rj = cj.at("reduction");
                CellReduction r;
                r.ces_opt = rj.at("ces_opt").get<double>();
                r.ces_dir = rj.at("ces_dir").get<double>();
                r.initial_sc = rj.at("initial_sc").get<double>();
                r.monotone = rj.at("monotone").get<bool>();
                r.bes_opt = rj.at("bes_opt").get<double>();
                r.afb_opt_total = rj.at("afb_opt").get<double>();
                for (const json& p : rj.at("points")) r.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                c.reduction = std::move(r);
            }
            c.error = cj.at("error").get<std::string>();
            g.cells.push_back(std::move(c));
        }
        if (g.cells.size() != g.pv_areas.size() * g.bes_sizes.size()) throw DataError("grid JSON cell count mismatch");
        g.summary = summarize(g.cells, g.households);
        return g;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed grid JSON: ") + e.what());
    }
}

inline GridResult load_grid_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot read " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return grid_from_json(j);
}

// ---------------------------------------------------------------------------
// Tables

// One 5x5 table (rows PV area, columns BES size), per-household values.
// `metric` is a cell_metrics key; failed cells print NA.
inline std::string grid_table_csv(const GridResult& g, const std::string& metric, int decimals) {
    std::ostringstream o;
    o << "pv_area_m2";
    for (double b : g.bes_sizes) o << ",bes_" << fmt(b, 1);
    o << '\n';
    for (std::size_t i = 0; i < g.pv_areas.size(); ++i) {
        o << fmt(g.pv_areas[i], 1);
        for (std::size_t j = 0; j < g.bes_sizes.size(); ++j) {
            const auto m = cell_metrics(g.cell(i, j), g.households);
            auto it = m.find(metric);
            o << ',' << (it == m.end() ? std::string("NA") : fmt(it->second, decimals));
        }
        o << '\n';
    }
    return o.str();
}

struct TableSpec {
    const char* metric;
    int decimals;
};

inline const std::vector<TableSpec>& grid_tables() {
    static const std::vector<TableSpec> t = {{"afb", 2}, {"eac", 2}, {"eav", 2}, {"ur", 4}};
    return t;
}

// Writes <dir>/<key>_<metric>.csv for AFB, EAC, EAV and UR; returns the paths.
inline std::vector<std::string> write_grid_tables(const std::string& dir, const GridResult& g) {
    std::vector<std::string> paths;
    for (const TableSpec& t : grid_tables()) {
        const std::string p = dir + "/" + grid_key(g) + "_" + t.metric + ".csv";
        write_text(p, grid_table_csv(g, t.metric, t.decimals));
        paths.push_back(p);
    }
    return paths;
}

inline std::string summary_csv(const std::vector<GridResult>& grids) {
    std::ostringstream o;
    o << "scenario,topology,year,metric,mean,cv,cells,failures\n";
    for (const GridResult& g : grids)
        for (const auto& [name, s] : g.summary)
            o << g.scenario << ',' << to_string(g.topology) << ',' << g.year << ',' << name << ',' << fmt(s.mean, 6)
              << ',' << fmt(s.cv, 4) << ',' << s.n << ',' << g.failures() << '\n';
    return o.str();
}

inline std::string coverage_csv(const std::vector<CoverageEntry>& entries) {
    std::ostringstream o;
    o << "scenario,year,mean_afb,mean_eac,coverage,cells\n";
    for (const CoverageEntry& e : entries)
        o << e.scenario << ',' << e.year << ',' << fmt(e.mean_afb, 2) << ',' << fmt(e.mean_eac, 2) << ','
          << fmt(e.coverage, 4) << ',' << e.cells << '\n';
    return o.str();
}

inline std::string cell_errors_text(const GridResult& g) {
    std::ostringstream o;
    for (const CellResult& c : g.cells)
        if (!c.error.empty()) o << grid_key(g) << " pv " << fmt(c.pv_area, 1) << " bes " << fmt(c.bes, 1) << ": " << c.error << '\n';
    return o.str();
}

// ---------------------------------------------------------------------------
// Series

// Community totals per step.
inline std::string flows_csv(const DispatchResult& r, const AnnualInputs& in) {
    std::ostringstream o;
    o << "step,spot,pv,load_el,hp_el,pv_to_load,pv_to_hp,pv_to_storage,pv_to_community,pv_to_grid,grid_to_load,"
         "grid_to_hp,storage_to_load,storage_to_hp,community_to_load,community_to_hp,dr_out,dr_in,soc,"
         "spot_buy_to_ces,ces_to_spot\n";
    const std::size_t n = static_cast<std::size_t>(r.steps);
    for (std::size_t t = 0; t < n; ++t) {
        double v[17] = {};
        for (std::size_t h = 0; h < r.households.size(); ++h) {
            const HouseholdFlows& f = r.households[h];
            v[0] += in.households[h].pv[t];
            v[1] += f.load_el[t];
            v[2] += f.hp_el[t];
            v[3] += f.pv_to_load[t];
            v[4] += f.pv_to_hp[t];
            v[5] += f.pv_to_storage[t];
            v[6] += f.pv_to_community[t];
            v[7] += f.pv_to_grid[t];
            v[8] += f.grid_to_load[t];
            v[9] += f.grid_to_hp[t];
            v[10] += f.storage_to_load[t];
            v[11] += f.storage_to_hp[t];
            v[12] += f.community_to_load[t];
            v[13] += f.community_to_hp[t];
            v[14] += f.dr_out[t];
            v[15] += f.dr_in[t];
        }
        for (const StorageTrace& s : r.storages) v[16] += s.soc[t];
        o << t << ',' << fmt(in.spot[t], 5);
        for (double x : v) o << ',' << fmt(x, 6);
        o << ',' << fmt(r.spot_buy_to_ces.empty() ? 0.0 : r.spot_buy_to_ces[t], 6) << ','
          << fmt(r.ces_to_spot.empty() ? 0.0 : r.ces_to_spot[t], 6) << '\n';
    }
    return o.str();
}

inline json reduction_annotation(const ReductionCurve& c) {
    return {{"topology", to_string(c.topology)}, {"ces_opt", c.ces_opt}, {"ces_dir", c.ces_dir},
            {"initial_sc_kwh", c.initial_sc}, {"monotone", c.monotone()}};
}

// ---------------------------------------------------------------------------
// SVG

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

inline std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                 const std::vector<PlotSeries>& series) {
    const double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                x0 = x1 = s.x[i];
                y0 = y1 = s.y[i];
                first = false;
            }
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
    o << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\" font-size=\"12\">" << ylabel << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        o << "<text x=\"" << fmt(px(xv), 1) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
          << fmt(xv, 2) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(yv) + 3, 1) << "\" text-anchor=\"end\" font-size=\"10\">"
          << fmt(yv, 2) << "</text>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* c = colors[k % 7];
        // Long series are thinned to about 2000 vertices.
        const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 2000);
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); i += stride) o << fmt(px(s.x[i]), 1) << ',' << fmt(py(s.y[i]), 1) << ' ';
        if (!s.x.empty() && (s.x.size() - 1) % stride != 0) o << fmt(px(s.x.back()), 1) << ',' << fmt(py(s.y.back()), 1);
        o << "\"/>\n";
        o << "<text x=\"" << W - R - 120 << "\" y=\"" << T + 14 * (k + 1) << "\" font-size=\"11\" fill=\"" << c << "\">"
          << s.label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace cesopt

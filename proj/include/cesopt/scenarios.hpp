#pragma once

// The five study scenarios, the 5x5 PV x BES sensitivity grid and the
// multi-year investment assessment.

#include "cesopt/assessment.hpp"
#include "cesopt/costmodel.hpp"
#include "cesopt/devices.hpp"
#include "cesopt/dispatch.hpp"
#include "cesopt/error.hpp"
#include "cesopt/market.hpp"
#include "cesopt/parallel.hpp"
#include "cesopt/profiles.hpp"
#include "cesopt/reduction.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cesopt {

enum class AfbBaseline {
    no_storage,          // same households, no storage, no sharing
    zero_capacity_ces,   // CES only: zero-capacity pool with direct sharing
};

// Fully resolved study configuration; config.hpp fills it from JSON.
struct StudyConfig {
    TariffScheme tariff;
    CostInputs cost;
    CostTrend trend;
    PvSpec pv;
    HpSpec hp;
    NgbSpec ngb;
    BesSpec bes;   // efficiencies, self-discharge, lifetime; size and P/E come from the scenario
    bool ngb_backup = false;

    double window_hours = 24.0;
    double terminal_soc_value = -1.0;
    double tie_break = 1e-9;
    bool arbitrage = true;
    bool sharing = true;

    double dr_max_share = 0.4;
    double dr_window_hours = 4.0;
    bool dr_symmetric = true;

    int households = 6;
    int reference_year = 2015;
    std::vector<int> years{2015, 2025, 2035};
    std::vector<double> pv_areas{0.0, 7.5, 15.0, 22.5, 30.0};
    std::vector<double> bes_sizes{0.0, 2.5, 5.0, 7.5, 10.0};

    UrMode ur_mode = UrMode::state;
    AfbBaseline afb_baseline = AfbBaseline::no_storage;

    ReductionOptions reduction;
    std::vector<double> curve_fractions{0.0, 0.25, 0.5, 0.75, 1.0};

    std::string data_dir;        // empty: synthetic data
    unsigned long long seed = 1;

    void validate() const {
        pv.validate();
        hp.validate();
        ngb.validate();
        cost.validate();
        trend.validate();
        BesSpec b = bes;
        b.validate();
        if (households < 1) throw ConfigError("households must be >= 1");
        if (!(window_hours > 0.0)) throw ConfigError("dispatch.window_hours must be positive");
        const double ws = window_hours * 60.0 / kStepMinutes;
        if (std::abs(ws - std::round(ws)) > 1e-9) throw ConfigError("dispatch.window_hours must be a multiple of 15 min");
        if (!(dr_max_share >= 0.0 && dr_max_share <= 1.0)) throw ConfigError("dr.max_share must lie in [0, 1]");
        if (!(dr_window_hours > 0.0)) throw ConfigError("dr.window_hours must be positive");
        if (pv_areas.empty() || bes_sizes.empty()) throw ConfigError("grid axes must not be empty");
        for (double a : pv_areas)
            if (!(a >= 0.0)) throw ConfigError("grid.pv_areas must be >= 0");
        for (double c : bes_sizes)
            if (!(c >= 0.0)) throw ConfigError("grid.bes_sizes must be >= 0");
        if (years.empty()) throw ConfigError("years must not be empty");
    }

    int window_steps() const { return static_cast<int>(std::lround(window_hours * 60.0 / kStepMinutes)); }
};

struct ScenarioFlags {
    int id = 1;
    bool hp = false;
    bool dr = false;
    double p_to_e = 1.0;
    const char* name = "";
};

inline ScenarioFlags scenario_flags(int id) {
    switch (id) {
        case 1: return {1, false, false, 1.0, "base"};
        case 2: return {2, true, false, 1.0, "hp"};
        case 3: return {3, false, true, 1.0, "dr"};
        case 4: return {4, true, true, 1.0, "hp+dr"};
        case 5: return {5, false, false, 0.5, "p2e"};
    }
    throw ConfigError("unknown scenario " + std::to_string(id) + " (expected 1..5)");
}

struct ScenarioConfig {
    int id = 1;
    bool hp_enabled = false;
    bool dr_enabled = false;
    double p_to_e = 1.0;
    Topology topology = Topology::CES;
    double pv_area = 0.0;              // m2 per household
    double bes_per_household = 0.0;    // kWh
    int households = 6;
    int year = 2015;

    SystemSpec sys;            // sys.bes.capacity: pooled (CES) or per household (HES)
    DispatchSettings settings;
    CostInputs cost;           // prices of `year`
    PvSpec pv;
    double dr_max_share = 0.0;
    double dr_window_hours = 0.0;

    double total_capacity() const { return bes_per_household * households; }
};

inline ScenarioConfig build_scenario(const StudyConfig& study, int id, Topology topology, double pv_area,
                                     double bes_per_household, int year) {
    const ScenarioFlags f = scenario_flags(id);
    if (!(pv_area >= 0.0)) throw ConfigError("pv area must be >= 0");
    if (!(bes_per_household >= 0.0)) throw ConfigError("bes size must be >= 0");
    ScenarioConfig c;
    c.id = id;
    c.hp_enabled = f.hp;
    c.dr_enabled = f.dr;
    c.p_to_e = f.p_to_e;
    c.topology = topology;
    c.pv_area = pv_area;
    c.bes_per_household = bes_per_household;
    c.households = study.households;
    c.year = year;

    c.sys.tariff = study.tariff;
    c.sys.hp = study.hp;
    c.sys.ngb = study.ngb;
    c.sys.bes = study.bes;
    c.sys.bes.p_to_e = f.p_to_e;
    c.sys.bes.capacity = topology == Topology::CES ? bes_per_household * study.households : bes_per_household;

    DispatchSettings& s = c.settings;
    s.topology = topology;
    s.window_steps = study.window_steps();
    s.terminal_soc_value = study.terminal_soc_value;
    s.tie_break = study.tie_break;
    s.arbitrage = topology == Topology::CES && study.arbitrage;
    s.sharing = study.sharing;
    s.hp_enabled = f.hp;
    s.ngb_backup = study.ngb_backup;
    s.dr.enabled = f.dr;
    s.dr.max_share = study.dr_max_share;
    s.dr.window_steps = static_cast<int>(std::lround(study.dr_window_hours * 60.0 / kStepMinutes));
    s.dr.symmetric = study.dr_symmetric;

    c.cost = study.trend.apply(study.cost, year);
    c.pv = study.pv;
    c.pv.area = pv_area;
    c.dr_max_share = f.dr ? study.dr_max_share : 0.0;
    c.dr_window_hours = study.dr_window_hours;
    return c;
}

// Annualized storage cost of the whole community (EUR/a).
inline double community_eac(const ScenarioConfig& c, double bes_per_household) {
    if (c.topology == Topology::CES)
        return eac(total_cost(bes_per_household * c.households, Topology::CES, c.cost, c.p_to_e), c.cost);
    return c.households * eac(total_cost(bes_per_household, Topology::HES, c.cost, c.p_to_e), c.cost);
}

inline AnnualInputs make_inputs(const SyntheticDataset& ds, const ScenarioConfig& c) {
    if (static_cast<int>(ds.load.size()) < c.households || static_cast<int>(ds.heat.size()) < c.households)
        throw DataError("dataset has " + std::to_string(ds.load.size()) + " households, configuration needs " +
                        std::to_string(c.households));
    const std::size_t n = ds.spot.size();
    if (ds.pv_yield.size() != n) throw DataError("pv yield and spot series differ in length");
    c.pv.validate();
    const QuarterHourSeries pv = pv_output(c.pv, ds.pv_yield);
    AnnualInputs in;
    in.spot = ds.spot.values;
    for (int h = 0; h < c.households; ++h) {
        const auto& load = ds.load[static_cast<std::size_t>(h)];
        const auto& heat = ds.heat[static_cast<std::size_t>(h)];
        if (load.size() != n || heat.size() != n)
            throw DataError("household " + std::to_string(h + 1) + " series differ in length from the spot series");
        HouseholdSeries hs;
        if (c.dr_enabled) {
            const LoadSplit sp = split_shiftable(load, c.dr_max_share, c.dr_window_hours);
            hs.fixed = sp.fixed.values;
            hs.shiftable = sp.shiftable.values;
        } else {
            hs.fixed = load.values;
            hs.shiftable.assign(n, 0.0);
        }
        hs.heat = heat.values;
        hs.pv = pv.values;
        in.households.push_back(std::move(hs));
    }
    return in;
}

// ---------------------------------------------------------------------------
// Sensitivity grid

struct CellReduction {
    double ces_opt = 0.0;
    double ces_dir = 0.0;
    double initial_sc = 0.0;
    std::vector<ReductionPoint> points;
    bool monotone = true;
    double bes_opt = 0.0;        // kWh per household after the lossless reduction
    double afb_opt_total = 0.0;  // EUR/a at the reduced capacity
};

struct CellResult {
    double pv_area = 0.0;
    double bes = 0.0;
    bool excluded = false;   // zero PV or zero storage: not part of the means
    std::optional<KpiReport> kpi;
    std::optional<CellReduction> reduction;
    std::string error;
};

struct Stat {
    double mean = 0.0;
    double cv = 0.0;   // NaN when undefined
    int n = 0;
};

struct GridResult {
    int scenario = 1;
    Topology topology = Topology::CES;
    int year = 2015;
    int households = 6;
    std::vector<double> pv_areas, bes_sizes;
    std::vector<CellResult> cells;   // row-major: pv, then bes
    std::map<std::string, Stat> summary;

    const CellResult& cell(std::size_t i_pv, std::size_t j_bes) const { return cells.at(i_pv * bes_sizes.size() + j_bes); }
    int failures() const {
        int k = 0;
        for (const auto& c : cells) k += c.error.empty() ? 0 : 1;
        return k;
    }
};

struct GridOptions {
    int jobs = 1;
    bool reduction = false;
};

// Per-household metrics of one cell; the names are the summary keys.
inline std::map<std::string, double> cell_metrics(const CellResult& c, int households) {
    std::map<std::string, double> m;
    if (!c.kpi) return m;
    const KpiReport& k = *c.kpi;
    const double H = households;
    m["afb"] = k.afb_total / H;
    m["afb_op"] = k.afb_op / H;
    m["afb_eu"] = (k.afb_total - k.afb_op) / H;
    m["eac"] = k.eac / H;
    m["eav"] = k.eav / H;
    m["ssr"] = k.ssr;
    m["ur"] = k.ur;
    m["sc_total"] = k.self_consumption / H;
    m["sc_storage"] = k.sc_storage / H;
    m["arbitrage"] = k.arbitrage_profit / H;
    if (k.scr_set) {
        m["scr_total"] = k.scr_set->tot;
        m["scr_el"] = k.scr_set->el;
        m["scr_hp"] = k.scr_set->hp;
        m["scr_storage"] = k.scr_set->storage;
    }
    if (c.reduction) {
        m["ces_opt"] = c.reduction->ces_opt;
        m["ces_dir"] = c.reduction->ces_dir;
        m["afb_opt"] = c.reduction->afb_opt_total / H;
    }
    return m;
}

inline std::map<std::string, Stat> summarize(const std::vector<CellResult>& cells, int households) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& c : cells) {
        if (c.excluded || !c.error.empty()) continue;
        for (const auto& [k, v] : cell_metrics(c, households)) values[k].push_back(v);
    }
    std::map<std::string, Stat> out;
    for (const auto& [k, v] : values) {
        Stat s;
        s.n = static_cast<int>(v.size());
        s.mean = mean(v);
        try {
            s.cv = cv(v);
        } catch (const DomainError&) {
            s.cv = std::nan("");
        }
        out[k] = s;
    }
    return out;
}

namespace grid_detail {

inline std::string describe(const std::exception& e) {
    if (dynamic_cast<const InfeasibleError*>(&e)) return std::string("infeasible: ") + e.what();
    if (dynamic_cast<const DataError*>(&e)) return std::string("data: ") + e.what();
    return e.what();
}

}  // namespace grid_detail

// Runs all PV x BES cells of one scenario/topology. Cells fail individually;
// the error text is stored and the remaining cells still run.
inline GridResult run_sensitivity_grid(const StudyConfig& study, int scenario, Topology topology, int year,
                                       const SyntheticDataset& ds, const GridOptions& opt = {}) {
    study.validate();
    scenario_flags(scenario);
    if (study.afb_baseline == AfbBaseline::zero_capacity_ces && !study.sharing)
        throw ConfigError("the zero-capacity CES baseline needs sharing enabled");
    GridResult g;
    g.scenario = scenario;
    g.topology = topology;
    g.year = year;
    g.households = study.households;
    g.pv_areas = study.pv_areas;
    g.bes_sizes = study.bes_sizes;
    const std::size_t P = g.pv_areas.size(), B = g.bes_sizes.size();
    g.cells.resize(P * B);

    // Per PV row: inputs, the storage-free household stage (shared by the
    // baseline and every CES capacity) and the baseline result.
    struct Row {
        std::optional<AnnualInputs> in;
        std::shared_ptr<const ProsumerStage> stage0;
        std::optional<DispatchResult> baseline;
        std::string error;
    };
    std::vector<Row> rows(P);
    parallel_for(P, opt.jobs, [&](std::size_t i) {
        Row& r = rows[i];
        try {
            ScenarioConfig c0 = build_scenario(study, scenario, Topology::CES, g.pv_areas[i], 0.0, year);
            r.in = make_inputs(ds, c0);
            r.stage0 = std::make_shared<const ProsumerStage>(prosumer_stage(*r.in, c0.sys, c0.settings));
            if (topology == Topology::CES && study.afb_baseline == AfbBaseline::zero_capacity_ces) {
                r.baseline = operator_stage(*r.in, c0.sys, c0.settings, *r.stage0);
            } else {
                DispatchSettings hs = c0.settings;
                hs.topology = Topology::HES;
                hs.arbitrage = false;
                r.baseline = assemble_hes(*r.in, c0.sys, hs, *r.stage0);
            }
        } catch (const std::exception& e) {
            r.error = grid_detail::describe(e);
        }
    });

    parallel_for(P * B, opt.jobs, [&](std::size_t idx) {
        const std::size_t i = idx / B, j = idx % B;
        CellResult& cell = g.cells[idx];
        cell.pv_area = g.pv_areas[i];
        cell.bes = g.bes_sizes[j];
        cell.excluded = !(cell.pv_area > 0.0) || !(cell.bes > 0.0);
        const Row& row = rows[i];
        if (!row.error.empty()) {
            cell.error = row.error;
            return;
        }
        try {
            const ScenarioConfig c = build_scenario(study, scenario, topology, cell.pv_area, cell.bes, year);
            const double eac_total = community_eac(c, cell.bes);
            CapacitySweep sweep(*row.in, c.sys, c.settings, study.ur_mode);
            if (topology == Topology::CES) sweep.set_prosumer_stage(row.stage0);
            DispatchResult res = sweep.run(1.0);
            cell.kpi = make_kpi(res, *row.baseline, *row.in, topology, eac_total, study.ur_mode);
            if (opt.reduction && !cell.excluded && cell.kpi->sc_storage > 0.0) {
                CapacityRun full;
                full.fraction = 1.0;
                full.sc_storage = cell.kpi->sc_storage;
                full.eu_cost = res.eu_cost_total();
                full.op_profit = res.op_profit;
                full.ur = cell.kpi->ur;
                sweep.remember(full);
                ReductionOptions ro = study.reduction;
                CellReduction red;
                if (topology == Topology::CES) {
                    const ReductionCurve curve = sc_vs_capacity(sweep, study.curve_fractions, 1, ro);
                    red.ces_opt = curve.ces_opt;
                    red.ces_dir = curve.ces_dir;
                    red.initial_sc = curve.initial_sc;
                    red.points = curve.points;
                    red.monotone = curve.monotone();
                } else {
                    // Household curves: endpoints and the midpoint only; the
                    // lossless-reduction search is a CES quantity.
                    for (double f : {0.0, 0.5, 1.0}) sweep.evaluate(f);
                    red.initial_sc = sweep.initial_sc();
                    for (const CapacityRun& r : sweep.evaluated())
                        red.points.push_back({r.fraction, r.sc_storage / red.initial_sc});
                    ReductionCurve tmp;
                    tmp.points = red.points;
                    red.monotone = tmp.monotone();
                }
                red.bes_opt = cell.bes * (1.0 - red.ces_opt);
                const CapacityRun at = sweep.evaluate(1.0 - red.ces_opt);
                red.afb_opt_total = (row.baseline->eu_cost_total() - at.eu_cost) +
                                    (topology == Topology::CES ? at.op_profit - row.baseline->op_profit : 0.0);
                cell.reduction = std::move(red);
            }
        } catch (const std::exception& e) {
            cell.error = grid_detail::describe(e);
        }
    });
    g.summary = summarize(g.cells, g.households);
    return g;
}

// ---------------------------------------------------------------------------
// Investment assessment

struct CoverageEntry {
    int scenario = 1;
    int year = 2015;
    double mean_afb = 0.0;    // EUR/a per household at the CES_OPT size
    double mean_eac = 0.0;    // EUR/a per household at the CES_OPT size and the year's prices
    double coverage = 0.0;    // mean_afb / mean_eac
    int cells = 0;
};

// Coverage of the annualized cost of the downsized CES by its benefit, per
// scenario and year. Benefits stay at the grid's dispatch values; only the
// cost trend changes. Cells without a reduction result are skipped.
inline std::vector<CoverageEntry> invest_assessment(const StudyConfig& study, const std::vector<GridResult>& grids,
                                                    const std::vector<int>& years) {
    std::vector<CoverageEntry> out;
    for (const GridResult& g : grids) {
        if (g.topology != Topology::CES) throw DomainError("investment assessment needs CES grids");
        for (int y : years) {
            std::vector<double> afb, cost;
            for (const CellResult& c : g.cells) {
                if (c.excluded || !c.error.empty() || !c.reduction) continue;
                const ScenarioConfig sc = build_scenario(study, g.scenario, Topology::CES, c.pv_area, c.bes, y);
                afb.push_back(c.reduction->afb_opt_total / g.households);
                cost.push_back(community_eac(sc, c.reduction->bes_opt) / g.households);
            }
            CoverageEntry e;
            e.scenario = g.scenario;
            e.year = y;
            e.cells = static_cast<int>(afb.size());
            if (e.cells > 0) {
                e.mean_afb = mean(afb);
                e.mean_eac = mean(cost);
                e.coverage = e.mean_eac > 0.0 ? coverage_ratio(e.mean_afb, e.mean_eac)
                                              : std::numeric_limits<double>::infinity();
            }
            out.push_back(e);
        }
    }
    return out;
}

}  // namespace cesopt

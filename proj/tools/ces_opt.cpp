// ces-opt: run, sweep, reduce, invest, emit and synth commands.

#include "cesopt/cesopt.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cesopt;

namespace {

struct Manifest {
    std::string config;
    std::string data_dir;
    std::string out;
    std::optional<int> scenario;
    std::optional<std::string> topology;
    std::optional<double> pv;
    std::optional<double> bes;
    std::vector<int> years;
    std::optional<unsigned long long> seed;
    int jobs = default_jobs();
    std::vector<std::string> from;   // emit: grid JSON files
};

struct Context {
    ResolvedConfig cfg;
    Manifest m;
    SyntheticDataset data;
    bool data_loaded = false;

    StudyConfig& study() { return cfg.study; }

    int scenario(int fallback) const {
        const int id = m.scenario ? *m.scenario : cfg.selectors.scenario.value_or(fallback);
        scenario_flags(id);
        return id;
    }
    std::optional<int> scenario_if_set() const {
        if (m.scenario) return scenario(0);
        if (cfg.selectors.scenario) return *cfg.selectors.scenario;
        return std::nullopt;
    }
    std::optional<Topology> topology() const {
        if (m.topology) return parse_topology(*m.topology);
        return cfg.selectors.topology;
    }
    double pv(double fallback) const { return m.pv ? *m.pv : cfg.selectors.pv.value_or(fallback); }
    double bes(double fallback) const { return m.bes ? *m.bes : cfg.selectors.bes.value_or(fallback); }
    std::vector<int> years() const { return m.years.empty() ? cfg.study.years : m.years; }
    int year() const { return cfg.study.reference_year; }

    const SyntheticDataset& dataset() {
        if (!data_loaded) {
            const StudyConfig& s = cfg.study;
            data = s.data_dir.empty() ? synth_profiles(s.seed, s.households) : load_dataset(s.data_dir, s.households);
            data_loaded = true;
        }
        return data;
    }

    std::string out(const std::string& name) const { return (fs::path(m.out) / name).string(); }
};

void prepare(Context& c) {
    if (!c.m.config.empty()) c.cfg = parse_config(c.m.config);
    if (!c.m.data_dir.empty()) c.cfg.study.data_dir = c.m.data_dir;
    if (c.m.seed) c.cfg.study.seed = *c.m.seed;
    if (c.m.jobs < 1) throw ConfigError("--jobs must be >= 1");
    if (c.m.out.empty()) throw ConfigError("--out is required");
    std::error_code ec;
    fs::create_directories(c.m.out, ec);
    if (ec || !fs::is_directory(c.m.out)) throw DataError("output directory not writable: " + c.m.out);
}

std::string cell_key(int scenario, Topology t, double pv, double bes) {
    return "s" + std::to_string(scenario) + "_" + to_string(t) + "_pv" + fmt(pv, 1) + "_bes" + fmt(bes, 1);
}

DispatchResult baseline_for(const StudyConfig& study, const ScenarioConfig& c, const AnnualInputs& in) {
    ScenarioConfig c0 = build_scenario(study, c.id, Topology::CES, c.pv_area, 0.0, c.year);
    const ProsumerStage st = prosumer_stage(in, c0.sys, c0.settings);
    if (c.topology == Topology::CES && study.afb_baseline == AfbBaseline::zero_capacity_ces)
        return operator_stage(in, c0.sys, c0.settings, st);
    DispatchSettings hs = c0.settings;
    hs.topology = Topology::HES;
    hs.arbitrage = false;
    return assemble_hes(in, c0.sys, hs, st);
}

void print_kpi(const std::string& key, const KpiReport& k) {
    const double H = k.households;
    std::printf("%s: AFB %.2f EUR/a per household (operator %.2f), EAC %.2f, EAV %.2f\n", key.c_str(), k.afb_total / H,
                k.afb_op / H, k.eac / H, k.eav / H);
    if (k.scr_set)
        std::printf("  SCR %.4f (el %.4f, hp %.4f, storage %.4f)  SSR %.4f  UR %.4f\n", k.scr_set->tot, k.scr_set->el,
                    k.scr_set->hp, k.scr_set->storage, k.ssr, k.ur);
    else
        std::printf("  SCR n/a (no PV)  SSR %.4f  UR %.4f\n", k.ssr, k.ur);
}

int cmd_run(Context& c) {
    prepare(c);
    const int id = c.scenario(1);
    const Topology topo = c.topology().value_or(Topology::CES);
    const ScenarioConfig sc = build_scenario(c.study(), id, topo, c.pv(15.0), c.bes(5.0), c.year());
    const AnnualInputs in = make_inputs(c.dataset(), sc);
    const DispatchResult res = rolling_run(in, sc.sys, sc.settings);
    const DispatchResult base = baseline_for(c.study(), sc, in);
    const KpiReport k = make_kpi(res, base, in, topo, community_eac(sc, sc.bes_per_household), c.study().ur_mode);
    const std::string key = cell_key(id, topo, sc.pv_area, sc.bes_per_household);
    write_text(c.out(key + "_flows.csv"), flows_csv(res, in));
    json j = kpi_to_json(k);
    j["scenario"] = id;
    j["topology"] = to_string(topo);
    j["pv_area"] = sc.pv_area;
    j["bes"] = sc.bes_per_household;
    j["year"] = sc.year;
    write_text(c.out(key + "_kpi.json"), j.dump(2) + "\n");
    print_kpi(key, k);
    return 0;
}

std::vector<int> scenario_list(const Context& c) {
    if (auto s = c.scenario_if_set()) return {*s};
    return {1, 2, 3, 4, 5};
}

std::vector<Topology> topology_list(const Context& c) {
    if (auto t = c.topology()) return {*t};
    return {Topology::HES, Topology::CES};
}

void emit_grid(Context& c, const GridResult& g) {
    write_grid_tables(c.m.out, g);
    write_text(c.out(grid_key(g) + ".json"), grid_to_json(g).dump(1) + "\n");
    const std::string err = cell_errors_text(g);
    if (!err.empty()) {
        std::fputs(err.c_str(), stderr);
        write_text(c.out(grid_key(g) + "_errors.txt"), err);
    }
    const auto it = g.summary.find("afb");
    std::printf("%s: mean AFB %s EUR/a per household, %d failed cells\n", grid_key(g).c_str(),
                it == g.summary.end() ? "NA" : fmt(it->second.mean, 2).c_str(), g.failures());
}

int cmd_sweep(Context& c) {
    prepare(c);
    const std::vector<int> years = c.years();
    const bool coverage = !c.m.years.empty();
    std::vector<GridResult> grids, ces;
    for (int id : scenario_list(c))
        for (Topology t : topology_list(c)) {
            GridOptions o;
            o.jobs = c.m.jobs;
            o.reduction = coverage && t == Topology::CES;
            grids.push_back(run_sensitivity_grid(c.study(), id, t, c.year(), c.dataset(), o));
            emit_grid(c, grids.back());
            if (t == Topology::CES) ces.push_back(grids.back());
        }
    write_text(c.out("summary.csv"), summary_csv(grids));
    if (coverage) {
        if (ces.empty()) throw ConfigError("the coverage table needs the CES topology");
        write_text(c.out("coverage.csv"), coverage_csv(invest_assessment(c.study(), ces, years)));
    }
    return 0;
}

int cmd_invest(Context& c) {
    prepare(c);
    if (auto t = c.topology(); t && *t != Topology::CES) throw ConfigError("invest needs the CES topology");
    std::vector<GridResult> grids;
    for (int id : scenario_list(c)) {
        GridOptions o;
        o.jobs = c.m.jobs;
        o.reduction = true;
        grids.push_back(run_sensitivity_grid(c.study(), id, Topology::CES, c.year(), c.dataset(), o));
        emit_grid(c, grids.back());
    }
    write_text(c.out("summary.csv"), summary_csv(grids));
    const auto entries = invest_assessment(c.study(), grids, c.years());
    write_text(c.out("coverage.csv"), coverage_csv(entries));
    for (const auto& e : entries)
        std::printf("scenario %d, %d: coverage %s (AFB %s, EAC %s EUR/a per household)\n", e.scenario, e.year,
                    fmt(e.coverage, 3).c_str(), fmt(e.mean_afb, 2).c_str(), fmt(e.mean_eac, 2).c_str());
    return 0;
}

int cmd_reduce(Context& c) {
    prepare(c);
    if (auto t = c.topology(); t && *t != Topology::CES) throw ConfigError("reduce needs the CES topology");
    const int id = c.scenario(1);
    const double pv = c.pv(7.5), bes = c.bes(2.5);
    const StudyConfig& study = c.study();
    const ScenarioConfig ces_cfg = build_scenario(study, id, Topology::CES, pv, bes, c.year());
    const ScenarioConfig hes_cfg = build_scenario(study, id, Topology::HES, pv, bes, c.year());
    const AnnualInputs in = make_inputs(c.dataset(), ces_cfg);
    const std::string key = "s" + std::to_string(id) + "_pv" + fmt(pv, 1) + "_bes" + fmt(bes, 1);

    CapacitySweep ces(in, ces_cfg.sys, ces_cfg.settings, study.ur_mode);
    CapacitySweep hes(in, hes_cfg.sys, hes_cfg.settings, study.ur_mode);
    const DispatchResult ces_run = ces.run(1.0);
    const DispatchResult hes_run = hes.run(1.0);

    std::vector<PlotSeries> dur;
    auto add_duration = [&](const DispatchResult& r, std::size_t i) {
        const DurationCurve d = soc_duration_curve(r, i);
        write_duration_curve_csv(c.out(key + "_duration_" + d.label + ".csv"), d);
        PlotSeries s{d.label, {}, d.values};
        for (std::size_t k = 0; k < d.values.size(); ++k) s.x.push_back(static_cast<double>(k + 1));
        dur.push_back(std::move(s));
    };
    for (std::size_t i = 0; i < ces_run.storages.size(); ++i) add_duration(ces_run, i);
    for (std::size_t i = 0; i < hes_run.storages.size(); ++i) add_duration(hes_run, i);
    write_text(c.out(key + "_duration.svg"), svg_line_plot("SOC duration curves", "rank", "relative SOC", dur));

    ReductionOptions ro = study.reduction;
    const ReductionCurve cc = sc_vs_capacity(ces, study.curve_fractions, c.m.jobs, ro);
    ro.search_opt = false;
    const ReductionCurve hc = sc_vs_capacity(hes, study.curve_fractions, c.m.jobs, ro);
    write_reduction_csv(c.out(key + "_reduction_ces.csv"), cc);
    write_reduction_csv(c.out(key + "_reduction_hes.csv"), hc);
    json ann = {{"cell", {{"scenario", id}, {"pv_area", pv}, {"bes", bes}}},
                {"ces", reduction_annotation(cc)},
                {"hes", reduction_annotation(hc)}};
    ann["hes"].erase("ces_opt");
    ann["hes"].erase("ces_dir");
    write_text(c.out(key + "_reduction.json"), ann.dump(2) + "\n");
    std::vector<PlotSeries> red;
    for (const auto* cur : {&cc, &hc}) {
        PlotSeries s{to_string(cur->topology), {}, {}};
        for (const auto& p : cur->points) {
            s.x.push_back(p.capacity_quotient);
            s.y.push_back(p.sc_quotient);
        }
        red.push_back(std::move(s));
    }
    write_text(c.out(key + "_reduction.svg"),
               svg_line_plot("Stored self-consumption vs. capacity", "capacity quotient", "SC quotient", red));
    std::printf("%s: CES_OPT %.2f, CES_DIR %.4f, initial stored SC %.1f kWh/a\n", key.c_str(), cc.ces_opt, cc.ces_dir,
                cc.initial_sc);
    return 0;
}

int cmd_emit(Context& c) {
    if (c.m.out.empty()) throw ConfigError("--out is required");
    if (c.m.from.empty()) throw ConfigError("emit needs at least one grid JSON file");
    fs::create_directories(c.m.out);
    std::vector<GridResult> grids;
    for (const auto& p : c.m.from) {
        grids.push_back(load_grid_json(p));
        write_grid_tables(c.m.out, grids.back());
    }
    write_text(c.out("summary.csv"), summary_csv(grids));
    return 0;
}

int cmd_synth(Context& c) {
    prepare(c);
    write_dataset(c.m.out, c.dataset());
    std::printf("wrote %d households to %s\n", c.study().households, c.m.out.c_str());
    return 0;
}

void add_common(CLI::App* sub, Manifest& m) {
    sub->add_option("--config", m.config, "JSON configuration file");
    sub->add_option("--data", m.data_dir, "Input data directory (default: synthetic data)");
    sub->add_option("--out", m.out, "Output directory");
    sub->add_option("--seed", m.seed, "Seed of the synthetic dataset");
    sub->add_option("--jobs", m.jobs, "Parallel workers (default: CES_OPT_JOBS or hardware threads)");
}

void add_selectors(CLI::App* sub, Manifest& m) {
    sub->add_option("--scenario", m.scenario, "Scenario 1..5");
    sub->add_option("--topology", m.topology, "hes or ces");
    sub->add_option("--pv", m.pv, "PV area per household (m2)");
    sub->add_option("--bes", m.bes, "Storage per household (kWh)");
    sub->add_option("--years", m.years, "Investment years, e.g. 2015,2025,2035")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Community and household energy storage dispatch and assessment"};
    app.require_subcommand(1);
    Context ctx;
    Manifest& m = ctx.m;

    auto* run = app.add_subcommand("run", "Dispatch one grid cell and write flows and KPIs");
    auto* sweep = app.add_subcommand("sweep", "Run the PV x BES grid and write tables");
    auto* reduce = app.add_subcommand("reduce", "Capacity reduction analysis for one cell");
    auto* invest = app.add_subcommand("invest", "Cost coverage of the downsized CES across years");
    auto* emit = app.add_subcommand("emit", "Re-emit tables from stored grid JSON");
    auto* synth = app.add_subcommand("synth", "Write the synthetic dataset as CSV");
    for (auto* s : {run, sweep, reduce, invest, synth}) {
        add_common(s, m);
        add_selectors(s, m);
    }
    emit->add_option("--from", m.from, "Grid JSON files")->required();
    emit->add_option("--out", m.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(ctx);
        if (sweep->parsed()) return cmd_sweep(ctx);
        if (reduce->parsed()) return cmd_reduce(ctx);
        if (invest->parsed()) return cmd_invest(ctx);
        if (emit->parsed()) return cmd_emit(ctx);
        if (synth->parsed()) return cmd_synth(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible dispatch: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#pragma once

// Strict JSON configuration: every key is optional, unknown keys are errors,
// and all errors name the offending key path.

#include "cesopt/error.hpp"
#include "cesopt/scenarios.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace cesopt {

// Run selectors that a config file may preset; CLI flags override them.
struct Selectors {
    std::optional<int> scenario;
    std::optional<Topology> topology;
    std::optional<double> pv;
    std::optional<double> bes;
};

struct ResolvedConfig {
    StudyConfig study;
    Selectors selectors;
};

inline Topology parse_topology(const std::string& s) {
    if (s == "ces" || s == "CES") return Topology::CES;
    if (s == "hes" || s == "HES") return Topology::HES;
    throw ConfigError("unknown topology '" + s + "' (expected hes or ces)");
}

namespace config_detail {

using json = nlohmann::json;

// Walks one JSON object and records the keys it reads; finish() rejects the rest.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(key_path(key) + ": expected a number");
        out = v.get<double>();
    }

    void integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(key_path(key) + ": expected an integer");
        out = v.get<int>();
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(key_path(key) + ": expected true or false");
        out = v.get<bool>();
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(key_path(key) + ": expected a string");
        out = v.get<std::string>();
    }

    template <class T>
    void list(const std::string& key, std::vector<T>& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(key_path(key) + ": expected an array");
        std::vector<T> tmp;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const json& e = v[i];
            const bool ok = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
            if (!ok) throw ConfigError(key_path(key) + "[" + std::to_string(i) + "]: expected a number");
            tmp.push_back(e.get<T>());
        }
        out = std::move(tmp);
    }

    std::optional<Section> child(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return std::optional<Section>(std::in_place, j_.at(key), key_path(key));
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() {
        if (done_) return;
        done_ = true;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + key_path(it.key()) + "'");
    }

    Section(Section&&) = delete;
    Section(const Section&) = delete;

private:
    std::string where() const { return path_.empty() ? "configuration" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
    bool done_ = false;
};

inline void read_tariff(Section& s, TariffScheme& t) {
    s.number("sales_spot_mean", t.retail.sales_spot_mean);
    s.number("sales_margin", t.retail.sales_margin);
    s.number("grid_fees", t.retail.grid_fees);
    s.number("levies_taxes", t.retail.levies_taxes);
    s.number("feed_in", t.feed_in);
    s.number("vat_rate", t.vat_rate);
    s.boolean("ces_selfconsumption_exempt", t.ces_selfconsumption_exempt);
    s.boolean("ces_grid_fees_exempt", t.ces_grid_fees_exempt);
    if (auto g = s.child("gas")) {
        g->number("base", t.gas.base);
        g->number("grid_levies", t.gas.grid_levies);
        g->number("margin", t.gas.margin);
        g->finish();
    }
}

inline void read_cost(Section& s, CostInputs& c, CostTrend& trend) {
    s.number("cost_sm", c.cost_sm);
    s.number("cost_inv", c.cost_inv);
    s.number("C_l", c.C_l);
    s.number("C_k", c.C_k);
    s.number("cell_exponent", c.cell_exponent);
    s.number("inverter_exponent", c.inverter_exponent);
    s.number("inverter_sizing", c.inverter_sizing);
    s.number("om_rate_ces", c.om_rate_ces);
    s.number("om_rate_hes", c.om_rate_hes);
    s.number("interest", c.interest);
    s.integer("lifetime_years", c.lifetime_years);
    s.boolean("cells_linear_below_threshold", c.cells_linear_below_threshold);
    s.boolean("inverter_linear_below_threshold", c.inverter_linear_below_threshold);
    if (s.has("trend")) {
        const json& arr = s.raw("trend");
        const std::string path = s.key_path("trend");
        if (!arr.is_array() || arr.empty()) throw ConfigError(path + ": expected a non-empty array");
        std::map<int, YearPrices> pts;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Section e(arr[i], path + "[" + std::to_string(i) + "]");
            int year = 0;
            YearPrices p;
            if (!e.has("year") || !e.has("cost_sm") || !e.has("cost_inv"))
                throw ConfigError(path + "[" + std::to_string(i) + "]: needs year, cost_sm and cost_inv");
            e.integer("year", year);
            e.number("cost_sm", p.cost_sm);
            e.number("cost_inv", p.cost_inv);
            e.finish();
            if (!pts.emplace(year, p).second) throw ConfigError(path + ": duplicate year " + std::to_string(year));
        }
        try {
            trend = CostTrend(std::move(pts));
        } catch (const DomainError& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
}

inline void read_devices(Section& s, StudyConfig& c) {
    if (auto pv = s.child("pv")) {
        pv->number("efficiency", c.pv.efficiency);
        pv->finish();
    }
    if (auto hp = s.child("hp")) {
        hp->number("thermal_power_max", c.hp.thermal_power_max);
        hp->number("cop", c.hp.cop);
        hp->boolean("ngb_backup", c.ngb_backup);
        hp->finish();
    }
    if (auto ngb = s.child("ngb")) {
        ngb->number("thermal_power_max", c.ngb.thermal_power_max);
        ngb->number("efficiency", c.ngb.efficiency);
        ngb->finish();
    }
    if (auto b = s.child("bes")) {
        b->number("eff_charge", c.bes.eff_charge);
        b->number("eff_discharge", c.bes.eff_discharge);
        b->number("self_discharge_per_step", c.bes.self_discharge_per_step);
        b->integer("lifetime_years", c.bes.lifetime_years);
        b->finish();
    }
}

}  // namespace config_detail

// Parses configuration text. Missing keys keep their defaults.
inline ResolvedConfig parse_config_text(const std::string& text) {
    using namespace config_detail;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    ResolvedConfig rc;
    StudyConfig& c = rc.study;
    {
        Section root(j, "");
        root.integer("households", c.households);
        root.integer("reference_year", c.reference_year);
        root.list("years", c.years);
        root.number("dr_max_share", c.dr_max_share);
        root.number("dr_window_hours", c.dr_window_hours);
        root.boolean("dr_symmetric", c.dr_symmetric);
        if (auto d = root.child("data")) {
            d->string("dir", c.data_dir);
            if (d->has("seed")) {
                const json& v = d->raw("seed");
                if (!v.is_number_unsigned()) throw ConfigError("data.seed: expected a non-negative integer");
                c.seed = v.get<unsigned long long>();
            }
            d->finish();
        }
        if (auto g = root.child("grid")) {
            g->list("pv_areas", c.pv_areas);
            g->list("bes_sizes", c.bes_sizes);
            g->finish();
        }
        if (auto t = root.child("tariff")) {
            read_tariff(*t, c.tariff);
            t->finish();
        }
        if (auto k = root.child("cost")) {
            read_cost(*k, c.cost, c.trend);
            k->finish();
        }
        if (auto d = root.child("devices")) {
            read_devices(*d, c);
            d->finish();
        }
        if (auto d = root.child("dispatch")) {
            d->number("window_hours", c.window_hours);
            d->number("terminal_soc_value", c.terminal_soc_value);
            d->number("tie_break", c.tie_break);
            d->boolean("arbitrage", c.arbitrage);
            d->boolean("sharing", c.sharing);
            d->finish();
        }
        if (auto a = root.child("assessment")) {
            std::string ur = "state", base = "no_storage";
            a->string("ur_mode", ur);
            a->string("afb_baseline", base);
            a->finish();
            if (ur == "state") c.ur_mode = UrMode::state;
            else if (ur == "flow") c.ur_mode = UrMode::flow;
            else throw ConfigError("assessment.ur_mode: expected 'state' or 'flow'");
            if (base == "no_storage") c.afb_baseline = AfbBaseline::no_storage;
            else if (base == "zero_capacity_ces") c.afb_baseline = AfbBaseline::zero_capacity_ces;
            else throw ConfigError("assessment.afb_baseline: expected 'no_storage' or 'zero_capacity_ces'");
        }
        if (auto r = root.child("reduction")) {
            r->number("tolerance", c.reduction.tolerance);
            r->number("resolution", c.reduction.resolution);
            r->list("curve_fractions", c.curve_fractions);
            r->finish();
        }
        if (auto s = root.child("scenario")) {
            if (s->has("id")) {
                int id = 0;
                s->integer("id", id);
                rc.selectors.scenario = id;
            }
            if (s->has("topology")) {
                std::string t;
                s->string("topology", t);
                rc.selectors.topology = parse_topology(t);
            }
            if (s->has("pv")) {
                double v = 0;
                s->number("pv", v);
                rc.selectors.pv = v;
            }
            if (s->has("bes")) {
                double v = 0;
                s->number("bes", v);
                rc.selectors.bes = v;
            }
            s->finish();
        }
        root.finish();
    }
    try {
        c.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (!(c.reduction.tolerance >= 0.0 && c.reduction.tolerance < 1.0))
        throw ConfigError("reduction.tolerance must lie in [0, 1)");
    if (!(c.reduction.resolution > 0.0 && c.reduction.resolution <= 1.0))
        throw ConfigError("reduction.resolution must lie in (0, 1]");
    if (rc.selectors.scenario) scenario_flags(*rc.selectors.scenario);
    return rc;
}

inline ResolvedConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read configuration file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace cesopt

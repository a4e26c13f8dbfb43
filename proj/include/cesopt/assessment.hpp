#pragma once

// KPIs from annual dispatch results: financial benefit, equivalent annual
// value, self-consumption and self-sufficiency ratios, utilization.

#include "cesopt/dispatch.hpp"
#include "cesopt/error.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace cesopt {

enum class UrMode { state, flow };

struct EnergyAggregates {
    double E_PV = 0.0, E_EL = 0.0, E_HP = 0.0;
    double E_EL_from_PV = 0.0, E_HP_from_PV = 0.0, E_storage_from_PV = 0.0;
    double E_GC = 0.0;
    long long T_charged = 0, T_all = 0;

    double self_consumption() const { return E_EL_from_PV + E_HP_from_PV + E_storage_from_PV; }
};

inline constexpr double kChargedSocThreshold = 1e-6;   // kWh

// Community totals. For several household storages T_charged and T_all add
// up, so the ratio is their mean utilization.
inline EnergyAggregates aggregate(const DispatchResult& r, const AnnualInputs& in, UrMode mode = UrMode::state) {
    EnergyAggregates a;
    const std::size_t n = static_cast<std::size_t>(r.steps);
    for (std::size_t h = 0; h < r.households.size(); ++h) {
        const auto& f = r.households[h];
        const auto& hs = in.households[h];
        for (std::size_t t = 0; t < n; ++t) {
            a.E_PV += hs.pv[t];
            a.E_EL += f.load_el[t];
            a.E_HP += f.hp_el[t];
            a.E_EL_from_PV += f.pv_to_load[t];
            a.E_HP_from_PV += f.pv_to_hp[t];
            a.E_storage_from_PV += f.pv_to_storage[t] + f.pv_to_community[t];
            a.E_GC += f.grid_to_load[t] + f.grid_to_hp[t];
        }
    }
    for (const auto& s : r.storages) {
        a.T_all += static_cast<long long>(n);
        for (std::size_t t = 0; t < n; ++t) {
            const bool charged = mode == UrMode::state ? s.soc[t] > kChargedSocThreshold : s.charge[t] > 1e-9;
            if (charged) ++a.T_charged;
        }
    }
    return a;
}

struct ScrSet {
    double tot = 0.0, el = 0.0, hp = 0.0, storage = 0.0;
};

// Empty when there is no PV generation.
inline std::optional<ScrSet> scr(const EnergyAggregates& a) {
    if (!(a.E_PV > 0.0)) return std::nullopt;
    ScrSet s;
    s.el = a.E_EL_from_PV / a.E_PV;
    s.hp = a.E_HP_from_PV / a.E_PV;
    s.storage = a.E_storage_from_PV / a.E_PV;
    s.tot = s.el + s.hp + s.storage;
    return s;
}

inline double ssr(const EnergyAggregates& a) {
    const double demand = a.E_EL + a.E_HP;
    if (!(demand > 0.0)) throw DomainError("self-sufficiency needs a positive demand");
    return 1.0 - a.E_GC / demand;
}

inline double ur(const EnergyAggregates& a) {
    if (a.T_all <= 0) return 0.0;
    return static_cast<double>(a.T_charged) / static_cast<double>(a.T_all);
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw DomainError("mean of an empty sequence");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Coefficient of variation with the population standard deviation.
inline double cv(const std::vector<double>& v) {
    const double mu = mean(v);
    if (mu == 0.0) throw DomainError("coefficient of variation undefined for zero mean");
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size())) / std::abs(mu);
}

inline double coverage_ratio(double afb_total, double eac_value) {
    if (!(eac_value > 0.0)) throw DomainError("coverage ratio needs a positive EAC");
    return afb_total / eac_value;
}

struct AfbResult {
    std::vector<double> afb_eu;
    double afb_op = 0.0;
    double afb_total = 0.0;
};

// Benefit of `with_storage` over `baseline` (same inputs, no storage, no
// sharing). Household storage has no operator, so its operator share is 0.
inline AfbResult afb(const DispatchResult& with_storage, const DispatchResult& baseline, Topology topology) {
    if (with_storage.households.size() != baseline.households.size() || with_storage.steps != baseline.steps)
        throw DomainError("AFB needs matching configurations");
    AfbResult a;
    for (std::size_t h = 0; h < baseline.households.size(); ++h) {
        a.afb_eu.push_back(baseline.households[h].eu_cost - with_storage.households[h].eu_cost);
        a.afb_total += a.afb_eu.back();
    }
    a.afb_op = topology == Topology::CES ? with_storage.op_profit - baseline.op_profit : 0.0;
    a.afb_total += a.afb_op;
    return a;
}

struct KpiReport {
    std::vector<double> afb_eu;   // EUR/a per household
    double afb_op = 0.0, afb_total = 0.0;
    double eac = 0.0;             // EUR/a for the whole community
    double eav = 0.0;
    std::optional<ScrSet> scr_set;
    double ssr = 0.0, ur = 0.0;
    double self_consumption = 0.0, sc_storage = 0.0;   // kWh/a
    double arbitrage_profit = 0.0;
    int households = 0;

    double per_household(double v) const { return households > 0 ? v / households : 0.0; }
};

inline KpiReport make_kpi(const DispatchResult& with_storage, const DispatchResult& baseline, const AnnualInputs& in,
                          Topology topology, double eac_total, UrMode mode = UrMode::state) {
    KpiReport k;
    const AfbResult a = afb(with_storage, baseline, topology);
    k.afb_eu = a.afb_eu;
    k.afb_op = a.afb_op;
    k.afb_total = a.afb_total;
    k.eac = eac_total;
    k.eav = k.afb_total - k.eac;
    const EnergyAggregates agg = aggregate(with_storage, in, mode);
    k.scr_set = scr(agg);
    k.ssr = ssr(agg);
    k.ur = ur(agg);
    k.self_consumption = agg.self_consumption();
    k.sc_storage = agg.E_storage_from_PV;
    k.arbitrage_profit = with_storage.arbitrage_profit;
    k.households = static_cast<int>(with_storage.households.size());
    return k;
}

}  // namespace cesopt

#pragma once

// Capacity reduction analysis: SOC duration curves, stored self-consumption
// as a function of storage capacity, CES_OPT and CES_DIR.

#include "cesopt/assessment.hpp"
#include "cesopt/dispatch.hpp"
#include "cesopt/error.hpp"
#include "cesopt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace cesopt {

struct DurationCurve {
    std::vector<double> values;   // relative SOC, descending
    std::string label;
};

inline DurationCurve soc_duration_curve(const DispatchResult& r, std::size_t storage_id) {
    if (storage_id >= r.storages.size())
        throw DomainError("unknown storage id " + std::to_string(storage_id) + " (run has " +
                          std::to_string(r.storages.size()) + ")");
    const StorageTrace& tr = r.storages[storage_id];
    DurationCurve c;
    c.label = r.topology == Topology::CES ? "ces" : "hes" + std::to_string(storage_id + 1);
    c.values.resize(tr.soc.size(), 0.0);
    if (tr.spec.capacity > 0.0)
        for (std::size_t t = 0; t < tr.soc.size(); ++t) c.values[t] = std::clamp(tr.soc[t] / tr.spec.capacity, 0.0, 1.0);
    std::sort(c.values.begin(), c.values.end(), std::greater<>());
    return c;
}

// Compact outcome of one annual run at a scaled capacity.
struct CapacityRun {
    double fraction = 0.0;
    double sc_storage = 0.0;   // kWh/a of PV self-consumed through storage (and sharing)
    double eu_cost = 0.0;      // EUR/a, all households
    double op_profit = 0.0;    // EUR/a
    double ur = 0.0;
};

// Re-dispatches one configuration at fractions of its storage capacity.
// `sys.bes.capacity` is the initial size: pooled for CES, per household for
// HES. Power limits scale with capacity since P/E is held fixed. Results are
// memoized per fraction; calls from several threads are safe.
class CapacitySweep {
public:
    CapacitySweep(const AnnualInputs& in, SystemSpec sys, DispatchSettings s, UrMode ur_mode = UrMode::state)
        : in_(&in), sys_(std::move(sys)), s_(std::move(s)), ur_mode_(ur_mode) {
        sys_.bes.validate();
    }

    // Supplies a step-1 stage computed elsewhere (CES only; it does not
    // depend on the pooled capacity).
    void set_prosumer_stage(std::shared_ptr<const ProsumerStage> st) {
        std::lock_guard<std::mutex> lock(m_);
        stage_ = std::move(st);
    }

    const SystemSpec& system() const { return sys_; }
    const DispatchSettings& settings() const { return s_; }
    Topology topology() const { return s_.topology; }

    DispatchResult run(double fraction) {
        if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("capacity fraction must lie in [0, 1]");
        SystemSpec sys = sys_;
        sys.bes = sys_.bes.scaled(fraction);
        if (s_.topology == Topology::HES) return rolling_run(*in_, sys, s_);
        return operator_stage(*in_, sys, s_, *ces_stage());
    }

    CapacityRun evaluate(double fraction) {
        const long long key = std::llround(fraction * 1e9);
        {
            std::lock_guard<std::mutex> lock(m_);
            auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
        }
        const DispatchResult r = run(fraction);
        CapacityRun c;
        c.fraction = fraction;
        const EnergyAggregates agg = aggregate(r, *in_, ur_mode_);
        c.sc_storage = agg.E_storage_from_PV;
        c.eu_cost = r.eu_cost_total();
        c.op_profit = r.op_profit;
        c.ur = ur(agg);
        std::lock_guard<std::mutex> lock(m_);
        memo_.emplace(key, c);
        return c;
    }

    // Registers a run that was already computed (e.g. the full-size KPI run).
    void remember(const CapacityRun& c) {
        std::lock_guard<std::mutex> lock(m_);
        memo_.emplace(std::llround(c.fraction * 1e9), c);
    }

    double sc_storage(double fraction) { return evaluate(fraction).sc_storage; }

    double initial_sc() { return sc_storage(1.0); }

    double sc_quotient(double fraction) {
        const double base = initial_sc();
        if (!(base > 0.0)) throw DomainError("no stored self-consumption at full capacity");
        return sc_storage(fraction) / base;
    }

    std::vector<CapacityRun> evaluated() {
        std::lock_guard<std::mutex> lock(m_);
        std::vector<CapacityRun> v;
        for (const auto& [k, c] : memo_) v.push_back(c);
        return v;
    }

private:
    std::shared_ptr<const ProsumerStage> ces_stage() {
        std::lock_guard<std::mutex> lock(m_);
        if (!stage_) stage_ = std::make_shared<const ProsumerStage>(prosumer_stage(*in_, sys_, s_));
        return stage_;
    }

    const AnnualInputs* in_;
    SystemSpec sys_;
    DispatchSettings s_;
    UrMode ur_mode_;
    std::mutex m_;
    std::shared_ptr<const ProsumerStage> stage_;
    std::map<long long, CapacityRun> memo_;
};

struct ReductionPoint {
    double capacity_quotient = 0.0;
    double sc_quotient = 0.0;
};

struct ReductionCurve {
    Topology topology = Topology::CES;
    std::vector<ReductionPoint> points;   // ascending capacity
    double ces_opt = 0.0;
    double ces_dir = 0.0;
    double initial_sc = 0.0;   // kWh/a

    bool monotone(double tol = 1e-6) const {
        for (std::size_t i = 1; i < points.size(); ++i)
            if (points[i].sc_quotient < points[i - 1].sc_quotient - tol) return false;
        return true;
    }
};

struct ReductionOptions {
    double tolerance = 1e-4;    // allowed loss of stored SC, as a fraction of the initial value
    double resolution = 0.01;   // capacity step of the CES_OPT search
    bool search_opt = true;     // false: evaluate the given fractions only
};

// Largest lossless capacity reduction: bisection over multiples of
// `resolution`, relying on SC being non-decreasing in capacity.
inline double find_ces_opt(CapacitySweep& sw, const ReductionOptions& o = {}) {
    if (!(o.resolution > 0.0 && o.resolution <= 1.0)) throw DomainError("resolution must lie in (0, 1]");
    if (!(o.tolerance >= 0.0)) throw DomainError("tolerance must be >= 0");
    const double base = sw.initial_sc();
    if (!(base > 0.0)) return 0.0;
    const long K = std::lround(1.0 / o.resolution);
    auto ok = [&](long k) { return sw.sc_storage(static_cast<double>(k) / static_cast<double>(K)) >= (1.0 - o.tolerance) * base; };
    if (ok(0)) return 1.0;
    long lo = 0, hi = K;
    while (hi - lo > 1) {
        const long mid = (lo + hi) / 2;
        if (ok(mid)) hi = mid;
        else lo = mid;
    }
    return 1.0 - static_cast<double>(hi) / static_cast<double>(K);
}

// Stored self-consumption that direct sharing alone recovers at zero capacity.
inline double ces_dir(CapacitySweep& sw) {
    if (sw.topology() != Topology::CES) throw DomainError("CES_DIR needs the CES topology");
    if (!sw.settings().sharing) return 0.0;
    return sw.sc_quotient(0.0);
}

// Evaluates the requested fractions (which must include 0 and 1) in parallel
// and adds CES_OPT/CES_DIR. The curve also carries every fraction the CES_OPT
// search visited.
inline ReductionCurve sc_vs_capacity(CapacitySweep& sw, const std::vector<double>& fractions, int jobs = 1,
                                     const ReductionOptions& o = {}) {
    auto has = [&](double f) {
        return std::any_of(fractions.begin(), fractions.end(), [&](double x) { return std::abs(x - f) < 1e-12; });
    };
    if (!has(0.0) || !has(1.0)) throw DomainError("capacity fractions must include 0 and 1");
    for (double f : fractions)
        if (!(f >= 0.0 && f <= 1.0)) throw DomainError("capacity fractions must lie in [0, 1]");
    sw.evaluate(1.0);
    parallel_for(fractions.size(), jobs, [&](std::size_t i) { sw.evaluate(fractions[i]); });

    ReductionCurve c;
    c.topology = sw.topology();
    c.initial_sc = sw.initial_sc();
    if (!(c.initial_sc > 0.0)) throw DomainError("no stored self-consumption at full capacity");
    c.ces_opt = o.search_opt ? find_ces_opt(sw, o) : 0.0;
    c.ces_dir = sw.topology() == Topology::CES ? ces_dir(sw) : 0.0;
    for (const CapacityRun& r : sw.evaluated()) c.points.push_back({r.fraction, r.sc_storage / c.initial_sc});
    std::sort(c.points.begin(), c.points.end(),
              [](const ReductionPoint& a, const ReductionPoint& b) { return a.capacity_quotient < b.capacity_quotient; });
    return c;
}

inline void write_duration_curve_csv(const std::string& path, const DurationCurve& c) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path);
    f << "rank,relative_soc\n";
    for (std::size_t i = 0; i < c.values.size(); ++i) f << i + 1 << ',' << detail::format_double(c.values[i]) << '\n';
}

inline void write_reduction_csv(const std::string& path, const ReductionCurve& c) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path);
    f << "capacity_quotient,sc_quotient\n";
    for (const auto& p : c.points) f << detail::format_double(p.capacity_quotient) << ',' << detail::format_double(p.sc_quotient) << '\n';
}

}  // namespace cesopt

#pragma once

// Case generators shared by the test suites and the acceptance runner.

#include "cesopt/cesopt.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace cesopt::testing {

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

// ---------------------------------------------------------------------------
// Window optimizer vs. DP oracle

enum class OracleKind { storage, storage_hp, storage_dr, dr_only, community };

inline const char* to_string(OracleKind k) {
    switch (k) {
        case OracleKind::storage: return "storage";
        case OracleKind::storage_hp: return "storage+hp";
        case OracleKind::storage_dr: return "storage+dr";
        case OracleKind::dr_only: return "dr-only";
        case OracleKind::community: return "community";
    }
    return "?";
}

struct OracleCase {
    int index = 0;
    OracleKind kind = OracleKind::storage;
    WindowProblem p;
};

// Inputs are rounded to 0.01 kWh so oracle grid points hit the optimum's
// kinks; storage+DR and DR-only cases stay within 8 steps.
inline std::vector<OracleCase> make_oracle_cases(unsigned long long seed, int n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<OracleCase> out;
    for (int c = 0; c < n; ++c) {
        OracleCase oc;
        oc.index = c;
        oc.kind = static_cast<OracleKind>(c % 5);
        const bool dr = oc.kind == OracleKind::storage_dr || oc.kind == OracleKind::dr_only;
        const int T = dr ? 4 + c % 5 : 4 + c % 9;
        WindowProblem& p = oc.p;
        p.steps = T;
        p.settings.topology = oc.kind == OracleKind::community ? Topology::CES : Topology::HES;
        p.sys.bes.capacity = oc.kind == OracleKind::storage_dr ? round2(0.3 + 0.4 * U(rng)) : round2(0.5 + 2.5 * U(rng));
        p.sys.bes.p_to_e = 1.0 + 3.0 * U(rng);
        if (oc.kind == OracleKind::dr_only) p.sys.bes.capacity = 0.0;
        const int H = oc.kind == OracleKind::community ? 2 : 1;
        p.settings.hp_enabled = oc.kind == OracleKind::storage_hp;
        p.settings.dr.enabled = dr;
        p.settings.dr.window_steps = 16;
        for (int h = 0; h < H; ++h) {
            HouseholdSeries s;
            for (int t = 0; t < T; ++t) {
                const double L = round2(0.1 + 0.6 * U(rng));
                const double sh = dr ? round2(0.4 * L) : 0.0;
                s.fixed.push_back(L - sh);
                s.shiftable.push_back(sh);
                s.heat.push_back(oc.kind == OracleKind::storage_hp ? round2(2.0 * U(rng)) : round2(0.5 * U(rng)));
                s.pv.push_back(U(rng) < 0.5 ? 0.0 : round2(1.5 * U(rng)));
            }
            p.households.push_back(std::move(s));
        }
        for (int t = 0; t < T; ++t) p.spot.push_back(0.01 + 0.06 * U(rng));
        p.soc0.assign(static_cast<std::size_t>(H), 0.0);
        if (oc.kind == OracleKind::storage) p.soc0[0] = round2(p.sys.bes.capacity * U(rng));
        out.push_back(std::move(oc));
    }
    return out;
}

struct OracleOutcome {
    double lp = 0.0;
    double dp = 0.0;
    double bound = 0.0;       // allowed DP - LP
    bool exact = false;       // DR-only: exhaustive enumeration, bound 1e-9 both ways
    double arb_lp = 0.0, arb_dp = 0.0;   // community cases: arbitrage pass
    double seconds = 0.0;
    bool pass = false;
    std::string detail;
};

inline constexpr double kOracleGrid = 0.01;

inline OracleOutcome run_oracle_case(const OracleCase& oc) {
    const auto t0 = std::chrono::steady_clock::now();
    OracleOutcome r;
    const WindowProblem& p = oc.p;
    const double retail = retail_price(p.sys.tariff);
    r.bound = kOracleGrid * retail;
    if (oc.kind == OracleKind::dr_only) {
        r.lp = optimize_prosumer_window(p, 0).objective;
        r.dp = dr_shift_enumeration(p, 0);
        r.exact = true;
        r.pass = std::abs(r.lp - r.dp) <= 1e-9;
    } else if (oc.kind == OracleKind::community) {
        const int T = p.steps;
        std::vector<double> X(static_cast<std::size_t>(T), 0.0), R(static_cast<std::size_t>(T), 0.0);
        double households = 0.0;
        for (int h = 0; h < static_cast<int>(p.households.size()); ++h) {
            const ProsumerWindow w = optimize_prosumer_window(p, h);
            households += w.objective;
            for (int t = 0; t < T; ++t) {
                X[static_cast<std::size_t>(t)] += w.exp[static_cast<std::size_t>(t)];
                R[static_cast<std::size_t>(t)] += w.imp[static_cast<std::size_t>(t)];
            }
        }
        const OperatorWindow ow = optimize_operator_window(p, R, X);
        r.lp = households + ow.community_objective;
        r.dp = dp_oracle(p, kOracleGrid);
        r.arb_lp = ow.arbitrage_cost;
        r.arb_dp = dp_oracle_arbitrage(p, p.sys.bes.capacity, ow, kOracleGrid);
        const double arb_bound = kOracleGrid * 0.07;   // spot prices stay below 0.07 EUR/kWh
        r.pass = r.lp <= r.dp + 1e-6 && r.dp - r.lp <= r.bound && r.arb_lp <= r.arb_dp + 1e-6 &&
                 r.arb_dp - r.arb_lp <= arb_bound;
    } else {
        r.lp = optimize_prosumer_window(p, 0).objective;
        r.dp = dp_oracle_prosumer(p, 0, kOracleGrid);
        r.pass = r.lp <= r.dp + 1e-6 && r.dp - r.lp <= r.bound;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[256];
    std::snprintf(buf, sizeof buf, "case %d (%s, %d steps): lp %.9f dp %.9f gap %.3g bound %.3g", oc.index,
                  to_string(oc.kind), p.steps, r.lp, r.dp, r.dp - r.lp, r.exact ? 1e-9 : r.bound);
    r.detail = buf;
    return r;
}

// ---------------------------------------------------------------------------
// Short randomized rolling runs for the invariant suite

struct PropertyCase {
    int index = 0;
    AnnualInputs in;
    SystemSpec sys;
    DispatchSettings settings;
    std::string label;
};

inline constexpr int kPropertyDays = 7;

// Seven-day runs cut from the synthetic dataset at random offsets, with random
// topology, scenario flags, PV size, capacity and P/E.
inline std::vector<PropertyCase> make_property_cases(const SyntheticDataset& ds, unsigned long long seed, int n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const std::size_t len = static_cast<std::size_t>(kPropertyDays * kStepsPerDay);
    const int days = static_cast<int>(ds.spot.size() / kStepsPerDay) - kPropertyDays;
    std::vector<PropertyCase> out;
    StudyConfig study;
    for (int c = 0; c < n; ++c) {
        const int scenario = 1 + static_cast<int>(U(rng) * 5.0) % 5;
        const Topology topo = U(rng) < 0.5 ? Topology::HES : Topology::CES;
        const double pv = 30.0 * U(rng);
        const double bes = 10.0 * U(rng);
        const std::size_t off = static_cast<std::size_t>(static_cast<int>(U(rng) * days) % days) * kStepsPerDay;
        ScenarioConfig sc = build_scenario(study, scenario, topo, pv, bes, 2015);
        SyntheticDataset cut;
        for (std::size_t h = 0; h < ds.load.size(); ++h) {
            cut.load.push_back(ds.load[h].slice(off, len));
            cut.heat.push_back(ds.heat[h].slice(off, len));
        }
        cut.pv_yield = ds.pv_yield.slice(off, len);
        cut.spot = ds.spot.slice(off, len);
        PropertyCase pc;
        pc.index = c;
        pc.in = make_inputs(cut, sc);
        pc.sys = sc.sys;
        pc.settings = sc.settings;
        if (U(rng) < 0.25) pc.settings.dr.symmetric = false;
        char buf[160];
        std::snprintf(buf, sizeof buf, "run %d: scenario %d %s pv %.2f bes %.2f day %zu%s", c, scenario,
                      cesopt::to_string(topo), pv, bes, off / kStepsPerDay,
                      pc.settings.dr.symmetric ? "" : " delay-only");
        pc.label = buf;
        out.push_back(std::move(pc));
    }
    return out;
}

// Balance checks of the dispatch plus the KPI identities.
inline std::vector<std::string> property_violations(const PropertyCase& pc, double tol = 1e-6) {
    const DispatchResult r = rolling_run(pc.in, pc.sys, pc.settings);
    std::vector<std::string> bad = check_invariants(r, pc.in, pc.settings, tol);
    const EnergyAggregates agg = aggregate(r, pc.in);
    if (auto s = scr(agg)) {
        if (std::abs(s->tot - (s->el + s->hp + s->storage)) > tol) bad.push_back("SCR decomposition");
        if (s->tot > 1.0 + tol || s->tot < -tol) bad.push_back("SCR outside [0, 1]");
    }
    const double s = ssr(agg), u = ur(agg);
    if (s < -tol || s > 1.0 + tol) bad.push_back("SSR outside [0, 1]");
    if (u < -tol || u > 1.0 + tol) bad.push_back("UR outside [0, 1]");
    // No simultaneous charge and discharge of one storage.
    for (const auto& tr : r.storages)
        for (std::size_t t = 0; t < tr.charge.size(); ++t)
            if (tr.charge[t] > tol && tr.discharge[t] > tol) {
                bad.push_back("simultaneous charge and discharge at step " + std::to_string(t));
                break;
            }
    return bad;
}

}  // namespace cesopt::testing

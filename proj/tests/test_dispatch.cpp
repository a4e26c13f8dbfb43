#include <gtest/gtest.h>

#include <cesopt/dispatch.hpp>
#include <cesopt/dp_oracle.hpp>

#include "support.hpp"

#include <cmath>
#include <numeric>

using namespace cesopt;

namespace {

HouseholdSeries household(std::vector<double> load, std::vector<double> pv, double shift_share = 0.0) {
    HouseholdSeries s;
    for (double l : load) {
        s.shiftable.push_back(shift_share * l);
        s.fixed.push_back(l - shift_share * l);
    }
    s.heat.assign(load.size(), 0.0);
    s.pv = std::move(pv);
    return s;
}

// Four steps, 3 kWh PV in step 1, a 2 kWh household battery that can take the
// whole surplus at once.
WindowProblem toy_problem(double capacity) {
    WindowProblem p;
    p.steps = 4;
    p.households = {household({1, 1, 1, 1}, {0, 3, 0, 0})};
    p.spot.assign(4, 0.03);
    p.sys.bes.capacity = capacity;
    p.sys.bes.p_to_e = 4.0;
    p.sys.bes.self_discharge_per_step = 0.0;
    p.settings.topology = Topology::HES;
    p.soc0 = {0.0};
    return p;
}

WindowProblem operator_problem(int T, double capacity) {
    WindowProblem p;
    p.steps = T;
    p.households = {household(std::vector<double>(T, 0.0), std::vector<double>(T, 0.0))};
    p.spot.assign(T, 0.03);
    p.sys.bes.capacity = capacity;
    p.sys.bes.p_to_e = 4.0;
    p.sys.bes.self_discharge_per_step = 0.0;
    p.settings.topology = Topology::CES;
    p.soc0 = {0.0};
    return p;
}

}  // namespace

TEST(ProsumerWindow, ToyStoresSurplus) {
    const WindowProblem p = toy_problem(2.0);
    const ProsumerWindow w = optimize_prosumer_window(p, 0);
    EXPECT_NEAR(w.cost, 0.3485, 5e-5);
    EXPECT_NEAR(w.exp[1], 0.0, 1e-9);
    EXPECT_NEAR(w.ch[1], 2.0, 1e-9);
    // Exhaustive oracle agrees.
    EXPECT_NEAR(dp_oracle_prosumer(p, 0, 0.01), 0.3485, 5e-5);
    // The two strategies by hand.
    const double retail = retail_price(p.sys.tariff), feed = p.sys.tariff.feed_in;
    EXPECT_NEAR(3.0 * retail - 2.0 * feed, 0.6268, 5e-5);
    EXPECT_NEAR((4.0 - 1.0 - 2.0 * 0.95 * 0.95) * retail, 0.3485, 5e-5);
}

TEST(ProsumerWindow, NoPvNoStorageBuysEverything) {
    WindowProblem p = toy_problem(0.0);
    p.households[0].pv.assign(4, 0.0);
    const ProsumerWindow w = optimize_prosumer_window(p, 0);
    EXPECT_NEAR(w.cost, 4.0 * retail_price(p.sys.tariff), 1e-12);
    for (int t = 0; t < 4; ++t) EXPECT_NEAR(w.imp[t], 1.0, 1e-12);
    EXPECT_NEAR(dp_oracle_prosumer(p, 0, 0.01), w.cost, 1e-12);
}

TEST(ProsumerWindow, LoadShiftsOntoLaterSurplus) {
    // 12 steps: 1 kWh load at step 1 without PV, 40 % shiftable; 2 kWh PV at
    // step 9 with no load there. Eight steps apart, inside the 16-step reach.
    WindowProblem p;
    p.steps = 12;
    std::vector<double> load(12, 0.0), pv(12, 0.0);
    load[1] = 1.0;
    pv[9] = 2.0;
    p.households = {household(load, pv, 0.4)};
    p.spot.assign(12, 0.03);
    p.settings.dr.enabled = true;
    p.settings.dr.window_steps = 16;
    p.soc0 = {0.0};
    const ProsumerWindow w = optimize_prosumer_window(p, 0);
    EXPECT_NEAR(w.dr_out[1], 0.4, 1e-9);
    EXPECT_NEAR(w.dr_in[9], 0.4, 1e-9);
    EXPECT_NEAR(w.imp[1], 0.6, 1e-9);
    EXPECT_NEAR(dp_oracle_prosumer(p, 0, 0.01), w.objective, 1e-9);
    // Out of reach: nothing moves.
    p.settings.dr.window_steps = 4;
    const ProsumerWindow far = optimize_prosumer_window(p, 0);
    EXPECT_NEAR(far.imp[1], 1.0, 1e-9);
}

TEST(ProsumerWindow, HeatBeyondDeviceCapsIsInfeasible) {
    WindowProblem p = toy_problem(0.0);
    p.households[0].heat[2] = 3.0;   // more than 9 kW_th for 15 min
    EXPECT_THROW(optimize_prosumer_window(p, 0), InfeasibleError);
    p.settings.hp_enabled = true;
    EXPECT_THROW(optimize_prosumer_window(p, 0), InfeasibleError);
}

TEST(OperatorWindow, SingleCycleArbitrage) {
    WindowProblem p = operator_problem(2, 10.0);
    p.spot = {0.01, 0.10};
    const OperatorWindow w = optimize_operator_window(p, {0, 0}, {0, 0});
    EXPECT_NEAR(-w.arbitrage_cost, 10.0 * 0.95 * 0.95 * 0.10 - 10.0 * 0.01, 1e-9);
    EXPECT_NEAR(-w.arbitrage_cost, 0.8025, 1e-9);
    EXPECT_NEAR(w.buy[0], 10.0, 1e-9);
    EXPECT_NEAR(dp_oracle_arbitrage(p, 10.0, w, 0.01), w.arbitrage_cost, 0.01 * 0.10);
}

TEST(OperatorWindow, CommunityStoresSurplusForLaterDeficit) {
    WindowProblem p = operator_problem(2, 10.0);
    const OperatorWindow w = optimize_operator_window(p, {0, 5}, {5, 0});
    EXPECT_NEAR(w.chX[0], 5.0, 1e-9);
    EXPECT_NEAR(w.disR[1], 4.5125, 1e-9);
    EXPECT_NEAR(5.0 - w.disR[1], 0.4875, 1e-9);   // still from the grid
    EXPECT_NEAR(w.shared[0] + w.shared[1], 0.0, 1e-12);
}

TEST(OperatorWindow, ZeroCapacityExportsAndImportsResiduals) {
    WindowProblem p = operator_problem(3, 0.0);
    p.spot = {0.01, 0.2, 0.03};
    const OperatorWindow w = optimize_operator_window(p, {0, 2, 0}, {1, 0, 0});
    for (int t = 0; t < 3; ++t) {
        EXPECT_EQ(w.chX[t], 0.0);
        EXPECT_EQ(w.disR[t], 0.0);
        EXPECT_EQ(w.buy[t], 0.0);
        EXPECT_EQ(w.sell[t], 0.0);
    }
    EXPECT_EQ(w.arbitrage_cost, 0.0);
}

TEST(OperatorWindow, SharingNetsSimultaneousResiduals) {
    WindowProblem p = operator_problem(1, 0.0);
    const OperatorWindow w = optimize_operator_window(p, {1.5}, {1.0});
    EXPECT_NEAR(w.shared[0], 1.0, 1e-12);
    p.settings.sharing = false;
    EXPECT_EQ(optimize_operator_window(p, {1.5}, {1.0}).shared[0], 0.0);
}

// ---------------------------------------------------------------------------
// Annual runs on the bundled synthetic data

namespace {

struct Week {
    AnnualInputs in;
    SystemSpec sys;
};

Week week(int first_day, int days, double pv_area, double capacity) {
    static const SyntheticDataset ds = synth_profiles(1, 6);
    Week w;
    const std::size_t off = static_cast<std::size_t>(first_day) * kStepsPerDay;
    const std::size_t len = static_cast<std::size_t>(days) * kStepsPerDay;
    PvSpec pv;
    pv.area = pv_area;
    const QuarterHourSeries gen = pv_output(pv, ds.pv_yield.slice(off, len));
    for (std::size_t h = 0; h < 6; ++h) {
        HouseholdSeries s;
        s.fixed = ds.load[h].slice(off, len).values;
        s.shiftable.assign(len, 0.0);
        s.heat = ds.heat[h].slice(off, len).values;
        s.pv = gen.values;
        w.in.households.push_back(std::move(s));
    }
    w.in.spot = ds.spot.slice(off, len).values;
    w.sys.bes.capacity = capacity;
    return w;
}

DispatchSettings settings(Topology t) {
    DispatchSettings s;
    s.topology = t;
    s.arbitrage = t == Topology::CES;
    return s;
}

double stored_sc(const DispatchResult& r) {
    double s = 0.0;
    for (const auto& h : r.households)
        for (std::size_t t = 0; t < h.pv_to_storage.size(); ++t) s += h.pv_to_storage[t] + h.pv_to_community[t];
    return s;
}

double self_consumption(const DispatchResult& r) {
    double s = stored_sc(r);
    for (const auto& h : r.households)
        for (std::size_t t = 0; t < h.pv_to_load.size(); ++t) s += h.pv_to_load[t] + h.pv_to_hp[t];
    return s;
}

}  // namespace

TEST(RollingRun, NoPvNoStorageCostsRetail) {
    Week w = week(10, 3, 0.0, 0.0);
    const DispatchResult r = rolling_run(w.in, w.sys, settings(Topology::HES));
    const double retail = retail_price(w.sys.tariff), gas = w.sys.tariff.gas_price();
    for (std::size_t h = 0; h < 6; ++h) {
        const auto& s = w.in.households[h];
        const double load = std::accumulate(s.fixed.begin(), s.fixed.end(), 0.0);
        const double heat = std::accumulate(s.heat.begin(), s.heat.end(), 0.0);
        EXPECT_NEAR(r.households[h].eu_cost, retail * load + gas * heat / 0.95, 1e-6);
    }
    EXPECT_TRUE(check_invariants(r, w.in, settings(Topology::HES)).empty());
}

TEST(RollingRun, PeriodicInputsGivePeriodicDispatch) {
    Week base = week(150, 1, 15.0, 5.0);
    Week w = base;
    for (auto& h : w.in.households)
        for (auto* v : {&h.fixed, &h.shiftable, &h.heat, &h.pv}) {
            const std::vector<double> day = *v;
            for (int k = 1; k < 4; ++k) v->insert(v->end(), day.begin(), day.end());
        }
    const std::vector<double> day = w.in.spot;
    for (int k = 1; k < 4; ++k) w.in.spot.insert(w.in.spot.end(), day.begin(), day.end());
    const DispatchResult r = rolling_run(w.in, w.sys, settings(Topology::HES));
    // The boundary SOC settles after the first window; days 2..4 coincide.
    const auto& soc = r.storages[0].soc;
    for (int t = 0; t < kStepsPerDay; ++t) {
        EXPECT_NEAR(soc[2 * kStepsPerDay + t], soc[1 * kStepsPerDay + t], 1e-6);
        EXPECT_NEAR(soc[3 * kStepsPerDay + t], soc[1 * kStepsPerDay + t], 1e-6);
    }
}

TEST(RollingRun, PoolingDominatesPartitionedStorage) {
    for (int first_day : {20, 120, 200, 300}) {
        Week hes = week(first_day, 4, 15.0, 5.0);
        Week ces = week(first_day, 4, 15.0, 30.0);
        const DispatchResult a = rolling_run(hes.in, hes.sys, settings(Topology::HES));
        const DispatchResult b = rolling_run(ces.in, ces.sys, settings(Topology::CES));
        EXPECT_GE(self_consumption(b), self_consumption(a) - 1e-6) << "day " << first_day;
    }
}

TEST(RollingRun, ConstantSpotLeavesNoArbitrage) {
    Week w = week(120, 3, 15.0, 30.0);
    std::fill(w.in.spot.begin(), w.in.spot.end(), 0.0316);
    DispatchSettings s = settings(Topology::CES);
    const DispatchResult with = rolling_run(w.in, w.sys, s);
    s.arbitrage = false;
    const DispatchResult without = rolling_run(w.in, w.sys, s);
    for (std::size_t t = 0; t < with.spot_buy_to_ces.size(); ++t) {
        EXPECT_NEAR(with.spot_buy_to_ces[t], 0.0, 1e-9);
        EXPECT_NEAR(with.ces_to_spot[t], 0.0, 1e-9);
    }
    EXPECT_NEAR(stored_sc(with), stored_sc(without), 1e-6);
}

TEST(RollingRun, ArbitrageNeverDisplacesCommunitySelfConsumption) {
    Week w = week(160, 3, 22.5, 30.0);
    DispatchSettings s = settings(Topology::CES);
    const DispatchResult with = rolling_run(w.in, w.sys, s);
    s.arbitrage = false;
    const DispatchResult without = rolling_run(w.in, w.sys, s);
    EXPECT_NEAR(stored_sc(with), stored_sc(without), 1e-6);
    EXPECT_GE(with.arbitrage_profit, -1e-9);
}

TEST(RollingRun, LargerPoolNeverStoresLess) {
    double prev = -1.0;
    for (double c : {0.0, 5.0, 10.0, 20.0, 30.0, 45.0, 60.0}) {
        Week w = week(100, 4, 22.5, c);
        const double sc = stored_sc(rolling_run(w.in, w.sys, settings(Topology::CES)));
        EXPECT_GE(sc, prev - 1e-6) << "capacity " << c;
        prev = sc;
    }
}

TEST(RollingRun, HouseholdRunsHaveNoOperatorFlows) {
    Week w = week(100, 2, 15.0, 5.0);
    const DispatchResult r = rolling_run(w.in, w.sys, settings(Topology::HES));
    EXPECT_TRUE(r.spot_buy_to_ces.empty());
    EXPECT_TRUE(r.ces_to_spot.empty());
    EXPECT_EQ(r.arbitrage_profit, 0.0);
    EXPECT_EQ(r.storages.size(), 6u);
}

TEST(RollingRun, RejectsMalformedHorizon) {
    Week w = week(100, 1, 15.0, 5.0);
    w.in.spot.pop_back();
    EXPECT_THROW(rolling_run(w.in, w.sys, settings(Topology::HES)), DataError);
}

// ---------------------------------------------------------------------------
// Oracle

TEST(DpOracle, GridRefinementBound) {
    const WindowProblem p = toy_problem(2.0);
    const double coarse = dp_oracle_prosumer(p, 0, 0.1), fine = dp_oracle_prosumer(p, 0, 0.01);
    EXPECT_NEAR(coarse, fine, 0.1 * retail_price(p.sys.tariff));
    WindowProblem none = toy_problem(0.0);
    const double retail = retail_price(none.sys.tariff), feed = none.sys.tariff.feed_in;
    EXPECT_NEAR(dp_oracle_prosumer(none, 0, 0.01), 3.0 * retail - 2.0 * feed, 1e-12);
}

TEST(DpOracle, RejectsLargeInstances) {
    WindowProblem p = toy_problem(2.0);
    p.steps = 20;
    p.households[0] = household(std::vector<double>(20, 1.0), std::vector<double>(20, 0.0));
    p.spot.assign(20, 0.03);
    EXPECT_THROW(dp_oracle_prosumer(p, 0, 0.01), DomainError);
}

TEST(DpOracle, StorageFreeCasesMatchExactly) {
    auto cases = cesopt::testing::make_oracle_cases(11, 10);
    for (auto& oc : cases) {
        if (oc.kind == cesopt::testing::OracleKind::community || oc.kind == cesopt::testing::OracleKind::dr_only) continue;
        oc.p.sys.bes.capacity = 0.0;
        oc.p.soc0[0] = 0.0;
        oc.p.settings.dr.enabled = false;
        EXPECT_NEAR(optimize_prosumer_window(oc.p, 0).objective, dp_oracle_prosumer(oc.p, 0, 0.01), 1e-9)
            << "case " << oc.index;
    }
}

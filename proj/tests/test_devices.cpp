#include <gtest/gtest.h>

#include <cesopt/devices.hpp>

#include <cmath>

using namespace cesopt;

TEST(PvOutput, AreaScalesLinearly) {
    QuarterHourSeries y({0.1, 0.0, 0.05}, Unit::kWh_per_m2);
    PvSpec pv;
    pv.area = 0.0;
    for (double v : pv_output(pv, y).values) EXPECT_EQ(v, 0.0);
    pv.area = 7.5;
    const QuarterHourSeries a = pv_output(pv, y);
    EXPECT_NEAR(a[0], 0.135, 1e-12);
    EXPECT_EQ(a.unit, Unit::kWh_el);
    pv.area = 15.0;
    const QuarterHourSeries b = pv_output(pv, y);
    for (std::size_t t = 0; t < y.size(); ++t) EXPECT_NEAR(b[t], 2.0 * a[t], 1e-12);
    EXPECT_THROW(pv_output(pv, QuarterHourSeries({0.1}, Unit::kWh_el)), DomainError);
}

TEST(HeatPump, ElectricUseAndCap) {
    HpSpec hp;
    EXPECT_EQ(hp_electric(0.0, hp), 0.0);
    EXPECT_NEAR(hp_electric(2.25, hp), 0.576923, 1e-6);
    EXPECT_THROW(hp_electric(3.0, hp), DomainError);
}

TEST(GasBoiler, FuelAndCap) {
    NgbSpec ngb;
    EXPECT_EQ(ngb_fuel(0.0, ngb), 0.0);
    EXPECT_NEAR(ngb_fuel(0.95, ngb), 1.0, 1e-12);
    EXPECT_THROW(ngb_fuel(2.3, ngb), DomainError);
}

TEST(Battery, IdleStepSelfDischarges) {
    BesSpec b;
    b.capacity = 10.0;
    EXPECT_NEAR(bes_step({1.0}, 0.0, 0.0, b).soc, 0.99999, 1e-12);
}

TEST(Battery, ChargeEfficiency) {
    BesSpec b;
    b.capacity = 10.0;
    EXPECT_NEAR(bes_step({0.0}, 1.0, 0.0, b).soc, 0.95, 1e-12);
}

TEST(Battery, DischargeNeedsStoredEnergy) {
    BesSpec b;
    b.capacity = 10.0;
    // Delivering 0.95 draws 1.0 kWh, more than 1.0 kWh after self-discharge.
    EXPECT_THROW(bes_step({1.0}, 0.0, 0.95, b), DomainError);
    EXPECT_NO_THROW(bes_step({1.1}, 0.0, 0.95, b));
}

TEST(Battery, RejectsBadRequests) {
    BesSpec b;
    b.capacity = 4.0;   // 1 kWh per step at P/E 1
    EXPECT_THROW(bes_step({1.0}, 0.5, 0.5, b), DomainError);
    EXPECT_THROW(bes_step({0.0}, 1.5, 0.0, b), DomainError);
    EXPECT_THROW(bes_step({3.9}, 0.5, 0.0, b), DomainError);
    EXPECT_THROW(bes_step({1.0}, -0.1, 0.0, b), DomainError);
    b.p_to_e = 0.5;
    EXPECT_THROW(bes_step({0.0}, 0.6, 0.0, b), DomainError);
    EXPECT_NO_THROW(bes_step({0.0}, 0.5, 0.0, b));
}

TEST(Battery, RoundTripEfficiency) {
    BesSpec b;
    b.capacity = 10.0;
    b.self_discharge_per_step = 0.0;
    const BesState full = bes_step({0.0}, 2.0, 0.0, b);
    const double delivered = full.soc * b.eff_discharge;
    EXPECT_NEAR(bes_step(full, 0.0, delivered, b).soc, 0.0, 1e-12);
    EXPECT_NEAR(delivered / 2.0, 0.9025, 1e-9);
}

TEST(Battery, MonthlySelfDischargeJustBelowThreePercent) {
    BesSpec b;
    b.capacity = 10.0;
    BesState s{10.0};
    for (int t = 0; t < 2880; ++t) s = bes_step(s, 0.0, 0.0, b);
    const double loss = 1.0 - s.soc / 10.0;
    EXPECT_NEAR(loss, 1.0 - std::pow(1.0 - 1e-5, 2880), 1e-12);
    EXPECT_NEAR(loss, 0.0284, 1e-3);
    EXPECT_LT(loss, 0.03);
}

TEST(Battery, ScaledKeepsPowerRatio) {
    BesSpec b;
    b.capacity = 10.0;
    b.p_to_e = 0.5;
    const BesSpec h = b.scaled(0.5);
    EXPECT_EQ(h.capacity, 5.0);
    EXPECT_EQ(h.step_power(), 0.625);
}

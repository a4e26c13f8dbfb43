#pragma once

// PV, heat pump, gas boiler and battery models.

#include "cesopt/error.hpp"
#include "cesopt/series.hpp"

#include <cmath>
#include <string>

namespace cesopt {

struct PvSpec {
    double area = 0.0;          // m2
    double efficiency = 0.18;

    void validate() const {
        if (!(area >= 0.0)) throw DomainError("pv area must be >= 0");
        if (!(efficiency > 0.0 && efficiency <= 1.0)) throw DomainError("pv efficiency must lie in (0, 1]");
    }
};

struct HpSpec {
    double thermal_power_max = 9.0;   // kW_th
    double cop = 3.9;

    void validate() const {
        if (!(cop > 1.0)) throw DomainError("heat pump COP must exceed 1");
        if (!(thermal_power_max > 0.0)) throw DomainError("heat pump power must be positive");
    }
    double step_cap() const { return thermal_power_max * kStepHours; }
};

struct NgbSpec {
    double thermal_power_max = 9.0;   // kW_th
    double efficiency = 0.95;

    void validate() const {
        if (!(efficiency > 0.0 && efficiency <= 1.0)) throw DomainError("boiler efficiency must lie in (0, 1]");
        if (!(thermal_power_max > 0.0)) throw DomainError("boiler power must be positive");
    }
    double step_cap() const { return thermal_power_max * kStepHours; }
};

struct BesSpec {
    double capacity = 0.0;                  // kWh
    double p_to_e = 1.0;                    // kW per kWh
    double eff_charge = 0.95;
    double eff_discharge = 0.95;
    double self_discharge_per_step = 1e-5;
    int lifetime_years = 20;

    void validate() const {
        if (!(capacity >= 0.0)) throw DomainError("storage capacity must be >= 0");
        if (!(p_to_e > 0.0)) throw DomainError("p_to_e must be positive");
        if (!(eff_charge > 0.0 && eff_charge <= 1.0) || !(eff_discharge > 0.0 && eff_discharge <= 1.0))
            throw DomainError("storage efficiencies must lie in (0, 1]");
        if (!(self_discharge_per_step >= 0.0 && self_discharge_per_step < 1.0))
            throw DomainError("self-discharge must lie in [0, 1)");
    }
    // kWh per quarter-hour at the battery terminal.
    double step_power() const { return p_to_e * capacity * kStepHours; }
    double retention() const { return 1.0 - self_discharge_per_step; }

    BesSpec scaled(double factor) const {
        BesSpec b = *this;
        b.capacity = capacity * factor;
        return b;
    }
};

struct BesState {
    double soc = 0.0;   // kWh
};

inline QuarterHourSeries pv_output(const PvSpec& spec, const QuarterHourSeries& yield) {
    spec.validate();
    if (yield.unit != Unit::kWh_per_m2) throw DomainError("pv_output expects a kWh_per_m2 series");
    QuarterHourSeries out = yield;
    out.unit = Unit::kWh_el;
    const double k = spec.area * spec.efficiency;
    for (double& v : out.values) v *= k;
    return out;
}

inline double hp_electric(double heat_out, const HpSpec& spec) {
    if (heat_out < 0.0) throw DomainError("heat output must be >= 0");
    if (heat_out > spec.step_cap() + 1e-12)
        throw DomainError("heat pump thermal cap exceeded: " + std::to_string(heat_out) + " kWh_th in one step");
    return heat_out / spec.cop;
}

inline double ngb_fuel(double heat_out, const NgbSpec& spec) {
    if (heat_out < 0.0) throw DomainError("heat output must be >= 0");
    if (heat_out > spec.step_cap() + 1e-12)
        throw DomainError("boiler thermal cap exceeded: " + std::to_string(heat_out) + " kWh_th in one step");
    return heat_out / spec.efficiency;
}

// One quarter-hour of the storage recursion. `discharge_out` is measured at
// the delivery point, after discharge losses.
inline BesState bes_step(const BesState& state, double charge_in, double discharge_out, const BesSpec& spec,
                         double tol = 1e-9) {
    if (charge_in < 0.0 || discharge_out < 0.0) throw DomainError("storage flows must be >= 0");
    if (charge_in > tol && discharge_out > tol) throw DomainError("simultaneous charge and discharge");
    const double pmax = spec.step_power();
    if (charge_in > pmax + tol || discharge_out > pmax + tol) throw DomainError("storage power limit exceeded");
    const double next = state.soc * spec.retention() + spec.eff_charge * charge_in - discharge_out / spec.eff_discharge;
    if (next < -tol || next > spec.capacity + tol)
        throw DomainError("state of charge leaves [0, capacity]: " + std::to_string(next));
    return BesState{next};
}

}  // namespace cesopt

#pragma once

// Household demand, heat, PV and spot-price series: load splitting for
// demand response and a seeded synthetic dataset generator.

#include "cesopt/error.hpp"
#include "cesopt/series.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace cesopt {

struct LoadSplit {
    QuarterHourSeries fixed;
    QuarterHourSeries shiftable;
    double dr_max_share = 0.0;
    int dr_window_steps = 0;
};

inline LoadSplit split_shiftable(const QuarterHourSeries& load, double dr_max_share, double dr_window_hours) {
    if (!(dr_max_share >= 0.0 && dr_max_share <= 1.0)) throw DomainError("dr_max_share must lie in [0, 1]");
    if (!(dr_window_hours > 0.0)) throw DomainError("dr_window_hours must be positive");
    LoadSplit s;
    s.dr_max_share = dr_max_share;
    s.dr_window_steps = static_cast<int>(std::lround(dr_window_hours * 60.0 / kStepMinutes));
    s.fixed = load;
    s.shiftable = load;
    for (std::size_t t = 0; t < load.size(); ++t) {
        s.shiftable.values[t] = dr_max_share * load.values[t];
        s.fixed.values[t] = load.values[t] - s.shiftable.values[t];
    }
    return s;
}

// PV generation from per-m2 irradiation.
struct SyntheticDataset {
    std::vector<QuarterHourSeries> load;   // kWh_el per step
    std::vector<QuarterHourSeries> heat;   // kWh_th per step
    QuarterHourSeries pv_yield;            // kWh/m2 irradiation per step
    QuarterHourSeries spot;                // EUR/kWh
};

struct SynthOptions {
    double load_min = 2900.0, load_max = 4500.0;
    double heat_min = 15300.0, heat_max = 18300.0;
    double irradiation_min = 1000.0, irradiation_max = 1100.0;   // kWh/m2/a
    double spot_mean = 0.0316;
    double heat_step_cap = 2.1;   // kWh_th per step, below the 9 kW_th device limit
    double latitude_deg = 51.0;
};

namespace synth_detail {

constexpr double kPi = 3.14159265358979323846;

// Hourly activity weights for a few occupancy patterns.
inline const std::array<std::array<double, 24>, 4>& occupancy_patterns() {
    static const std::array<std::array<double, 24>, 4> p = {{
        // away during working hours
        {0.15, 0.1, 0.1, 0.1, 0.1, 0.2, 0.9, 1.3, 0.8, 0.2, 0.15, 0.15, 0.2, 0.15, 0.15, 0.2, 0.4, 0.9, 1.4, 1.6, 1.5, 1.2, 0.8, 0.4},
        // family at home around midday
        {0.15, 0.1, 0.1, 0.1, 0.1, 0.15, 0.6, 1.1, 1.0, 0.7, 0.7, 1.0, 1.3, 0.9, 0.6, 0.6, 0.8, 1.1, 1.4, 1.3, 1.1, 0.8, 0.5, 0.3},
        // retired, spread over the day
        {0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.3, 0.7, 1.0, 1.0, 1.0, 1.2, 1.3, 0.9, 0.8, 0.8, 0.9, 1.0, 1.1, 1.0, 0.8, 0.5, 0.3, 0.15},
        // late evening heavy
        {0.6, 0.35, 0.15, 0.1, 0.1, 0.1, 0.2, 0.4, 0.5, 0.4, 0.5, 0.7, 0.9, 0.7, 0.5, 0.5, 0.6, 0.9, 1.2, 1.5, 1.7, 1.7, 1.5, 1.1},
    }};
    return p;
}

inline double smoothstep_hour(const std::array<double, 24>& w, double hour) {
    const int h0 = static_cast<int>(std::floor(hour)) % 24;
    const int h1 = (h0 + 1) % 24;
    const double f = hour - std::floor(hour);
    return w[static_cast<std::size_t>(h0)] * (1.0 - f) + w[static_cast<std::size_t>(h1)] * f;
}

inline void scale_to(std::vector<double>& v, double target) {
    double s = 0.0;
    for (double x : v) s += x;
    if (s <= 0.0) return;
    const double k = target / s;
    for (double& x : v) x *= k;
}

// Outdoor temperature shared by all households, in deg C.
inline std::vector<double> outdoor_temperature(std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 2.2);
    std::vector<double> temp(static_cast<std::size_t>(kStepsPerYear));
    double anomaly = 0.0;
    for (int d = 0; d < kDaysPerYear; ++d) {
        anomaly = 0.75 * anomaly + noise(rng);
        const double seasonal = 9.5 - 9.5 * std::cos(2.0 * kPi * (d - 18) / 365.0);
        const double swing = 3.0 + 2.5 * (1.0 - std::cos(2.0 * kPi * (d - 18) / 365.0)) / 2.0;
        for (int s = 0; s < kStepsPerDay; ++s) {
            const double hour = s * kStepHours;
            temp[static_cast<std::size_t>(d * kStepsPerDay + s)] =
                seasonal + anomaly + swing * std::cos(2.0 * kPi * (hour - 15.0) / 24.0);
        }
    }
    return temp;
}

inline std::vector<double> household_load(std::mt19937_64& rng, int pattern, double target) {
    const auto& pats = occupancy_patterns();
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(kStepsPerYear), 0.0);
    const double base_kw = 0.06 + 0.06 * u01(rng);
    const double event_rate = 0.22 + 0.12 * u01(rng);   // events per step at activity weight 1
    const double shift_hours = (u01(rng) - 0.5) * 1.5;  // personal timing offset
    int weekday = 3;                                      // 2015-01-01 was a Thursday
    for (int d = 0; d < kDaysPerYear; ++d, weekday = (weekday + 1) % 7) {
        const bool weekend = weekday >= 5;
        const int pat = weekend && pattern == 0 ? 1 : pattern;
        const double season = 1.0 + 0.18 * std::cos(2.0 * kPi * (d - 10) / 365.0);
        const double daylight_end = 19.0 + 2.5 * std::cos(2.0 * kPi * (d - 172) / 365.0);
        const double day_level = 0.8 + 0.4 * u01(rng);
        for (int s = 0; s < kStepsPerDay; ++s) {
            const double hour = s * kStepHours;
            double h = hour - shift_hours;
            if (h < 0.0) h += 24.0;
            if (h >= 24.0) h -= 24.0;
            const double activity = smoothstep_hour(pats[static_cast<std::size_t>(pat)], h) * day_level;
            double e = base_kw * kStepHours * (0.9 + 0.2 * u01(rng));
            // lighting after dusk while people are active
            if (hour > daylight_end - 0.5 && hour < 23.5) e += 0.05 * activity * kStepHours * season;
            const std::size_t i = static_cast<std::size_t>(d * kStepsPerDay + s);
            v[i] += e;
            const double p = std::min(0.95, event_rate * activity * season);
            if (u01(rng) < p) {
                const double kw = 0.3 + 2.0 * u01(rng) * u01(rng) + 0.4 * u01(rng);
                const int dur = 1 + static_cast<int>(u01(rng) * 3.0);
                for (int k = 0; k < dur && i + static_cast<std::size_t>(k) < v.size(); ++k)
                    v[i + static_cast<std::size_t>(k)] += kw * kStepHours;
            }
        }
    }
    scale_to(v, target);
    return v;
}

inline std::vector<double> household_heat(std::mt19937_64& rng, const std::vector<double>& temp, int pattern,
                                          double target, double cap) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double base_temp = 15.5 + 1.5 * u01(rng);
    const double setback = 0.55 + 0.2 * u01(rng);
    const double dhw_share = 0.16 + 0.06 * u01(rng);
    const auto& pats = occupancy_patterns();
    std::vector<double> space(temp.size(), 0.0), dhw(temp.size(), 0.0);
    for (std::size_t i = 0; i < temp.size(); ++i) {
        const double hour = static_cast<double>(i % kStepsPerDay) * kStepHours;
        const bool night = hour < 5.5 || hour >= 22.5;
        space[i] = std::max(0.0, base_temp - temp[i]) * (night ? setback : 1.0);
        // hot water follows activity, with a daytime share from cycling storage tanks
        const double act = smoothstep_hour(pats[static_cast<std::size_t>(pattern)], hour);
        dhw[i] = (0.35 + act) * (0.6 + 0.8 * u01(rng));
    }
    double ssum = 0.0, dsum = 0.0;
    for (std::size_t i = 0; i < temp.size(); ++i) {
        ssum += space[i];
        dsum += dhw[i];
    }
    std::vector<double> v(temp.size());
    for (std::size_t i = 0; i < temp.size(); ++i)
        v[i] = space[i] / ssum * (1.0 - dhw_share) * target + dhw[i] / dsum * dhw_share * target;
    // Respect the per-step thermal cap while keeping the annual sum.
    for (int round = 0; round < 50; ++round) {
        double excess = 0.0, room = 0.0;
        for (double& x : v) {
            if (x > cap) {
                excess += x - cap;
                x = cap;
            } else {
                room += cap - x;
            }
        }
        if (excess <= 1e-12) break;
        const double k = excess / room;
        for (double& x : v)
            if (x < cap) x += (cap - x) * k * 0.999;
    }
    scale_to(v, target);
    for (double& x : v) x = std::min(x, cap);
    return v;
}

inline std::vector<double> irradiation(std::mt19937_64& rng, double latitude_deg, double target) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double phi = latitude_deg * kPi / 180.0;
    std::vector<double> v(static_cast<std::size_t>(kStepsPerYear), 0.0);
    int state = 1;   // 0 clear, 1 mixed, 2 overcast
    for (int d = 0; d < kDaysPerYear; ++d) {
        const double summer = (1.0 - std::cos(2.0 * kPi * (d - 10) / 365.0)) / 2.0;
        const double r = u01(rng);
        const double p_clear = 0.2 + 0.3 * summer, p_over = 0.45 - 0.3 * summer;
        if (r < 0.45) state = r < 0.45 * p_clear / (p_clear + p_over) ? 0 : 2;
        else if (r < 0.45 + 0.35) state = 1;
        const double kt = state == 0 ? 0.78 + 0.07 * u01(rng) : (state == 1 ? 0.45 + 0.2 * u01(rng) : 0.12 + 0.12 * u01(rng));
        const double decl = 23.45 * kPi / 180.0 * std::sin(2.0 * kPi * (284.0 + d + 1) / 365.0);
        double cloud = 1.0;
        for (int s = 0; s < kStepsPerDay; ++s) {
            const double solar_time = (s + 0.5) * kStepHours - 0.33;
            const double omega = (solar_time - 12.0) * 15.0 * kPi / 180.0;
            const double sin_alt = std::sin(phi) * std::sin(decl) + std::cos(phi) * std::cos(decl) * std::cos(omega);
            if (state == 1) cloud = std::clamp(0.7 * cloud + 0.3 * (0.4 + 1.2 * u01(rng)), 0.2, 1.4);
            else cloud = 1.0;
            if (sin_alt <= 0.0) continue;
            const double clear = 1.05 * std::pow(sin_alt, 1.15);   // kW/m2
            v[static_cast<std::size_t>(d * kStepsPerDay + s)] = clear * kt * cloud * kStepHours;
        }
    }
    scale_to(v, target);
    return v;
}

inline std::vector<double> spot_prices(std::mt19937_64& rng, double mean) {
    std::normal_distribution<double> n01(0.0, 1.0);
    // hourly shape relative to the daily level
    static const std::array<double, 24> shape = {-0.35, -0.45, -0.5, -0.52, -0.5, -0.38, -0.05, 0.3,  0.42, 0.32, 0.2, 0.12,
                                                 0.02,  -0.05, -0.08, -0.02, 0.12,  0.35,  0.6,  0.65, 0.45, 0.25, 0.05, -0.18};
    std::vector<double> v(static_cast<std::size_t>(kStepsPerYear));
    double level = 0.0;
    int weekday = 3;
    for (int d = 0; d < kDaysPerYear; ++d, weekday = (weekday + 1) % 7) {
        level = 0.7 * level + 0.12 * n01(rng);
        const double winter = std::cos(2.0 * kPi * (d - 15) / 365.0);
        const double summer = (1.0 - winter) / 2.0;
        const double day_factor = (1.0 + 0.08 * winter + level) * (weekday >= 5 ? 0.85 : 1.0);
        for (int h = 0; h < 24; ++h) {
            double sh = shape[static_cast<std::size_t>(h)];
            if (h >= 11 && h <= 15) sh -= 0.25 * summer;   // solar dip
            const double price = mean * (day_factor + sh * (1.0 + 0.3 * (0.5 - summer))) + 0.003 * n01(rng);
            for (int q = 0; q < 4; ++q) v[static_cast<std::size_t>(d * kStepsPerDay + h * 4 + q)] = price;
        }
    }
    double s = 0.0;
    for (double x : v) s += x;
    const double shift = mean - s / static_cast<double>(v.size());
    for (double& x : v) x += shift;
    return v;
}

}  // namespace synth_detail

// Deterministic per seed. Households draw different occupancy patterns and
// personal timing so surpluses and deficits do not line up across the community.
inline SyntheticDataset synth_profiles(unsigned long long seed, int households, const SynthOptions& opt = {}) {
    if (households < 1) throw DomainError("households must be >= 1");
    SyntheticDataset out;
    std::mt19937_64 weather(seed * 0x9E3779B97F4A7C15ULL + 1);
    const auto temp = synth_detail::outdoor_temperature(weather);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double irr_target = opt.irradiation_min + (opt.irradiation_max - opt.irradiation_min) * u01(weather);
    out.pv_yield = QuarterHourSeries(synth_detail::irradiation(weather, opt.latitude_deg, irr_target), Unit::kWh_per_m2);
    out.spot = QuarterHourSeries(synth_detail::spot_prices(weather, opt.spot_mean), Unit::EUR_per_kWh);
    static const int pattern_cycle[] = {0, 1, 2, 0, 3, 1};
    for (int h = 0; h < households; ++h) {
        std::mt19937_64 rng(seed * 1000003ULL + static_cast<unsigned long long>(h) * 7919ULL + 17);
        const int pattern = pattern_cycle[h % 6];
        // Keep a margin from the band edges so rounding never leaves it.
        const double load_target = opt.load_min + 50.0 + (opt.load_max - opt.load_min - 100.0) * u01(rng);
        const double heat_target = opt.heat_min + 50.0 + (opt.heat_max - opt.heat_min - 100.0) * u01(rng);
        out.load.emplace_back(synth_detail::household_load(rng, pattern, load_target), Unit::kWh_el);
        out.heat.emplace_back(synth_detail::household_heat(rng, temp, pattern, heat_target, opt.heat_step_cap),
                              Unit::kWh_th);
    }
    return out;
}

// Directory layout: load_<h>.csv, heat_<h>.csv (1-based), pv_yield.csv, spot.csv.
inline void write_dataset(const std::string& dir, const SyntheticDataset& ds) {
    for (std::size_t h = 0; h < ds.load.size(); ++h) {
        write_series(dir + "/load_" + std::to_string(h + 1) + ".csv", ds.load[h]);
        write_series(dir + "/heat_" + std::to_string(h + 1) + ".csv", ds.heat[h]);
    }
    write_series(dir + "/pv_yield.csv", ds.pv_yield);
    write_series(dir + "/spot.csv", ds.spot);
}

inline SyntheticDataset load_dataset(const std::string& dir, int households) {
    SyntheticDataset ds;
    for (int h = 1; h <= households; ++h) {
        ds.load.push_back(load_series(dir + "/load_" + std::to_string(h) + ".csv", Unit::kWh_el, true));
        ds.heat.push_back(load_series(dir + "/heat_" + std::to_string(h) + ".csv", Unit::kWh_th, true));
    }
    ds.pv_yield = load_series(dir + "/pv_yield.csv", Unit::kWh_per_m2, true);
    ds.spot = load_series(dir + "/spot.csv", Unit::EUR_per_kWh, true);
    return ds;
}

}  // namespace cesopt

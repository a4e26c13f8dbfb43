#pragma once

// Storage investment with economies of scale, O&M and annuitized cost.

#include "cesopt/error.hpp"

#include <cmath>
#include <iterator>
#include <map>
#include <string>

namespace cesopt {

enum class Topology { HES, CES };

inline const char* to_string(Topology t) { return t == Topology::HES ? "hes" : "ces"; }

struct CostInputs {
    double cost_sm = 500.0;    // EUR/kWh cells
    double cost_inv = 200.0;   // EUR/kW inverter
    double C_l = 10.0;         // kWh
    double C_k = 10.0;         // kW
    double cell_exponent = 0.9;
    double inverter_exponent = 0.7;
    double inverter_sizing = 0.5;   // kW inverter per kWh of SOC_max
    double om_rate_ces = 0.015;
    double om_rate_hes = 0.0;
    double interest = 0.04;
    int lifetime_years = 20;
    // Below the thresholds, price linearly instead of by the power law.
    bool cells_linear_below_threshold = false;
    bool inverter_linear_below_threshold = false;

    void validate() const {
        if (!(cell_exponent > 0.0 && cell_exponent <= 1.0) || !(inverter_exponent > 0.0 && inverter_exponent <= 1.0))
            throw DomainError("cost exponents must lie in (0, 1]");
        if (!(interest > 0.0)) throw DomainError("interest must be positive");
        if (!(C_l > 0.0 && C_k > 0.0)) throw DomainError("cost thresholds must be positive");
        if (lifetime_years < 1) throw DomainError("lifetime must be >= 1 year");
    }
};

struct YearPrices {
    double cost_sm = 0.0;
    double cost_inv = 0.0;
};

class CostTrend {
public:
    CostTrend() : points_{{2015, {500.0, 200.0}}, {2025, {200.0, 100.0}}, {2035, {150.0, 70.0}}} {}
    explicit CostTrend(std::map<int, YearPrices> pts) : points_(std::move(pts)) { validate(); }

    void validate() const {
        if (points_.empty()) throw DomainError("cost trend is empty");
        const YearPrices* prev = nullptr;
        for (const auto& [year, p] : points_) {
            if (prev && (p.cost_sm > prev->cost_sm || p.cost_inv > prev->cost_inv))
                throw DomainError("cost trend must be non-increasing (year " + std::to_string(year) + ")");
            prev = &p;
        }
    }

    // Exact entries, linear interpolation in between, clamped outside.
    YearPrices at(int year) const {
        auto hi = points_.lower_bound(year);
        if (hi != points_.end() && hi->first == year) return hi->second;
        if (hi == points_.begin()) return hi->second;
        if (hi == points_.end()) return std::prev(hi)->second;
        auto lo = std::prev(hi);
        const double f = static_cast<double>(year - lo->first) / static_cast<double>(hi->first - lo->first);
        return {lo->second.cost_sm + f * (hi->second.cost_sm - lo->second.cost_sm),
                lo->second.cost_inv + f * (hi->second.cost_inv - lo->second.cost_inv)};
    }

    CostInputs apply(CostInputs in, int year) const {
        const YearPrices p = at(year);
        in.cost_sm = p.cost_sm;
        in.cost_inv = p.cost_inv;
        return in;
    }

    const std::map<int, YearPrices>& points() const { return points_; }

private:
    std::map<int, YearPrices> points_;
};

namespace cost_detail {

inline double scaled(double size, double threshold, double exponent, double unit_price, bool linear_below) {
    if (size == 0.0) return 0.0;
    if (linear_below && size < threshold) return size * unit_price;
    return std::pow(size / threshold, exponent) * threshold * unit_price;
}

}  // namespace cost_detail

inline double cell_cost(double C_nom, const CostInputs& in) {
    if (C_nom < 0.0) throw DomainError("capacity must be >= 0");
    return cost_detail::scaled(C_nom, in.C_l, in.cell_exponent, in.cost_sm, in.cells_linear_below_threshold);
}

inline double inverter_size(double SOC_max, const CostInputs& in) { return in.inverter_sizing * SOC_max; }

// Inverter sized from SOC_max; p_to_e only drives dispatch power limits.
inline double inverter_cost(double SOC_max, double p_to_e, const CostInputs& in) {
    if (SOC_max < 0.0 || p_to_e < 0.0) throw DomainError("inverter inputs must be >= 0");
    return cost_detail::scaled(inverter_size(SOC_max, in), in.C_k, in.inverter_exponent, in.cost_inv,
                               in.inverter_linear_below_threshold);
}

struct SystemCost {
    double cells = 0.0;
    double inverter = 0.0;
    double total = 0.0;
    double om_per_year = 0.0;
};

inline SystemCost total_cost(double C_nom, Topology topology, const CostInputs& in, double p_to_e = 1.0) {
    SystemCost c;
    c.cells = cell_cost(C_nom, in);
    c.inverter = inverter_cost(C_nom, p_to_e, in);
    c.total = c.cells + c.inverter;
    c.om_per_year = (topology == Topology::CES ? in.om_rate_ces : in.om_rate_hes) * c.total;
    return c;
}

inline double crf(double interest, int lifetime) {
    if (!(interest > 0.0)) throw DomainError("interest must be positive");
    if (lifetime < 1) throw DomainError("lifetime must be >= 1");
    const double growth = std::expm1(lifetime * std::log1p(interest));   // (1+i)^n - 1
    return (growth + 1.0) * interest / growth;
}

inline double eac(double total_cost_eur, double om_per_year, const CostInputs& in) {
    if (total_cost_eur < 0.0 || om_per_year < 0.0) throw DomainError("eac inputs must be >= 0");
    return crf(in.interest, in.lifetime_years) * total_cost_eur + om_per_year;
}

inline double eac(const SystemCost& c, const CostInputs& in) { return eac(c.total, c.om_per_year, in); }

}  // namespace cesopt

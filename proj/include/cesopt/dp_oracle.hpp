#pragma once

// Brute-force reference optimizers for small windows, used to verify the LP
// dispatch. Storage states live on a grid and values between grid points are
// interpolated linearly. The window value functions are convex, so the
// interpolated values never undercut the true optimum: every oracle result is
// an upper bound that tightens as the grid is refined.

#include "cesopt/dispatch.hpp"
#include "cesopt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cesopt {

inline constexpr int kOracleMaxSteps = 16;
inline constexpr int kOracleMaxHouseholds = 2;

namespace oracle_detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Grid points 0, g, 2g, ... below `top`, followed by `top` itself.
inline std::vector<double> grid_to(double top, double g) {
    std::vector<double> v;
    if (top <= 0.0) return {0.0};
    const long k = static_cast<long>(std::floor(top / g + 1e-9));
    for (long i = 0; i <= k; ++i) {
        const double x = static_cast<double>(i) * g;
        if (x < top - 1e-12) v.push_back(x);
    }
    v.push_back(top);
    return v;
}

inline double interp(const std::vector<double>& nodes, const std::vector<double>& val, double x) {
    if (x < nodes.front() - 1e-12 || x > nodes.back() + 1e-12) return kInf;
    auto it = std::lower_bound(nodes.begin(), nodes.end(), x - 1e-12);
    if (it == nodes.end()) return val.back();
    const std::size_t i = static_cast<std::size_t>(it - nodes.begin());
    if (std::abs(*it - x) <= 1e-12) return val[i];
    if (i == 0) return val[0];
    const double x0 = nodes[i - 1], x1 = nodes[i];
    if (val[i - 1] == kInf || val[i] == kInf) return kInf;
    const double w = (x - x0) / (x1 - x0);
    return (1.0 - w) * val[i - 1] + w * val[i];
}

// Candidate next states: all nodes inside [lo, hi], the interval ends and the
// kinks of the stage cost. The stage cost plus the interpolated value is
// piecewise linear between consecutive candidates, so its minimum is among them.
inline void candidates(const std::vector<double>& nodes, double lo, double hi, std::initializer_list<double> kinks,
                       std::vector<double>& out) {
    out.clear();
    if (lo > hi + 1e-12) return;
    hi = std::max(lo, hi);
    out.push_back(lo);
    out.push_back(hi);
    for (double k : kinks)
        if (k > lo && k < hi) out.push_back(k);
    auto a = std::lower_bound(nodes.begin(), nodes.end(), lo);
    auto b = std::upper_bound(nodes.begin(), nodes.end(), hi);
    out.insert(out.end(), a, b);
}

inline void check_size(const WindowProblem& p) {
    if (p.steps <= 0 || p.steps > kOracleMaxSteps) throw DomainError("oracle instance too large: at most 16 steps");
    if (static_cast<int>(p.households.size()) > kOracleMaxHouseholds)
        throw DomainError("oracle instance too large: at most 2 households");
}

inline double grid_cost(double g, double retail, double feed) { return g >= 0.0 ? retail * g : feed * g; }

}  // namespace oracle_detail

// Optimal objective of household `h`'s window: grid and gas cost minus the
// terminal credit for stored energy, as reported by optimize_prosumer_window.
// With DR the shift balance is a second state on its own grid; DR must be
// symmetric and reach across the whole window.
inline double dp_oracle_prosumer(const WindowProblem& p, int h, double soc_grid, double shift_grid = -1.0) {
    using namespace oracle_detail;
    check_size(p);
    if (!(soc_grid > 0.0)) throw DomainError("oracle grid must be positive");
    if (shift_grid <= 0.0) shift_grid = soc_grid;
    if (h < 0 || h >= static_cast<int>(p.households.size())) throw DomainError("household index out of range");
    const auto& s = p.settings;
    const HouseholdSeries& hs = p.households[static_cast<std::size_t>(h)];
    const int T = p.steps;
    if (hs.steps() != static_cast<std::size_t>(T)) throw DataError("malformed window: series lengths differ");
    const bool dr = s.dr.enabled;
    if (dr && (!s.dr.symmetric || s.dr.window_steps < T - 1))
        throw DomainError("oracle needs symmetric DR reaching across the window");

    const double retail = retail_price(p.sys.tariff), feed = p.sys.tariff.feed_in;
    const bool storage = s.topology == Topology::HES && p.sys.bes.capacity > 0.0;
    const BesSpec& b = p.sys.bes;
    const double C = storage ? b.capacity : 0.0;
    const double a = b.retention(), P = storage ? b.step_power() : 0.0;
    const double soc0 = storage ? (p.soc0.empty() ? 0.0 : p.soc0[static_cast<std::size_t>(h)]) : 0.0;
    const double vT = storage ? terminal_value(p, feed, retail) : 0.0;

    const HeatSupply heat = heat_supply(hs.heat, p.sys, s);
    std::vector<double> net(static_cast<std::size_t>(T));
    double gas = 0.0, total_shift = 0.0;
    for (int t = 0; t < T; ++t) {
        net[t] = hs.fixed[t] + hs.shiftable[t] + heat.hp_el[t] - hs.pv[t];
        gas += p.sys.tariff.gas_price() * heat.ngb_fuel[t];
        if (dr) total_shift += hs.shiftable[t];
    }

    const std::vector<double> socs = grid_to(C, soc_grid);
    // Shift balance: load pulled in so far minus load pushed out so far.
    const long J = dr ? static_cast<long>(std::floor(total_shift / shift_grid + 1e-9)) : 0;
    const std::size_t nb = static_cast<std::size_t>(2 * J + 1);
    auto bval = [&](std::size_t j) { return (static_cast<double>(j) - static_cast<double>(J)) * shift_grid; };
    const std::size_t ns = socs.size();

    // V[j][k]: value after the step with balance index j and SOC node k.
    std::vector<std::vector<double>> V(nb, std::vector<double>(ns, kInf));
    for (std::size_t k = 0; k < ns; ++k) V[static_cast<std::size_t>(J)][k] = -vT * socs[k];

    std::vector<double> cand;
    auto best_from = [&](int t, double sv, double bv, const std::vector<std::vector<double>>& next) {
        double best = kInf;
        const double held = a * sv;
        const double lo = std::max(0.0, held - P / b.eff_discharge);
        const double hi = std::min(C, held + b.eff_charge * P);
        for (std::size_t j2 = 0; j2 < nb; ++j2) {
            const double delta = bval(j2) - bv;   // load pulled in minus pushed out at t
            if (delta < -hs.shiftable[t] - 1e-12) continue;
            bool any = false;
            for (double x : next[j2])
                if (x < kInf) { any = true; break; }
            if (!any) continue;
            const double d = net[t] + delta;
            if (storage) {
                candidates(socs, lo, hi, {held, held - b.eff_charge * d, held - d / b.eff_discharge}, cand);
            } else {
                cand.assign(1, 0.0);
            }
            for (double s2 : cand) {
                const double ch = s2 > held ? (s2 - held) / b.eff_charge : 0.0;
                const double dis = s2 < held ? (held - s2) * b.eff_discharge : 0.0;
                const double v = interp(socs, next[j2], s2);
                if (v == kInf) continue;
                const double c = grid_cost(d + ch - dis, retail, feed) + v;
                if (c < best) best = c;
            }
        }
        return best;
    };

    for (int t = T - 1; t >= 1; --t) {
        std::vector<std::vector<double>> cur(nb, std::vector<double>(ns, kInf));
        for (std::size_t j = 0; j < nb; ++j)
            for (std::size_t k = 0; k < ns; ++k) cur[j][k] = best_from(t, socs[k], bval(j), V);
        V.swap(cur);
    }
    const double v0 = best_from(0, soc0, 0.0, V);
    if (v0 == kInf) throw InfeasibleError("oracle found no feasible schedule");
    return v0 + gas;
}

// Exact value of shifting alone (no storage, flat tariff, reach `window_steps`):
// every kWh moved from a deficit step to a surplus step saves retail - feed_in,
// so the optimum is a maximum transportation flow. Its value is found as the
// minimum cut by enumerating every subset of source steps.
inline double dr_shift_enumeration(const WindowProblem& p, int h) {
    if (p.steps > 8) throw DomainError("shift enumeration limited to 8 steps");
    if (h < 0 || h >= static_cast<int>(p.households.size())) throw DomainError("household index out of range");
    const auto& s = p.settings;
    const HouseholdSeries& hs = p.households[static_cast<std::size_t>(h)];
    const int T = p.steps;
    const double retail = retail_price(p.sys.tariff), feed = p.sys.tariff.feed_in;
    const HeatSupply heat = heat_supply(hs.heat, p.sys, s);
    std::vector<double> net(static_cast<std::size_t>(T));
    double base = 0.0;
    for (int t = 0; t < T; ++t) {
        net[t] = hs.fixed[t] + hs.shiftable[t] + heat.hp_el[t] - hs.pv[t];
        base += oracle_detail::grid_cost(net[t], retail, feed) + p.sys.tariff.gas_price() * heat.ngb_fuel[t];
    }
    if (!s.dr.enabled) return base;
    std::vector<int> src;
    for (int t = 0; t < T; ++t)
        if (net[t] > 0.0 && hs.shiftable[t] > 0.0) src.push_back(t);
    auto reach = [&](int from, int to) {
        if (from == to || std::abs(from - to) > s.dr.window_steps) return false;
        return s.dr.symmetric || to > from;
    };
    double cut = std::numeric_limits<double>::infinity();
    const unsigned n = static_cast<unsigned>(src.size());
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        double c = 0.0;
        std::vector<char> hit(static_cast<std::size_t>(T), 0);
        for (unsigned i = 0; i < n; ++i) {
            const int t = src[i];
            if (mask & (1u << i)) {
                for (int u = 0; u < T; ++u)
                    if (net[u] < 0.0 && reach(t, u)) hit[u] = 1;
            } else {
                c += std::min(hs.shiftable[t], net[t]);
            }
        }
        for (int u = 0; u < T; ++u)
            if (hit[u]) c += -net[u];
        cut = std::min(cut, c);
    }
    return base - (retail - feed) * cut;
}

// Pass-1 objective of the community storage on netted residuals.
inline double dp_oracle_community(const WindowProblem& p, const CommunityPassInput& in, double soc_grid) {
    using namespace oracle_detail;
    check_size(p);
    if (!(soc_grid > 0.0)) throw DomainError("oracle grid must be positive");
    const int T = p.steps;
    if (in.capacity <= 0.0) return 0.0;
    BesSpec b = p.sys.bes;
    b.capacity = in.capacity;
    const double a = b.retention(), P = b.step_power();
    const double charge_value = p.sys.tariff.feed_in + storage_levy_rate(p.sys.tariff, StorageFlow::msc_charge);
    const double delivery_value = retail_price(p.sys.tariff) - community_delivery_fee(p.sys.tariff);
    const double vT = terminal_value(p, charge_value, delivery_value);

    std::vector<std::vector<double>> nodes(static_cast<std::size_t>(T));
    double decay = 1.0;
    for (int t = 0; t < T; ++t) {
        decay *= a;
        nodes[t] = grid_to(std::max(0.0, b.capacity - in.arb_soc0 * decay), soc_grid);
    }
    std::vector<double> V(nodes[T - 1].size());
    for (std::size_t k = 0; k < V.size(); ++k) V[k] = -vT * nodes[T - 1][k];

    std::vector<double> cand;
    auto best_from = [&](int t, double sv, const std::vector<double>& next) {
        const double held = a * sv;
        const double up = std::min(in.X[t], P), down = std::min(in.R[t], P);
        candidates(nodes[t], std::max(0.0, held - down / b.eff_discharge), std::min(nodes[t].back(), held + b.eff_charge * up),
                   {held}, cand);
        double best = kInf;
        for (double s2 : cand) {
            const double ch = s2 > held ? (s2 - held) / b.eff_charge : 0.0;
            const double dis = s2 < held ? (held - s2) * b.eff_discharge : 0.0;
            const double v = interp(nodes[t], next, s2);
            if (v == kInf) continue;
            best = std::min(best, charge_value * ch - delivery_value * dis + v);
        }
        return best;
    };
    for (int t = T - 1; t >= 1; --t) {
        std::vector<double> cur(nodes[t - 1].size());
        for (std::size_t k = 0; k < cur.size(); ++k) cur[k] = best_from(t, nodes[t - 1][k], V);
        V.swap(cur);
    }
    const double v0 = best_from(0, in.soc0, V);
    if (v0 == kInf) throw InfeasibleError("oracle found no feasible community schedule");
    return v0;
}

// Pass-2 spot cost (buys minus sales) given the pass-1 flows in `pass1`.
inline double dp_oracle_arbitrage(const WindowProblem& p, double capacity, const OperatorWindow& pass1,
                                  double soc_grid) {
    using namespace oracle_detail;
    check_size(p);
    if (!(soc_grid > 0.0)) throw DomainError("oracle grid must be positive");
    const int T = p.steps;
    if (capacity <= 0.0 || !p.settings.arbitrage) return 0.0;
    BesSpec b = p.sys.bes;
    b.capacity = capacity;
    const double a = b.retention(), P = b.step_power();

    std::vector<std::vector<double>> nodes(static_cast<std::size_t>(T));
    std::vector<double> buy_max(static_cast<std::size_t>(T)), sell_max(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        nodes[t] = grid_to(std::max(0.0, capacity - pass1.comm_soc[t]), soc_grid);
        buy_max[t] = pass1.disR[t] > 0.0 ? 0.0 : std::max(0.0, P - pass1.chX[t]);
        sell_max[t] = (pass1.chX[t] > 0.0 || p.spot[t] <= 0.0) ? 0.0 : std::max(0.0, P - pass1.disR[t]);
    }
    std::vector<double> V(nodes[T - 1].size(), 0.0);
    std::vector<double> cand;
    auto best_from = [&](int t, double sv, const std::vector<double>& next) {
        const double held = a * sv;
        candidates(nodes[t], std::max(0.0, held - sell_max[t] / b.eff_discharge),
                   std::min(nodes[t].back(), held + b.eff_charge * buy_max[t]), {held}, cand);
        double best = kInf;
        for (double s2 : cand) {
            const double buy = s2 > held ? (s2 - held) / b.eff_charge : 0.0;
            const double sell = s2 < held ? (held - s2) * b.eff_discharge : 0.0;
            const double v = interp(nodes[t], next, s2);
            if (v == kInf) continue;
            best = std::min(best, p.spot[t] * (buy - sell) + v);
        }
        return best;
    };
    for (int t = T - 1; t >= 1; --t) {
        std::vector<double> cur(nodes[t - 1].size());
        for (std::size_t k = 0; k < cur.size(); ++k) cur[k] = best_from(t, nodes[t - 1][k], V);
        V.swap(cur);
    }
    const double v0 = best_from(0, p.arb_soc0, V);
    if (v0 == kInf) throw InfeasibleError("oracle found no feasible arbitrage schedule");
    return v0;
}

// Whole-window objective: the households' step-1 objectives, plus for CES the
// community pass on the pooled residuals (arbitrage is checked separately).
// CES windows with DR are rejected because their residuals are not unique.
inline double dp_oracle(const WindowProblem& p, double soc_grid) {
    oracle_detail::check_size(p);
    double total = 0.0;
    const int H = static_cast<int>(p.households.size());
    for (int h = 0; h < H; ++h) total += dp_oracle_prosumer(p, h, soc_grid);
    if (p.settings.topology == Topology::HES) return total;
    if (p.settings.dr.enabled) throw DomainError("oracle cannot pool residuals of DR households");
    const int T = p.steps;
    CommunityPassInput in;
    in.capacity = p.sys.bes.capacity;
    in.soc0 = p.soc0.empty() ? 0.0 : p.soc0[0];
    in.arb_soc0 = p.arb_soc0;
    in.X.assign(static_cast<std::size_t>(T), 0.0);
    in.R.assign(static_cast<std::size_t>(T), 0.0);
    for (int h = 0; h < H; ++h) {
        const auto& hs = p.households[static_cast<std::size_t>(h)];
        const HeatSupply heat = heat_supply(hs.heat, p.sys, p.settings);
        for (int t = 0; t < T; ++t) {
            const double net = hs.fixed[t] + hs.shiftable[t] + heat.hp_el[t] - hs.pv[t];
            in.R[t] += std::max(net, 0.0);
            in.X[t] += std::max(-net, 0.0);
        }
    }
    for (int t = 0; t < T; ++t) {
        const double sh = p.settings.sharing ? std::min(in.X[t], in.R[t]) : 0.0;
        in.X[t] -= sh;
        in.R[t] -= sh;
        if (!p.settings.sharing && in.X[t] > 0.0 && in.R[t] > 0.0) {
            if (in.X[t] >= in.R[t]) in.R[t] = 0.0;
            else in.X[t] = 0.0;
        }
    }
    return total + dp_oracle_community(p, in, soc_grid);
}

}  // namespace cesopt

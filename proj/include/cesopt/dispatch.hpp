#pragma once

// Two-step rolling-horizon dispatch.
//
// Step 1 solves one LP per household and window: grid imports/exports, the
// household's own battery (HES) and load shifting. Step 2 (CES only) pools
// the residual surplus X and deficit R of all households, lets them net out
// directly, and then runs the operator's storage LP in two lexicographic
// passes: community self-consumption first, spot arbitrage in the leftover
// headroom second.

#include "cesopt/costmodel.hpp"
#include "cesopt/devices.hpp"
#include "cesopt/error.hpp"
#include "cesopt/lp.hpp"
#include "cesopt/market.hpp"
#include "cesopt/series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cesopt {

struct DrSettings {
    bool enabled = false;
    double max_share = 0.4;
    int window_steps = 16;
    bool symmetric = true;   // false: delay only
};

struct DispatchSettings {
    Topology topology = Topology::HES;
    int window_steps = kStepsPerDay;
    double terminal_soc_value = -1.0;   // EUR/kWh of stored energy at window end; < 0 picks the default
    double tie_break = 1e-9;            // EUR per kWh of storage throughput or shifted load
    bool arbitrage = true;
    bool sharing = true;                // CES: households net surplus and deficit directly
    bool hp_enabled = false;
    bool ngb_backup = false;            // HP scenarios: boiler covers heat above the HP cap
    DrSettings dr;
};

// Per-step household inputs (kWh per step). `shiftable` is zero without DR.
struct HouseholdSeries {
    std::vector<double> fixed, shiftable, heat, pv;

    std::size_t steps() const { return fixed.size(); }
    HouseholdSeries slice(std::size_t off, std::size_t len) const {
        auto cut = [&](const std::vector<double>& v) {
            return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(off),
                                       v.begin() + static_cast<std::ptrdiff_t>(off + len));
        };
        return {cut(fixed), cut(shiftable), cut(heat), cut(pv)};
    }
};

struct AnnualInputs {
    std::vector<HouseholdSeries> households;
    std::vector<double> spot;

    std::size_t steps() const { return spot.size(); }
};

// Device parameters. `bes.capacity` is per household for HES and the pooled
// size for CES.
struct SystemSpec {
    TariffScheme tariff;
    HpSpec hp;
    NgbSpec ngb;
    BesSpec bes;
};

struct WindowProblem {
    int steps = 0;
    std::vector<HouseholdSeries> households;
    std::vector<double> spot;
    SystemSpec sys;
    DispatchSettings settings;
    std::vector<double> soc0;   // HES: per household; CES: pooled community share
    double arb_soc0 = 0.0;      // CES: energy held for arbitrage
};

struct DrArc {
    int from = 0, to = 0;
    double amount = 0.0;
};

struct HeatSupply {
    std::vector<double> hp_heat, ngb_heat, hp_el, ngb_fuel;
};

inline HeatSupply heat_supply(const std::vector<double>& heat, const SystemSpec& sys, const DispatchSettings& s,
                              std::size_t offset = 0) {
    HeatSupply out;
    const std::size_t n = heat.size();
    out.hp_heat.assign(n, 0.0);
    out.ngb_heat.assign(n, 0.0);
    out.hp_el.assign(n, 0.0);
    out.ngb_fuel.assign(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const double q = heat[t];
        if (q < 0.0) throw DataError("negative heat demand at step " + std::to_string(offset + t));
        if (s.hp_enabled) {
            const double cap = sys.hp.step_cap();
            double hp = q, ngb = 0.0;
            if (q > cap + 1e-12) {
                if (!s.ngb_backup || q > cap + sys.ngb.step_cap() + 1e-12)
                    throw InfeasibleError("heat demand " + std::to_string(q) + " kWh_th exceeds heat pump capacity at step " +
                                          std::to_string(offset + t));
                hp = cap;
                ngb = q - cap;
            }
            out.hp_heat[t] = hp;
            out.hp_el[t] = hp_electric(hp, sys.hp);
            out.ngb_heat[t] = ngb;
            out.ngb_fuel[t] = ngb > 0.0 ? ngb_fuel(ngb, sys.ngb) : 0.0;
        } else {
            if (q > sys.ngb.step_cap() + 1e-12)
                throw InfeasibleError("heat demand " + std::to_string(q) + " kWh_th exceeds boiler capacity at step " +
                                      std::to_string(offset + t));
            out.ngb_heat[t] = q;
            out.ngb_fuel[t] = ngb_fuel(q, sys.ngb);
        }
    }
    return out;
}

// Midpoint between the value of exporting and the value of delivering one
// stored kWh; keeps daily windows from dumping or hoarding at the boundary.
inline double default_terminal_value(double charge_value, double delivery_value, const BesSpec& b) {
    return 0.5 * (charge_value / b.eff_charge + delivery_value * b.eff_discharge);
}

inline double terminal_value(const WindowProblem& p, double charge_value, double delivery_value) {
    if (p.settings.terminal_soc_value >= 0.0) return p.settings.terminal_soc_value;
    return default_terminal_value(charge_value, delivery_value, p.sys.bes);
}

// ---------------------------------------------------------------------------
// Step 1: prosumer window

struct ProsumerWindow {
    std::vector<double> imp, exp, ch, dis, soc, dr_out, dr_in;
    std::vector<DrArc> arcs;
    HeatSupply heat;
    double cost = 0.0;        // EUR, grid and gas, without terminal credit
    double objective = 0.0;   // cost minus terminal credit
    int lp_iterations = 0;
    bool warm_started = false;

    const std::vector<double>& surplus() const { return exp; }   // X_h
    const std::vector<double>& deficit() const { return imp; }   // R_h
};

namespace dispatch_detail {

inline double clean(double v) { return std::abs(v) < 1e-12 ? 0.0 : v; }

inline void throw_lp(lp::Status st, const std::string& what) {
    throw InfeasibleError(what + ": LP " + lp::to_string(st));
}

}  // namespace dispatch_detail

inline ProsumerWindow optimize_prosumer_window(const WindowProblem& p, int h) {
    using namespace lp;
    if (h < 0 || h >= static_cast<int>(p.households.size())) throw DomainError("household index out of range");
    const HouseholdSeries& hs = p.households[static_cast<std::size_t>(h)];
    const int T = p.steps;
    if (T <= 0 || hs.steps() != static_cast<std::size_t>(T) || hs.shiftable.size() != hs.fixed.size() ||
        hs.heat.size() != hs.fixed.size() || hs.pv.size() != hs.fixed.size())
        throw DataError("malformed window: series lengths differ");
    const auto& s = p.settings;
    const double retail = retail_price(p.sys.tariff);
    const double feed = p.sys.tariff.feed_in;
    const bool storage = s.topology == Topology::HES && p.sys.bes.capacity > 0.0;
    const bool dr = s.dr.enabled;

    ProsumerWindow out;
    out.heat = heat_supply(hs.heat, p.sys, s);
    std::vector<double> D(static_cast<std::size_t>(T)), net(static_cast<std::size_t>(T));
    double gas = 0.0;
    for (int t = 0; t < T; ++t) {
        D[t] = hs.fixed[t] + hs.shiftable[t] + out.heat.hp_el[t];
        net[t] = D[t] - hs.pv[t];
        gas += p.sys.tariff.gas_price() * out.heat.ngb_fuel[t];
    }
    out.imp.assign(T, 0.0);
    out.exp.assign(T, 0.0);
    out.ch.assign(T, 0.0);
    out.dis.assign(T, 0.0);
    out.soc.assign(storage ? T : 0, 0.0);
    out.dr_out.assign(T, 0.0);
    out.dr_in.assign(T, 0.0);

    // Candidate shifts. Without storage the only useful moves go from deficit
    // to surplus steps. With storage a surplus step may still hand load to
    // another surplus step, which frees PV for charging; moving it onto a
    // deficit step never pays.
    struct Cand { int from, to; };
    std::vector<Cand> cands;
    if (dr) {
        const int W = s.dr.window_steps;
        for (int t = 0; t < T; ++t) {
            if (hs.shiftable[t] <= 1e-12) continue;
            const bool deficit = net[t] > 1e-12;
            if (!storage && !deficit) continue;
            const int lo = s.dr.symmetric ? std::max(0, t - W) : t + 1;
            const int hi = std::min(T - 1, t + W);
            for (int u = lo; u <= hi; ++u) {
                if (u == t) continue;
                if ((!storage || !deficit) && net[u] >= -1e-12) continue;
                cands.push_back({t, u});
            }
        }
    }

    if (!storage && cands.empty()) {
        for (int t = 0; t < T; ++t) {
            out.imp[t] = std::max(net[t], 0.0);
            out.exp[t] = std::max(-net[t], 0.0);
            out.cost += retail * out.imp[t] - feed * out.exp[t];
        }
        out.cost += gas;
        out.objective = out.cost;
        return out;
    }

    const BesSpec& b = p.sys.bes;
    const double a = b.retention();
    const double P = b.step_power();
    const double soc0 = storage ? (p.soc0.empty() ? 0.0 : p.soc0[static_cast<std::size_t>(h)]) : 0.0;
    if (storage && (soc0 < -1e-9 || soc0 > b.capacity + 1e-9)) throw DomainError("initial SOC outside [0, capacity]");
    const double vT = storage ? terminal_value(p, feed, retail) : 0.0;
    const double tie = s.tie_break;

    Problem lp;
    const int per = storage ? 5 : 2;
    for (int t = 0; t < T; ++t) {
        lp.add_column(0.0, kInf, retail);   // imp
        lp.add_column(0.0, kInf, -feed);    // exp
        if (storage) {
            lp.add_column(0.0, P, tie);                                    // ch
            lp.add_column(0.0, P, tie);                                    // dis
            lp.add_column(0.0, b.capacity, t == T - 1 ? -vT : 0.0);        // soc
        }
    }
    const int arc0 = lp.num_cols();
    for (std::size_t k = 0; k < cands.size(); ++k) lp.add_column(0.0, kInf, tie);

    auto col = [&](int t, int k) { return t * per + k; };
    std::vector<int> basis;
    std::vector<char> at_upper;
    for (int t = 0; t < T; ++t) {
        const int r = lp.add_row(Sense::Equal, net[t]);
        lp.add_entry(r, col(t, 0), 1.0);
        lp.add_entry(r, col(t, 1), -1.0);
        if (storage) {
            lp.add_entry(r, col(t, 2), -1.0);
            lp.add_entry(r, col(t, 3), 1.0);
        }
    }
    if (storage) {
        for (int t = 0; t < T; ++t) {
            const int r = lp.add_row(Sense::Equal, t == 0 ? a * soc0 : 0.0);
            lp.add_entry(r, col(t, 4), 1.0);
            if (t > 0) lp.add_entry(r, col(t - 1, 4), -a);
            lp.add_entry(r, col(t, 2), -b.eff_charge);
            lp.add_entry(r, col(t, 3), 1.0 / b.eff_discharge);
        }
        // Start from the greedy schedule (store every surplus, serve every
        // deficit), which is already optimal under a flat tariff without
        // shifting. Per step, the variables strictly inside their bounds are
        // basic; the pair is topped up with soc and a grid column.
        std::vector<int> bal_basic(T), soc_basic(T);
        at_upper.assign(static_cast<std::size_t>(lp.num_cols()), 0);
        double prev = soc0;
        for (int t = 0; t < T; ++t) {
            const double held = a * prev;
            double ch = 0.0, dis = 0.0, imp = 0.0, exp = 0.0;
            if (net[t] < 0.0) {
                ch = std::max(0.0, std::min({-net[t], P, (b.capacity - held) / b.eff_charge}));
                exp = -net[t] - ch;
            } else {
                dis = std::max(0.0, std::min({net[t], P, held * b.eff_discharge}));
                imp = net[t] - dis;
            }
            double soc = held + b.eff_charge * ch - dis / b.eff_discharge;
            auto interior = [](double v, double up) { return v > 1e-12 && (up == kInf || v < up - 1e-12 * (1.0 + up)); };
            std::vector<int> B;
            if (interior(imp, kInf)) B.push_back(col(t, 0));
            if (interior(exp, kInf)) B.push_back(col(t, 1));
            if (interior(ch, P)) B.push_back(col(t, 2));
            if (interior(dis, P)) B.push_back(col(t, 3));
            const bool soc_in = interior(soc, b.capacity);
            if (soc_in) B.push_back(col(t, 4));
            // An empty battery facing a deficit (or a full one facing a
            // surplus) keeps the idle storage flow basic at zero, so the
            // stored energy carries its delivery (or charging) value.
            const int idle = net[t] >= 0.0 ? col(t, 3) : col(t, 2);
            if (B.size() < 2 && std::find(B.begin(), B.end(), idle) == B.end()) B.push_back(idle);
            if (B.size() < 2 && !soc_in) B.push_back(col(t, 4));
            if (B.size() < 2) B.push_back(std::find(B.begin(), B.end(), col(t, 1)) == B.end() ? col(t, 0) : col(t, 2));
            if (ch >= P - 1e-12 * (1.0 + P) && ch > 0.0) at_upper[static_cast<std::size_t>(col(t, 2))] = 1;
            if (dis >= P - 1e-12 * (1.0 + P) && dis > 0.0) at_upper[static_cast<std::size_t>(col(t, 3))] = 1;
            if (!soc_in && std::find(B.begin(), B.end(), col(t, 4)) == B.end() &&
                soc >= b.capacity - 1e-12 * (1.0 + b.capacity) && b.capacity > 0.0) {
                at_upper[static_cast<std::size_t>(col(t, 4))] = 1;
                soc = b.capacity;
            }
            bal_basic[t] = B[0];
            soc_basic[t] = B[1];
            prev = soc;
        }
        for (int t = 0; t < T; ++t) basis.push_back(bal_basic[t]);
        for (int t = 0; t < T; ++t) basis.push_back(soc_basic[t]);
    } else {
        for (int t = 0; t < T; ++t) basis.push_back(net[t] >= 0.0 ? col(t, 0) : col(t, 1));
    }
    if (!cands.empty()) {
        std::vector<int> cap_row(T, -1);
        for (std::size_t k = 0; k < cands.size(); ++k) {
            const int j = arc0 + static_cast<int>(k);
            const auto [from, to] = cands[k];
            lp.add_entry(from, j, 1.0);   // balance rows are 0..T-1
            lp.add_entry(to, j, -1.0);
            if (cap_row[from] < 0) cap_row[from] = lp.add_row(Sense::LessEqual, hs.shiftable[from]);
            lp.add_entry(cap_row[from], j, 1.0);
        }
        for (int r = static_cast<int>(basis.size()); r < lp.num_rows(); ++r) basis.push_back(lp.num_cols() + r);
    }

    Options opt;
    opt.initial_basis = basis;
    opt.initial_at_upper = at_upper;
    const Solution sol = solve(lp, opt);
    if (sol.status != Status::Optimal) dispatch_detail::throw_lp(sol.status, "prosumer window");
    out.lp_iterations = sol.iterations;
    out.warm_started = sol.warm_started;

    using dispatch_detail::clean;
    for (int t = 0; t < T; ++t) {
        out.imp[t] = clean(sol.x[col(t, 0)]);
        out.exp[t] = clean(sol.x[col(t, 1)]);
        if (storage) {
            out.ch[t] = clean(sol.x[col(t, 2)]);
            out.dis[t] = clean(sol.x[col(t, 3)]);
            out.soc[t] = std::clamp(clean(sol.x[col(t, 4)]), 0.0, b.capacity);
        }
    }
    for (std::size_t k = 0; k < cands.size(); ++k) {
        const double v = clean(sol.x[arc0 + static_cast<int>(k)]);
        if (v <= 0.0) continue;
        out.arcs.push_back({cands[k].from, cands[k].to, v});
        out.dr_out[cands[k].from] += v;
        out.dr_in[cands[k].to] += v;
    }
    for (int t = 0; t < T; ++t) out.cost += retail * out.imp[t] - feed * out.exp[t];
    out.cost += gas;
    out.objective = out.cost - (storage ? vT * out.soc[T - 1] : 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Step 2: operator window (CES)

struct OperatorWindow {
    std::vector<double> shared;          // surplus used directly by other households
    std::vector<double> chX, disR;       // community charge from X', delivery to R'
    std::vector<double> comm_soc;
    std::vector<double> buy, sell, arb_soc;
    double community_objective = 0.0;    // pass 1, without tie-break terms
    double arbitrage_cost = 0.0;         // pass 2: spot cost of buys minus sales
    int lp_iterations = 0;
};

// Pass 1 on already-netted residuals.
struct CommunityPassInput {
    std::vector<double> X, R;   // after direct sharing
    double capacity = 0.0;
    double soc0 = 0.0;
    double arb_soc0 = 0.0;
};

inline void community_pass(const WindowProblem& p, const CommunityPassInput& in, OperatorWindow& out) {
    using namespace lp;
    const int T = p.steps;
    const BesSpec b = [&] { BesSpec x = p.sys.bes; x.capacity = in.capacity; return x; }();
    const double a = b.retention();
    const double P = b.step_power();
    const double charge_value = p.sys.tariff.feed_in + storage_levy_rate(p.sys.tariff, StorageFlow::msc_charge);
    const double delivery_value = retail_price(p.sys.tariff) - community_delivery_fee(p.sys.tariff);
    out.chX.assign(T, 0.0);
    out.disR.assign(T, 0.0);
    out.comm_soc.assign(T, 0.0);
    out.community_objective = 0.0;
    if (in.capacity <= 0.0) return;
    const double vT = terminal_value(p, charge_value, delivery_value);
    const double tie = p.settings.tie_break;

    Problem lp;
    std::vector<int> basis;
    double decay = 1.0;
    for (int t = 0; t < T; ++t) {
        decay *= a;
        lp.add_column(0.0, std::min(in.X[t], P), charge_value + tie);
        lp.add_column(0.0, std::min(in.R[t], P), -delivery_value + tie);
        lp.add_column(0.0, std::max(0.0, b.capacity - in.arb_soc0 * decay), t == T - 1 ? -vT : 0.0);
    }
    for (int t = 0; t < T; ++t) {
        const int r = lp.add_row(Sense::Equal, t == 0 ? a * in.soc0 : 0.0);
        lp.add_entry(r, 3 * t + 2, 1.0);
        if (t > 0) lp.add_entry(r, 3 * (t - 1) + 2, -a);
        lp.add_entry(r, 3 * t, -b.eff_charge);
        lp.add_entry(r, 3 * t + 1, 1.0 / b.eff_discharge);
        basis.push_back(3 * t + 2);
    }
    Options opt;
    opt.initial_basis = basis;
    const Solution sol = solve(lp, opt);
    if (sol.status != Status::Optimal) dispatch_detail::throw_lp(sol.status, "community storage pass");
    out.lp_iterations += sol.iterations;
    using dispatch_detail::clean;
    for (int t = 0; t < T; ++t) {
        out.chX[t] = clean(sol.x[3 * t]);
        out.disR[t] = clean(sol.x[3 * t + 1]);
        out.comm_soc[t] = std::max(0.0, clean(sol.x[3 * t + 2]));
        out.community_objective += charge_value * out.chX[t] - delivery_value * out.disR[t];
    }
    out.community_objective -= vT * out.comm_soc[T - 1];
}

// Pass 2: arbitrage in the headroom left by pass 1, with pass-1 flows fixed.
inline void arbitrage_pass(const WindowProblem& p, double capacity, OperatorWindow& out) {
    using namespace lp;
    const int T = p.steps;
    out.buy.assign(T, 0.0);
    out.sell.assign(T, 0.0);
    out.arb_soc.assign(T, 0.0);
    out.arbitrage_cost = 0.0;
    if (capacity <= 0.0) return;
    BesSpec b = p.sys.bes;
    b.capacity = capacity;
    const double a = b.retention();
    const double P = b.step_power();
    const double tie = p.settings.tie_break;
    if (!p.settings.arbitrage) {
        // Leftover arbitrage energy just decays.
        double s = p.arb_soc0;
        for (int t = 0; t < T; ++t) out.arb_soc[t] = s = s * a;
        return;
    }
    Problem lp;
    std::vector<int> basis;
    for (int t = 0; t < T; ++t) {
        const double buy_max = out.disR[t] > 0.0 ? 0.0 : std::max(0.0, P - out.chX[t]);
        const double sell_max = (out.chX[t] > 0.0 || p.spot[t] <= 0.0) ? 0.0 : std::max(0.0, P - out.disR[t]);
        lp.add_column(0.0, buy_max, p.spot[t] + tie);
        lp.add_column(0.0, sell_max, -p.spot[t] + tie);
        lp.add_column(0.0, std::max(0.0, capacity - out.comm_soc[t]), 0.0);
    }
    for (int t = 0; t < T; ++t) {
        const int r = lp.add_row(Sense::Equal, t == 0 ? a * p.arb_soc0 : 0.0);
        lp.add_entry(r, 3 * t + 2, 1.0);
        if (t > 0) lp.add_entry(r, 3 * (t - 1) + 2, -a);
        lp.add_entry(r, 3 * t, -b.eff_charge);
        lp.add_entry(r, 3 * t + 1, 1.0 / b.eff_discharge);
        basis.push_back(3 * t + 2);
    }
    Options opt;
    opt.initial_basis = basis;
    const Solution sol = solve(lp, opt);
    if (sol.status != Status::Optimal) dispatch_detail::throw_lp(sol.status, "arbitrage pass");
    out.lp_iterations += sol.iterations;
    using dispatch_detail::clean;
    for (int t = 0; t < T; ++t) {
        out.buy[t] = clean(sol.x[3 * t]);
        out.sell[t] = clean(sol.x[3 * t + 1]);
        out.arb_soc[t] = std::max(0.0, clean(sol.x[3 * t + 2]));
        out.arbitrage_cost += p.spot[t] * (out.buy[t] - out.sell[t]);
    }
}

// R and X are the pooled step-1 residuals of all households.
inline OperatorWindow optimize_operator_window(const WindowProblem& p, const std::vector<double>& R,
                                               const std::vector<double>& X) {
    if (p.settings.topology != Topology::CES) throw DomainError("operator window requires CES topology");
    const int T = p.steps;
    if (R.size() != static_cast<std::size_t>(T) || X.size() != static_cast<std::size_t>(T) ||
        p.spot.size() != static_cast<std::size_t>(T))
        throw DataError("malformed operator window");
    OperatorWindow out;
    CommunityPassInput in;
    in.capacity = p.sys.bes.capacity;
    in.soc0 = p.soc0.empty() ? 0.0 : p.soc0[0];
    in.arb_soc0 = p.arb_soc0;
    out.shared.assign(T, 0.0);
    in.X.resize(T);
    in.R.resize(T);
    for (int t = 0; t < T; ++t) {
        const double sh = p.settings.sharing ? std::min(X[t], R[t]) : 0.0;
        out.shared[t] = sh;
        in.X[t] = std::max(0.0, X[t] - sh);
        in.R[t] = std::max(0.0, R[t] - sh);
        if (!p.settings.sharing && in.X[t] > 0.0 && in.R[t] > 0.0) {
            // Without direct sharing the pool may still not charge and discharge at once.
            if (in.X[t] >= in.R[t]) in.R[t] = 0.0;
            else in.X[t] = 0.0;
        }
    }
    community_pass(p, in, out);
    arbitrage_pass(p, in.capacity, out);
    return out;
}

// ---------------------------------------------------------------------------
// Annual results

struct HouseholdFlows {
    std::vector<double> load_el;   // electrical load after shifting
    std::vector<double> hp_el;
    std::vector<double> pv_to_load, pv_to_hp, pv_to_storage, pv_to_community, pv_to_grid;
    std::vector<double> grid_to_load, grid_to_hp;
    std::vector<double> storage_to_load, storage_to_hp;
    std::vector<double> community_to_load, community_to_hp;
    std::vector<double> dr_out, dr_in;
    std::vector<double> hp_heat, ngb_heat, ngb_fuel;
    std::vector<DrArc> arcs;   // global step indices
    double eu_cost = 0.0;      // EUR

    void resize(std::size_t n) {
        for (auto* v : {&load_el, &hp_el, &pv_to_load, &pv_to_hp, &pv_to_storage, &pv_to_community, &pv_to_grid,
                        &grid_to_load, &grid_to_hp, &storage_to_load, &storage_to_hp, &community_to_load,
                        &community_to_hp, &dr_out, &dr_in, &hp_heat, &ngb_heat, &ngb_fuel})
            v->assign(n, 0.0);
    }
};

struct StorageTrace {
    BesSpec spec;
    double soc_initial = 0.0;
    std::vector<double> soc, charge, discharge;   // discharge at the delivery point
};

struct DispatchResult {
    Topology topology = Topology::HES;
    int steps = 0;
    int window_steps = kStepsPerDay;
    std::vector<HouseholdFlows> households;
    std::vector<StorageTrace> storages;   // HES: one per household; CES: the pooled unit
    // CES operator flows
    std::vector<double> shared, ces_charge_from_community, ces_discharge_to_community;
    std::vector<double> spot_buy_to_ces, ces_to_spot, comm_soc, arb_soc;
    double op_profit = 0.0;        // EUR
    double retail_margin = 0.0;    // part of op_profit from retail sales
    double arbitrage_profit = 0.0; // part of op_profit from spot trading

    double eu_cost_total() const {
        double s = 0.0;
        for (const auto& h : households) s += h.eu_cost;
        return s;
    }
};

// Step-1 results for a full year, reusable across CES capacities.
struct ProsumerStage {
    std::vector<std::vector<double>> imp, exp, ch, dis, soc, dr_out, dr_in;
    std::vector<std::vector<DrArc>> arcs;
    std::vector<HeatSupply> heat;
    std::vector<double> gas_cost;
    std::vector<double> soc_initial;
    BesSpec household_bes;   // capacity 0 for CES
};

inline WindowProblem make_window(const AnnualInputs& in, const SystemSpec& sys, const DispatchSettings& s,
                                 std::size_t off, std::size_t len) {
    WindowProblem w;
    w.steps = static_cast<int>(len);
    w.sys = sys;
    w.settings = s;
    w.spot.assign(in.spot.begin() + static_cast<std::ptrdiff_t>(off),
                  in.spot.begin() + static_cast<std::ptrdiff_t>(off + len));
    for (const auto& h : in.households) w.households.push_back(h.slice(off, len));
    return w;
}

inline void check_inputs(const AnnualInputs& in, const DispatchSettings& s) {
    const std::size_t n = in.steps();
    if (n == 0) throw DataError("empty inputs");
    if (s.window_steps <= 0 || n % static_cast<std::size_t>(s.window_steps) != 0)
        throw DataError("horizon of " + std::to_string(n) + " steps is not a multiple of the window length");
    for (const auto& h : in.households)
        if (h.fixed.size() != n || h.shiftable.size() != n || h.heat.size() != n || h.pv.size() != n)
            throw DataError("household series length differs from the spot series");
}

// Household optimization over the whole horizon. `sys.bes` applies to each
// household under HES; CES households have no storage of their own here.
inline ProsumerStage prosumer_stage(const AnnualInputs& in, const SystemSpec& sys, const DispatchSettings& s) {
    check_inputs(in, s);
    const std::size_t n = in.steps(), H = in.households.size();
    const std::size_t W = static_cast<std::size_t>(s.window_steps);
    ProsumerStage st;
    st.household_bes = sys.bes;
    if (s.topology == Topology::CES) st.household_bes.capacity = 0.0;
    SystemSpec wsys = sys;
    wsys.bes = st.household_bes;
    for (auto* v : {&st.imp, &st.exp, &st.ch, &st.dis, &st.dr_out, &st.dr_in}) v->assign(H, std::vector<double>(n, 0.0));
    const bool storage = st.household_bes.capacity > 0.0;
    st.soc.assign(H, std::vector<double>(storage ? n : 0, 0.0));
    st.arcs.assign(H, {});
    st.heat.assign(H, {});
    st.gas_cost.assign(H, 0.0);
    st.soc_initial.assign(H, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
        st.heat[h].hp_heat.reserve(n);
        double soc = st.soc_initial[h];
        for (std::size_t off = 0; off < n; off += W) {
            WindowProblem w;
            w.steps = static_cast<int>(W);
            w.sys = wsys;
            w.settings = s;
            w.households.push_back(in.households[h].slice(off, W));
            w.spot.assign(in.spot.begin() + static_cast<std::ptrdiff_t>(off),
                          in.spot.begin() + static_cast<std::ptrdiff_t>(off + W));
            w.soc0 = {soc};
            ProsumerWindow r;
            try {
                r = optimize_prosumer_window(w, 0);
            } catch (const InfeasibleError& e) {
                throw InfeasibleError("household " + std::to_string(h + 1) + ", window " + std::to_string(off / W) +
                                      ": " + e.what());
            }
            std::copy(r.imp.begin(), r.imp.end(), st.imp[h].begin() + static_cast<std::ptrdiff_t>(off));
            std::copy(r.exp.begin(), r.exp.end(), st.exp[h].begin() + static_cast<std::ptrdiff_t>(off));
            std::copy(r.ch.begin(), r.ch.end(), st.ch[h].begin() + static_cast<std::ptrdiff_t>(off));
            std::copy(r.dis.begin(), r.dis.end(), st.dis[h].begin() + static_cast<std::ptrdiff_t>(off));
            std::copy(r.dr_out.begin(), r.dr_out.end(), st.dr_out[h].begin() + static_cast<std::ptrdiff_t>(off));
            std::copy(r.dr_in.begin(), r.dr_in.end(), st.dr_in[h].begin() + static_cast<std::ptrdiff_t>(off));
            if (storage) {
                std::copy(r.soc.begin(), r.soc.end(), st.soc[h].begin() + static_cast<std::ptrdiff_t>(off));
                soc = r.soc.back();
            }
            for (const auto& arc : r.arcs)
                st.arcs[h].push_back({arc.from + static_cast<int>(off), arc.to + static_cast<int>(off), arc.amount});
            auto& hs = st.heat[h];
            hs.hp_heat.insert(hs.hp_heat.end(), r.heat.hp_heat.begin(), r.heat.hp_heat.end());
            hs.ngb_heat.insert(hs.ngb_heat.end(), r.heat.ngb_heat.begin(), r.heat.ngb_heat.end());
            hs.hp_el.insert(hs.hp_el.end(), r.heat.hp_el.begin(), r.heat.hp_el.end());
            hs.ngb_fuel.insert(hs.ngb_fuel.end(), r.heat.ngb_fuel.begin(), r.heat.ngb_fuel.end());
        }
        for (double f : st.heat[h].ngb_fuel) st.gas_cost[h] += sys.tariff.gas_price() * f;
    }
    return st;
}

namespace dispatch_detail {

// Splits PV and residual supply of one household-step between the
// electrical load and the heat pump in proportion to their demand.
struct StepSplit {
    double pv_to_load = 0.0, pv_to_hp = 0.0, surplus = 0.0, deficit = 0.0, fl = 0.0, fh = 0.0;
};

inline StepSplit split_step(double pv, double load_el, double hp_el) {
    StepSplit s;
    const double demand = load_el + hp_el;
    const double direct = std::min(pv, demand);
    if (demand > 0.0) {
        s.pv_to_load = direct * load_el / demand;
        s.pv_to_hp = direct * hp_el / demand;
        s.fl = load_el / demand;
        s.fh = hp_el / demand;
    }
    s.surplus = pv - direct;
    s.deficit = demand - direct;
    return s;
}

inline double gap(double a, double b) { return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b))); }

}  // namespace dispatch_detail

inline void fill_household_base(HouseholdFlows& f, const HouseholdSeries& hs, const ProsumerStage& st, std::size_t h) {
    const std::size_t n = hs.steps();
    f.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        f.dr_out[t] = st.dr_out[h][t];
        f.dr_in[t] = st.dr_in[h][t];
        f.load_el[t] = std::max(0.0, hs.fixed[t] + hs.shiftable[t] - f.dr_out[t] + f.dr_in[t]);
        f.hp_el[t] = st.heat[h].hp_el[t];
        f.hp_heat[t] = st.heat[h].hp_heat[t];
        f.ngb_heat[t] = st.heat[h].ngb_heat[t];
        f.ngb_fuel[t] = st.heat[h].ngb_fuel[t];
    }
    f.arcs = st.arcs[h];
}

// Builds the household-only result (HES, or any topology without a pool).
inline DispatchResult assemble_hes(const AnnualInputs& in, const SystemSpec& sys, const DispatchSettings& s,
                                   const ProsumerStage& st) {
    using namespace dispatch_detail;
    const std::size_t n = in.steps(), H = in.households.size();
    const double retail = retail_price(sys.tariff), feed = sys.tariff.feed_in;
    DispatchResult res;
    res.topology = Topology::HES;
    res.steps = static_cast<int>(n);
    res.window_steps = s.window_steps;
    res.households.resize(H);
    const bool storage = st.household_bes.capacity > 0.0;
    std::vector<double> sales(n, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
        HouseholdFlows& f = res.households[h];
        const HouseholdSeries& hs = in.households[h];
        fill_household_base(f, hs, st, h);
        for (std::size_t t = 0; t < n; ++t) {
            const StepSplit sp = split_step(hs.pv[t], f.load_el[t], f.hp_el[t]);
            const double ch = st.ch[h][t], dis = st.dis[h][t];
            if (ch > sp.surplus + 1e-7 * (1.0 + sp.surplus))
                throw std::logic_error("storage charged from the grid at step " + std::to_string(t));
            if (dis > sp.deficit + 1e-7 * (1.0 + sp.deficit))
                throw std::logic_error("storage discharged to the grid at step " + std::to_string(t));
            f.pv_to_load[t] = sp.pv_to_load;
            f.pv_to_hp[t] = sp.pv_to_hp;
            f.pv_to_storage[t] = std::min(ch, sp.surplus);
            f.pv_to_grid[t] = std::max(0.0, sp.surplus - f.pv_to_storage[t]);
            const double from_storage = std::min(dis, sp.deficit);
            const double from_grid = std::max(0.0, sp.deficit - from_storage);
            f.storage_to_load[t] = from_storage * sp.fl;
            f.storage_to_hp[t] = from_storage * sp.fh;
            f.grid_to_load[t] = from_grid * sp.fl;
            f.grid_to_hp[t] = from_grid * sp.fh;
            if (gap(from_grid, st.imp[h][t]) > 1e-7 || gap(f.pv_to_grid[t], st.exp[h][t]) > 1e-7)
                throw std::logic_error("flow decomposition does not match the LP at step " + std::to_string(t));
            f.eu_cost += retail * from_grid - feed * f.pv_to_grid[t];
            sales[t] += from_grid;
        }
        f.eu_cost += st.gas_cost[h];
        if (storage) {
            StorageTrace tr;
            tr.spec = st.household_bes;
            tr.soc_initial = st.soc_initial[h];
            tr.soc = st.soc[h];
            tr.charge = st.ch[h];
            tr.discharge = st.dis[h];
            res.storages.push_back(std::move(tr));
        }
    }
    for (std::size_t t = 0; t < n; ++t) res.retail_margin += (sys.tariff.sales_component() - in.spot[t]) * sales[t];
    res.op_profit = res.retail_margin;
    return res;
}

// Step 2 for the pooled storage on top of a cached prosumer stage.
inline DispatchResult operator_stage(const AnnualInputs& in, const SystemSpec& sys, const DispatchSettings& s,
                                     const ProsumerStage& st) {
    using namespace dispatch_detail;
    if (s.topology != Topology::CES) throw DomainError("operator stage requires CES topology");
    check_inputs(in, s);
    const std::size_t n = in.steps(), H = in.households.size();
    const std::size_t W = static_cast<std::size_t>(s.window_steps);
    const double retail = retail_price(sys.tariff), feed = sys.tariff.feed_in;
    const double fee = community_delivery_fee(sys.tariff);
    const double levy = storage_levy_rate(sys.tariff, StorageFlow::msc_charge);

    DispatchResult res;
    res.topology = Topology::CES;
    res.steps = static_cast<int>(n);
    res.window_steps = s.window_steps;
    for (auto* v : {&res.shared, &res.ces_charge_from_community, &res.ces_discharge_to_community, &res.spot_buy_to_ces,
                    &res.ces_to_spot, &res.comm_soc, &res.arb_soc})
        v->assign(n, 0.0);

    std::vector<double> X(n, 0.0), R(n, 0.0);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t t = 0; t < n; ++t) {
            X[t] += st.exp[h][t];
            R[t] += st.imp[h][t];
        }

    double comm = 0.0, arb = 0.0;
    for (std::size_t off = 0; off < n; off += W) {
        WindowProblem w;
        w.steps = static_cast<int>(W);
        w.sys = sys;
        w.settings = s;
        w.spot.assign(in.spot.begin() + static_cast<std::ptrdiff_t>(off),
                      in.spot.begin() + static_cast<std::ptrdiff_t>(off + W));
        w.soc0 = {comm};
        w.arb_soc0 = arb;
        const std::vector<double> Xw(X.begin() + static_cast<std::ptrdiff_t>(off),
                                     X.begin() + static_cast<std::ptrdiff_t>(off + W));
        const std::vector<double> Rw(R.begin() + static_cast<std::ptrdiff_t>(off),
                                     R.begin() + static_cast<std::ptrdiff_t>(off + W));
        OperatorWindow ow;
        try {
            ow = optimize_operator_window(w, Rw, Xw);
        } catch (const InfeasibleError& e) {
            throw InfeasibleError("operator window " + std::to_string(off / W) + ": " + e.what());
        }
        for (std::size_t k = 0; k < W; ++k) {
            res.shared[off + k] = ow.shared[k];
            res.ces_charge_from_community[off + k] = ow.chX[k];
            res.ces_discharge_to_community[off + k] = ow.disR[k];
            res.spot_buy_to_ces[off + k] = ow.buy[k];
            res.ces_to_spot[off + k] = ow.sell[k];
            res.comm_soc[off + k] = ow.comm_soc[k];
            res.arb_soc[off + k] = ow.arb_soc[k];
        }
        comm = ow.comm_soc.back();
        arb = ow.arb_soc.back();
    }

    res.households.resize(H);
    std::vector<double> sales(n, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
        HouseholdFlows& f = res.households[h];
        const HouseholdSeries& hs = in.households[h];
        fill_household_base(f, hs, st, h);
        for (std::size_t t = 0; t < n; ++t) {
            const StepSplit sp = split_step(hs.pv[t], f.load_el[t], f.hp_el[t]);
            const double xh = st.exp[h][t], rh = st.imp[h][t];
            const double sh = res.shared[t];
            const double shared_out = X[t] > 0.0 ? xh * sh / X[t] : 0.0;
            const double shared_in = R[t] > 0.0 ? rh * sh / R[t] : 0.0;
            const double Xp = X[t] - sh, Rp = R[t] - sh;
            const double absorbed = Xp > 1e-15 ? (xh - shared_out) * res.ces_charge_from_community[t] / Xp : 0.0;
            const double delivered = Rp > 1e-15 ? (rh - shared_in) * res.ces_discharge_to_community[t] / Rp : 0.0;
            f.pv_to_load[t] = sp.pv_to_load;
            f.pv_to_hp[t] = sp.pv_to_hp;
            f.pv_to_community[t] = shared_out;
            f.pv_to_storage[t] = absorbed;
            f.pv_to_grid[t] = std::max(0.0, sp.surplus - shared_out - absorbed);
            const double from_grid = std::max(0.0, sp.deficit - shared_in - delivered);
            f.community_to_load[t] = shared_in * sp.fl;
            f.community_to_hp[t] = shared_in * sp.fh;
            f.storage_to_load[t] = delivered * sp.fl;
            f.storage_to_hp[t] = delivered * sp.fh;
            f.grid_to_load[t] = from_grid * sp.fl;
            f.grid_to_hp[t] = from_grid * sp.fh;
            if (gap(sp.surplus, xh) > 1e-7 || gap(sp.deficit, rh) > 1e-7)
                throw std::logic_error("household residual does not match step-1 LP at step " + std::to_string(t));
            f.eu_cost += retail * from_grid - feed * f.pv_to_grid[t] + fee * (shared_in + delivered) + levy * absorbed;
            sales[t] += from_grid;
        }
        f.eu_cost += st.gas_cost[h];
    }
    if (sys.bes.capacity > 0.0) {
        StorageTrace tr;
        tr.spec = sys.bes;
        tr.soc.resize(n);
        tr.charge.resize(n);
        tr.discharge.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            tr.soc[t] = res.comm_soc[t] + res.arb_soc[t];
            tr.charge[t] = res.ces_charge_from_community[t] + res.spot_buy_to_ces[t];
            tr.discharge[t] = res.ces_discharge_to_community[t] + res.ces_to_spot[t];
        }
        res.storages.push_back(std::move(tr));
    }
    for (std::size_t t = 0; t < n; ++t) {
        res.retail_margin += (sys.tariff.sales_component() - in.spot[t]) * sales[t];
        res.arbitrage_profit += in.spot[t] * (res.ces_to_spot[t] - res.spot_buy_to_ces[t]);
    }
    res.op_profit = res.retail_margin + res.arbitrage_profit;
    return res;
}

inline DispatchResult rolling_run(const AnnualInputs& in, const SystemSpec& sys, const DispatchSettings& s) {
    sys.bes.validate();
    const ProsumerStage st = prosumer_stage(in, sys, s);
    if (s.topology == Topology::HES) return assemble_hes(in, sys, s, st);
    return operator_stage(in, sys, s, st);
}

// ---------------------------------------------------------------------------
// Result invariants

inline std::vector<std::string> check_invariants(const DispatchResult& r, const AnnualInputs& in,
                                                 const DispatchSettings& s, double tol = 1e-6) {
    std::vector<std::string> bad;
    auto note = [&](const std::string& m) {
        if (bad.size() < 50) bad.push_back(m);
    };
    const std::size_t n = static_cast<std::size_t>(r.steps);
    for (std::size_t h = 0; h < r.households.size(); ++h) {
        const auto& f = r.households[h];
        const auto& hs = in.households[h];
        const std::string tag = "household " + std::to_string(h + 1) + " step ";
        for (std::size_t t = 0; t < n; ++t) {
            const double el_supply = f.pv_to_load[t] + f.grid_to_load[t] + f.storage_to_load[t] + f.community_to_load[t];
            const double el_demand = hs.fixed[t] + hs.shiftable[t] - f.dr_out[t] + f.dr_in[t];
            if (std::abs(el_supply - el_demand) > tol) note(tag + std::to_string(t) + ": electrical balance");
            const double hp_supply = f.pv_to_hp[t] + f.grid_to_hp[t] + f.storage_to_hp[t] + f.community_to_hp[t];
            if (std::abs(hp_supply - f.hp_el[t]) > tol) note(tag + std::to_string(t) + ": heat pump supply");
            if (std::abs(f.hp_heat[t] + f.ngb_heat[t] - hs.heat[t]) > tol) note(tag + std::to_string(t) + ": heat balance");
            const double pv_use = f.pv_to_load[t] + f.pv_to_hp[t] + f.pv_to_storage[t] + f.pv_to_community[t] + f.pv_to_grid[t];
            if (std::abs(pv_use - hs.pv[t]) > tol) note(tag + std::to_string(t) + ": PV balance");
            for (const auto* v : {&f.pv_to_load, &f.pv_to_hp, &f.pv_to_storage, &f.pv_to_community, &f.pv_to_grid,
                                  &f.grid_to_load, &f.grid_to_hp, &f.storage_to_load, &f.storage_to_hp,
                                  &f.community_to_load, &f.community_to_hp, &f.dr_out, &f.dr_in})
                if ((*v)[t] < -tol) note(tag + std::to_string(t) + ": negative flow");
            if (f.dr_out[t] > hs.shiftable[t] + tol) note(tag + std::to_string(t) + ": shift exceeds shiftable share");
        }
        // DR conservation per window and reach of every shifted kWh.
        const std::size_t W = static_cast<std::size_t>(r.window_steps);
        for (std::size_t off = 0; off < n; off += W) {
            double out = 0.0, inn = 0.0;
            for (std::size_t t = off; t < off + W && t < n; ++t) {
                out += f.dr_out[t];
                inn += f.dr_in[t];
            }
            if (std::abs(out - inn) > tol) note("household " + std::to_string(h + 1) + " window " + std::to_string(off / W) + ": DR not conserved");
        }
        std::vector<double> out_by_arc(n, 0.0), in_by_arc(n, 0.0);
        for (const auto& a : f.arcs) {
            if (std::abs(a.from - a.to) > s.dr.window_steps) note("household " + std::to_string(h + 1) + ": shift beyond window");
            if (!s.dr.symmetric && a.to < a.from) note("household " + std::to_string(h + 1) + ": advance with delay-only DR");
            if (static_cast<std::size_t>(a.from) / W != static_cast<std::size_t>(a.to) / W)
                note("household " + std::to_string(h + 1) + ": shift crosses window boundary");
            out_by_arc[static_cast<std::size_t>(a.from)] += a.amount;
            in_by_arc[static_cast<std::size_t>(a.to)] += a.amount;
        }
        for (std::size_t t = 0; t < n; ++t)
            if (std::abs(out_by_arc[t] - f.dr_out[t]) > tol || std::abs(in_by_arc[t] - f.dr_in[t]) > tol)
                note(tag + std::to_string(t) + ": shift plan does not match DR flows");
    }
    for (std::size_t k = 0; k < r.storages.size(); ++k) {
        const auto& tr = r.storages[k];
        BesState st{tr.soc_initial};
        for (std::size_t t = 0; t < n; ++t) {
            try {
                st = bes_step(st, tr.charge[t], tr.discharge[t], tr.spec, tol);
            } catch (const DomainError& e) {
                note("storage " + std::to_string(k) + " step " + std::to_string(t) + ": " + e.what());
                st.soc = tr.soc[t];
                continue;
            }
            if (std::abs(st.soc - tr.soc[t]) > tol) note("storage " + std::to_string(k) + " step " + std::to_string(t) + ": SOC recursion");
            st.soc = tr.soc[t];
        }
    }
    if (r.topology == Topology::HES && (!r.spot_buy_to_ces.empty() || !r.ces_to_spot.empty()))
        note("arbitrage flows present in a household-storage run");
    return bad;
}

}  // namespace cesopt

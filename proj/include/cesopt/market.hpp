#pragma once

// Flat retail tariff, feed-in remuneration, gas price and spot prices.

#include "cesopt/error.hpp"
#include "cesopt/series.hpp"

namespace cesopt {

struct RetailComponents {
    double sales_spot_mean = 0.0316;   // EUR/kWh
    double sales_margin = 0.0396;
    double grid_fees = 0.0729;
    double levies_taxes = 0.1475;
};

struct GasComponents {
    double base = 0.031;   // EUR/kWh_fuel
    double grid_levies = 0.024;
    double margin = 0.011;
};

struct TariffScheme {
    RetailComponents retail;
    double feed_in = 0.124;
    GasComponents gas;
    double vat_rate = 0.19;   // folded into the retail total
    bool ces_selfconsumption_exempt = true;
    bool ces_grid_fees_exempt = true;

    double gas_price() const { return gas.base + gas.grid_levies + gas.margin; }
    // Utility revenue per kWh sold at retail, before its spot purchase cost.
    double sales_component() const { return retail.sales_spot_mean + retail.sales_margin; }
};

inline double retail_price(const TariffScheme& s) {
    return s.retail.sales_spot_mean + s.retail.sales_margin + s.retail.grid_fees + s.retail.levies_taxes;
}

inline TariffScheme project_tariff(const TariffScheme& s, double projected_spot_mean) {
    if (projected_spot_mean < 0.0) throw DomainError("projected spot mean must be >= 0");
    TariffScheme out = s;
    out.retail.sales_spot_mean = projected_spot_mean;
    return out;
}

enum class StorageFlow { msc_charge, arb_charge, arb_sell };

inline double storage_levy_rate(const TariffScheme& s, StorageFlow kind) {
    switch (kind) {
        case StorageFlow::msc_charge: return s.ces_selfconsumption_exempt ? 0.0 : s.retail.levies_taxes;
        case StorageFlow::arb_charge:
        case StorageFlow::arb_sell: return 0.0;
    }
    return 0.0;
}

// Fee a household pays per kWh received from the community (pool or other
// households) over the public grid.
inline double community_delivery_fee(const TariffScheme& s) {
    double fee = s.ces_grid_fees_exempt ? 0.0 : s.retail.grid_fees;
    if (!s.ces_selfconsumption_exempt) fee += s.retail.levies_taxes;
    return fee;
}

struct SpotMarket {
    QuarterHourSeries prices;

    double annual_mean() const { return prices.mean(); }
};

}  // namespace cesopt

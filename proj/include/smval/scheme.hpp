#pragma once

#include <string>
#include <variant>

#include "smval/domain.hpp"
#include "smval/privacy.hpp"

namespace smval {

// Settlement schemes. They differ in which data the supplier may use for
// forecasting and in how its consumption is settled.
struct Nhhs {};        // daily energy + system profile; settled on E^d * DLC
struct HhsDlcSys {};   // same forecast input as Nhhs, settled half-hourly
struct HhsEhh {};      // true half-hourly aggregate
struct HhsDdp {        // half-hourly aggregate with discounted-DP noise
  PrivacyParams params;
};

using SettlementScheme = std::variant<Nhhs, HhsDlcSys, HhsEhh, HhsDdp>;

std::string scheme_name(const SettlementScheme& scheme);

// Accepts nhhs, hhs_dlcsys, hhs_ehh, hhs_ddp (case-insensitive). The ddp
// variant takes its parameters from `params`.
SettlementScheme parse_scheme(const std::string& name, const PrivacyParams& params);

bool uses_daily_forecast(const SettlementScheme& scheme);

/// Nhhs: daily energy spread over the system profile. Every half-hourly
/// scheme settles on the actual series.
LoadSeries settled_load(const SettlementScheme& scheme, const LoadSeries& actual_hh,
                        const DlcProfile& dlc_sys);

}  // namespace smval

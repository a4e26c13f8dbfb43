#pragma once

#include "cesopt/assessment.hpp"
#include "cesopt/config.hpp"
#include "cesopt/costmodel.hpp"
#include "cesopt/devices.hpp"
#include "cesopt/dispatch.hpp"
#include "cesopt/dp_oracle.hpp"
#include "cesopt/error.hpp"
#include "cesopt/lp.hpp"
#include "cesopt/market.hpp"
#include "cesopt/parallel.hpp"
#include "cesopt/profiles.hpp"
#include "cesopt/reduction.hpp"
#include "cesopt/reports.hpp"
#include "cesopt/scenarios.hpp"
#include "cesopt/series.hpp"

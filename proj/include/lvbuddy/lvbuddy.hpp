#pragma once

#include "lvbuddy/calendar.hpp"
#include "lvbuddy/errors.hpp"
#include "lvbuddy/ga.hpp"
#include "lvbuddy/grouping.hpp"
#include "lvbuddy/harness.hpp"
#include "lvbuddy/ingestion.hpp"
#include "lvbuddy/metrics.hpp"
#include "lvbuddy/model.hpp"
#include "lvbuddy/monte_carlo.hpp"
#include "lvbuddy/pseudo.hpp"
#include "lvbuddy/series.hpp"
#include "lvbuddy/simple_buddy.hpp"

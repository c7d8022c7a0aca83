#pragma once

#include "blpsim/cache.hpp"
#include "blpsim/command_log.hpp"
#include "blpsim/config.hpp"
#include "blpsim/controller.hpp"
#include "blpsim/engine.hpp"
#include "blpsim/errors.hpp"
#include "blpsim/geometry.hpp"
#include "blpsim/metrics.hpp"
#include "blpsim/replacement.hpp"
#include "blpsim/stats_csv.hpp"
#include "blpsim/timing.hpp"
#include "blpsim/workload.hpp"
#include "blpsim/write_policy.hpp"

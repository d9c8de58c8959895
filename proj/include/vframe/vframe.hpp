#pragma once

#include "vframe/datamodel.hpp"
#include "vframe/ingest.hpp"
#include "vframe/ruleengine.hpp"
#include "vframe/calibrate.hpp"
#include "vframe/stats.hpp"
#include "vframe/report.hpp"

#pragma once

#include "ssmlab/continuity_metric.hpp"
#include "ssmlab/csv.hpp"
#include "ssmlab/dynsys.hpp"
#include "ssmlab/error.hpp"
#include "ssmlab/random.hpp"
#include "ssmlab/refinement_harness.hpp"
#include "ssmlab/signals.hpp"
#include "ssmlab/ssm_core.hpp"
#include "ssmlab/stagewise.hpp"

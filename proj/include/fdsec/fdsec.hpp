#pragma once

#include "fdsec/bounds.hpp"
#include "fdsec/config.hpp"
#include "fdsec/errors.hpp"
#include "fdsec/et_distribution.hpp"
#include "fdsec/experiment.hpp"
#include "fdsec/hd_benchmark.hpp"
#include "fdsec/model.hpp"
#include "fdsec/numerics.hpp"
#include "fdsec/power_policy.hpp"
#include "fdsec/protocol_sim.hpp"

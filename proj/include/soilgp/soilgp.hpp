#pragma once

#include "soilgp/domain.hpp"
#include "soilgp/error.hpp"
#include "soilgp/gp.hpp"
#include "soilgp/hyperparams.hpp"
#include "soilgp/io.hpp"
#include "soilgp/kernels.hpp"
#include "soilgp/mapping.hpp"
#include "soilgp/mission.hpp"

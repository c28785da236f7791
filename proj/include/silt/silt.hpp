#pragma once

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "fbm_core.hpp"
#include "quadrature.hpp"
#include "kernels.hpp"
#include "constants.hpp"
#include "silt_mc.hpp"
#include "chaos_mc.hpp"
#include "stats.hpp"
#include "verify.hpp"

#pragma once

// Umbrella header: adaptive loss weighting (coefficient-of-variation,
// uncertainty, gradient-norm, min-norm) with toy problems, a training
// harness, and CSV instrumentation.

#include "covbalance/config.hpp"
#include "covbalance/cov_weighting.hpp"
#include "covbalance/csv.hpp"
#include "covbalance/gradnorm.hpp"
#include "covbalance/harness.hpp"
#include "covbalance/linalg.hpp"
#include "covbalance/mgda.hpp"
#include "covbalance/optimizer.hpp"
#include "covbalance/pgm.hpp"
#include "covbalance/problems.hpp"
#include "covbalance/run_config.hpp"
#include "covbalance/ssim.hpp"
#include "covbalance/strategies.hpp"
#include "covbalance/uncertainty.hpp"
#include "covbalance/weights.hpp"
#include "covbalance/welford.hpp"

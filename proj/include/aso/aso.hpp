#pragma once

// Adaptive set observers for LPV-approximated nonlinear systems: joint
// state/parameter interval estimation with on-line applicability checking
// and interval-based fault detection.

#include "aso/types.hpp"
#include "aso/numerics.hpp"
#include "aso/model.hpp"
#include "aso/monotone.hpp"
#include "aso/observers.hpp"
#include "aso/verifier.hpp"
#include "aso/fault.hpp"
#include "aso/scenarios.hpp"
#include "aso/simulation.hpp"
#include "aso/trace.hpp"
#include "aso/report.hpp"
#include "aso/plots.hpp"

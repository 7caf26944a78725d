#pragma once

// Umbrella header: attacked closed-loop modeling, constraint classes,
// absolute-stability criteria, output-to-output gain bounds, worst-case
// attack synthesis, and nonlinear closed-loop simulation.

#include "oog/attack_synth.hpp"
#include "oog/constraints.hpp"
#include "oog/freq_analysis.hpp"
#include "oog/linalg.hpp"
#include "oog/oog_bound.hpp"
#include "oog/scenario.hpp"
#include "oog/simulate.hpp"
#include "oog/system_model.hpp"

#pragma once

#include "gravinst/checks.hpp"
#include "gravinst/config.hpp"
#include "gravinst/csv.hpp"
#include "gravinst/energy.hpp"
#include "gravinst/errors.hpp"
#include "gravinst/experiments.hpp"
#include "gravinst/gravity.hpp"
#include "gravinst/growing_mode.hpp"
#include "gravinst/linear_dynamics.hpp"
#include "gravinst/nonlinear_dynamics.hpp"
#include "gravinst/radial_grid.hpp"
#include "gravinst/random.hpp"
#include "gravinst/steady_state.hpp"

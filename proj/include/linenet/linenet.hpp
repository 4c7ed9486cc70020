#pragma once

#include "linenet/approx_solver.hpp"
#include "linenet/delay_model.hpp"
#include "linenet/discrete_pmf.hpp"
#include "linenet/error.hpp"
#include "linenet/exact_chain.hpp"
#include "linenet/network_config.hpp"
#include "linenet/planner.hpp"
#include "linenet/simulator.hpp"

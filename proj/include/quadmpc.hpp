#pragma once

#include "quadmpc/types.hpp"
#include "quadmpc/dynamics.hpp"
#include "quadmpc/gait.hpp"
#include "quadmpc/qp_solver.hpp"
#include "quadmpc/mpc.hpp"
#include "quadmpc/estimator.hpp"
#include "quadmpc/sim.hpp"
#include "quadmpc/scenario.hpp"
#include "quadmpc/episode.hpp"
#include "quadmpc/harness.hpp"

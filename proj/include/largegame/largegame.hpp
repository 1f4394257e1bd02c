#pragma once

#include "largegame/convergence.hpp"
#include "largegame/error.hpp"
#include "largegame/finite_game.hpp"
#include "largegame/limit_game.hpp"
#include "largegame/measure.hpp"
#include "largegame/metric_space.hpp"
#include "largegame/payoff.hpp"
#include "largegame/payoff_expr.hpp"
#include "largegame/random.hpp"
#include "largegame/report.hpp"

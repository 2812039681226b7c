#pragma once

#include "discrete_adjust.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "numeric.hpp"
#include "oracles.hpp"
#include "parallel.hpp"
#include "procedures.hpp"
#include "pvalue_model.hpp"
#include "random.hpp"
#include "simulation.hpp"
#include "stat_tests.hpp"

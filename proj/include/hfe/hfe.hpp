#pragma once

#include "hfe/specfun.hpp"
#include "hfe/operators.hpp"
#include "hfe/grid.hpp"
#include "hfe/quadrature.hpp"
#include "hfe/propagator.hpp"
#include "hfe/monotone.hpp"
#include "hfe/problems.hpp"

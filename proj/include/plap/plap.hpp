#pragma once

#include "plap/errors.hpp"
#include "plap/grid.hpp"
#include "plap/harness.hpp"
#include "plap/kernel.hpp"
#include "plap/linear.hpp"
#include "plap/operator.hpp"
#include "plap/problems.hpp"
#include "plap/solvers.hpp"

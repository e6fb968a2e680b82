#pragma once

// Core model
#include "dataflow/errors.hpp"
#include "dataflow/params.hpp"
#include "dataflow/throttle.hpp"
#include "dataflow/flux.hpp"

// Microscopic lattice
#include "dataflow/micro.hpp"

// Macroscopic solver
#include "dataflow/grid.hpp"
#include "dataflow/field.hpp"
#include "dataflow/macro_solver.hpp"

// Fronts, policies, orchestration
#include "dataflow/front.hpp"
#include "dataflow/qoi.hpp"
#include "dataflow/csv.hpp"
#include "dataflow/scenario.hpp"

#pragma once

#include "flr/core.hpp"
#include "flr/dataset.hpp"
#include "flr/eval.hpp"
#include "flr/experiment.hpp"
#include "flr/json_io.hpp"
#include "flr/noise.hpp"
#include "flr/prox.hpp"
#include "flr/solver.hpp"

#pragma once

#include "data_model.hpp"
#include "derived.hpp"
#include "diagnostic.hpp"
#include "estimator.hpp"
#include "inference.hpp"
#include "io.hpp"
#include "mc.hpp"
#include "optimize.hpp"
#include "parallel.hpp"
#include "partial_id.hpp"
#include "rng.hpp"
#include "simulation.hpp"
#include "smoothing.hpp"
#include "step_function.hpp"
#include "surface.hpp"
#include "survival.hpp"

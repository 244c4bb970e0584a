#pragma once

#include "graphon/bayes.hpp"
#include "graphon/equilibrium.hpp"
#include "graphon/error.hpp"
#include "graphon/experiments.hpp"
#include "graphon/grid_function.hpp"
#include "graphon/interventions.hpp"
#include "graphon/kernels.hpp"
#include "graphon/rng.hpp"
#include "graphon/sampling.hpp"
#include "graphon/spectral.hpp"

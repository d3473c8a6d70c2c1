#pragma once

// Umbrella header for the whole library.

#include "paa/circle_fit.hpp"
#include "paa/errors.hpp"
#include "paa/generate.hpp"
#include "paa/io.hpp"
#include "paa/manifold.hpp"
#include "paa/pipeline.hpp"
#include "paa/rng.hpp"
#include "paa/simulate.hpp"
#include "paa/suppression.hpp"
#include "paa/svg.hpp"
#include "paa/transforms.hpp"

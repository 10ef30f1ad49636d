#pragma once

// Model selection for sparse linear regression by mBIC/mBIC2, with a
// simulation harness and a concentration-bounds lab.

#include "mbic/bounds.hpp"
#include "mbic/criteria.hpp"
#include "mbic/csv.hpp"
#include "mbic/datagen.hpp"
#include "mbic/experiment.hpp"
#include "mbic/linalg.hpp"
#include "mbic/rng.hpp"
#include "mbic/search.hpp"
#include "mbic/svg_plot.hpp"
#include "mbic/types.hpp"

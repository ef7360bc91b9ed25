#pragma once

// Umbrella header for the whole library.

#include "sharerec/backbone.hpp"
#include "sharerec/commands.hpp"
#include "sharerec/common.hpp"
#include "sharerec/config.hpp"
#include "sharerec/embedding.hpp"
#include "sharerec/encoder.hpp"
#include "sharerec/graph.hpp"
#include "sharerec/homophily.hpp"
#include "sharerec/hra.hpp"
#include "sharerec/metrics.hpp"
#include "sharerec/rewire.hpp"
#include "sharerec/rng.hpp"
#include "sharerec/sparse.hpp"
#include "sharerec/trainer.hpp"

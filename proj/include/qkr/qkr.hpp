#pragma once

// Umbrella header for the quantum-kernel regression toolkit.

#include "qkr/baselines.hpp"
#include "qkr/bench.hpp"
#include "qkr/common.hpp"
#include "qkr/config.hpp"
#include "qkr/feature_map.hpp"
#include "qkr/kernel_svr.hpp"
#include "qkr/metrics.hpp"
#include "qkr/pipeline.hpp"
#include "qkr/preprocess.hpp"
#include "qkr/qkernel.hpp"
#include "qkr/statevector.hpp"
#include "qkr/vae.hpp"

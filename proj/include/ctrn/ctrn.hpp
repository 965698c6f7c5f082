// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Umbrella header.

#pragma once

#include "ctrn/bench.hpp"
#include "ctrn/checkpoint.hpp"
#include "ctrn/config.hpp"
#include "ctrn/data.hpp"
#include "ctrn/encoder.hpp"
#include "ctrn/error.hpp"
#include "ctrn/head.hpp"
#include "ctrn/metrics.hpp"
#include "ctrn/model.hpp"
#include "ctrn/ops.hpp"
#include "ctrn/optim.hpp"
#include "ctrn/params.hpp"
#include "ctrn/rng.hpp"
#include "ctrn/tape.hpp"
#include "ctrn/tensor.hpp"

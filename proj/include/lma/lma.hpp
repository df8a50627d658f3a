// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lma/activations.hpp"
#include "lma/costmodel.hpp"
#include "lma/data.hpp"
#include "lma/distill.hpp"
#include "lma/errors.hpp"
#include "lma/experiment.hpp"
#include "lma/layers.hpp"
#include "lma/model.hpp"
#include "lma/optim.hpp"
#include "lma/quantize.hpp"
#include "lma/regions.hpp"
#include "lma/rng.hpp"
#include "lma/serialize.hpp"
#include "lma/tensor.hpp"

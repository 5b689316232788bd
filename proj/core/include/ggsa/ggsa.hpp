#pragma once

#include "ggsa/attention.hpp"
#include "ggsa/bench.hpp"
#include "ggsa/checkpoint.hpp"
#include "ggsa/composition.hpp"
#include "ggsa/config.hpp"
#include "ggsa/data.hpp"
#include "ggsa/encoder.hpp"
#include "ggsa/error.hpp"
#include "ggsa/gradcheck.hpp"
#include "ggsa/ops.hpp"
#include "ggsa/optimizer.hpp"
#include "ggsa/params.hpp"
#include "ggsa/random.hpp"
#include "ggsa/tape.hpp"
#include "ggsa/tensor.hpp"
#include "ggsa/train.hpp"

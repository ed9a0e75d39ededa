#pragma once
// Umbrella header.

#include "mlerr/bench.hpp"
#include "mlerr/confident.hpp"
#include "mlerr/core_data.hpp"
#include "mlerr/eval.hpp"
#include "mlerr/matrix.hpp"
#include "mlerr/model.hpp"
#include "mlerr/scoring.hpp"
#include "mlerr/synth.hpp"

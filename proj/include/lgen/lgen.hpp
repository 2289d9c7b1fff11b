#pragma once

#include "lgen/analysis.hpp"
#include "lgen/checkpoint.hpp"
#include "lgen/config.hpp"
#include "lgen/corpus.hpp"
#include "lgen/error.hpp"
#include "lgen/format.hpp"
#include "lgen/gradcheck.hpp"
#include "lgen/gradcheck_suite.hpp"
#include "lgen/matrix.hpp"
#include "lgen/nn.hpp"
#include "lgen/rng.hpp"
#include "lgen/synth.hpp"
#include "lgen/tasks.hpp"
#include "lgen/topping.hpp"
#include "lgen/vacai.hpp"

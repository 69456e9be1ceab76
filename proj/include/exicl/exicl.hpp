#pragma once

#include "exicl/distance.hpp"
#include "exicl/generator.hpp"
#include "exicl/icl.hpp"
#include "exicl/io.hpp"
#include "exicl/optimizer.hpp"
#include "exicl/random.hpp"
#include "exicl/state.hpp"
#include "exicl/stats.hpp"
#include "exicl/types.hpp"

#pragma once

#include "bran/analytic.hpp"
#include "bran/attack.hpp"
#include "bran/ctmc.hpp"
#include "bran/des.hpp"
#include "bran/experiment.hpp"
#include "bran/model.hpp"
#include "bran/random.hpp"
#include "bran/stats.hpp"

#pragma once

#include "curforge/learner/adam.hpp"
#include "curforge/learner/head.hpp"
#include "curforge/learner/run.hpp"
#include "curforge/learner/strategy.hpp"

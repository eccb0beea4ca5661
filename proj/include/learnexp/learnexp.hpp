#pragma once

#include "learnexp/convex.hpp"
#include "learnexp/core.hpp"
#include "learnexp/experiments.hpp"
#include "learnexp/experts.hpp"
#include "learnexp/fit.hpp"
#include "learnexp/forecasters.hpp"
#include "learnexp/io.hpp"
#include "learnexp/protocol.hpp"
#include "learnexp/random.hpp"
#include "learnexp/scenarios.hpp"

#pragma once

#include "cell.hpp"
#include "dtw.hpp"
#include "harness.hpp"
#include "intent.hpp"
#include "learner.hpp"
#include "pathfinding.hpp"
#include "policies.hpp"
#include "scene.hpp"
#include "theta.hpp"
#include "trace.hpp"
#include "world.hpp"

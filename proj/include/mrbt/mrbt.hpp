#pragma once

#include "mrbt/assignment.hpp"
#include "mrbt/bt.hpp"
#include "mrbt/error.hpp"
#include "mrbt/fault_analysis.hpp"
#include "mrbt/mission.hpp"
#include "mrbt/scenario_io.hpp"
#include "mrbt/simulator.hpp"
#include "mrbt/tree_factory.hpp"
#include "mrbt/world.hpp"

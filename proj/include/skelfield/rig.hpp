// Skinning, forward kinematics and linear blend skinning.
#pragma once

#include "skelfield/rig/pose.hpp"
#include "skelfield/rig/skinning.hpp"

// Umbrella header.
#pragma once

#include "skelfield/app/config.hpp"
#include "skelfield/app/pipeline.hpp"
#include "skelfield/app/synth.hpp"
#include "skelfield/fields.hpp"
#include "skelfield/geometry/distance.hpp"
#include "skelfield/geometry/grid.hpp"
#include "skelfield/geometry/inside.hpp"
#include "skelfield/geometry/mesh.hpp"
#include "skelfield/geometry/sampling.hpp"
#include "skelfield/geometry/shapes.hpp"
#include "skelfield/geometry/symmetry.hpp"
#include "skelfield/losses.hpp"
#include "skelfield/neural/checkpoint.hpp"
#include "skelfield/neural/model.hpp"
#include "skelfield/neural/train.hpp"
#include "skelfield/rig.hpp"
#include "skelfield/skeleton.hpp"

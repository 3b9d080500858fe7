#pragma once

// Umbrella header for the tofgeo toolkit: ToF raw simulation and decoding,
// depth/normal geometry, registration losses, rig calibration, joint
// refinement, and evaluation metrics — all over synthetic or file inputs.

#include "tofgeo/alignment.hpp"
#include "tofgeo/camera.hpp"
#include "tofgeo/common.hpp"
#include "tofgeo/geometry.hpp"
#include "tofgeo/io.hpp"
#include "tofgeo/losses.hpp"
#include "tofgeo/metrics.hpp"
#include "tofgeo/nnsearch.hpp"
#include "tofgeo/optimizer.hpp"
#include "tofgeo/pointcloud.hpp"
#include "tofgeo/raster.hpp"
#include "tofgeo/refine.hpp"
#include "tofgeo/scenegen.hpp"
#include "tofgeo/tofsim.hpp"

#pragma once

#include <utility>

#include "tempdepth/grid.hpp"

namespace tempdepth {

// 3x3 Sobel responses divided by 8, so a unit-slope ramp reads 1.0 per pixel.
// Borders use replicate padding. Pixels whose 3x3 neighborhood touches an
// invalid depth get gradient 0.
std::pair<Grid, Grid> sobel_gradients(const DepthMap& depth);

// Per pixel: normalize((-gx, -gy, 1)). Invalid pixels carry (0,0,1) and are
// flagged invalid in the output.
NormalMap normals_from_depth(const DepthMap& depth);

} // namespace tempdepth

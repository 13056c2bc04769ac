#pragma once

#include <cstdint>
#include <vector>

#include "tempdepth/grid.hpp"

namespace tempdepth {

// Analytic scene: a sloped background plane d = a*x + b*y + c with flat boxes
// and sphere caps composited in front of it by min depth.
//
// Motion convention: velocity and camera_shift give the per-frame backward
// sampling displacement, i.e. the content at pixel p in frame t is found at
// p + velocity (or p + camera_shift) in frame t-1. The stored flow fields are
// therefore exactly velocity * frame_stride inside objects and
// camera_shift * frame_stride elsewhere, ready for backward warping.
struct SceneObject {
    enum class Shape { Box, SphereCap };
    Shape shape = Shape::Box;
    double x = 0.0, y = 0.0;   // screen-space center at frame 0, pixels
    double size = 8.0;         // box edge length / cap radius, pixels
    double depth_offset = 5.0; // meters in front of the plane at the initial center
    double vx = 0.0, vy = 0.0; // pixels per frame, backward-flow convention
};

struct SceneSpec {
    int width = 64;
    int height = 64;
    double plane_a = 0.0, plane_b = 0.0, plane_c = 10.0;
    double camera_shift_x = 0.0, camera_shift_y = 0.0;
    std::uint64_t seed = 0;
    std::vector<SceneObject> objects;
};

struct FramePacket {
    DepthMap depth;
    NormalMap normals_gt;  // analytic surface normals, not filter responses
    FlowField flow_to_prev; // zeros for the first frame
    BinaryMask changed_gt;  // union of moving-object silhouettes over the pair
    bool offscreen_warning = false;
};

// Renders frames at times 0, frame_stride, 2*frame_stride, ... Depth must
// stay positive everywhere, else PreconditionError.
std::vector<FramePacket> render_sequence(const SceneSpec& spec, int n_frames,
                                         int frame_stride = 1);

// Intersection over union; 1.0 when both masks are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

} // namespace tempdepth

#include "tempdepth/synthetic.hpp"

#include <cmath>

namespace tempdepth {

namespace {

struct Pose {
    double cx, cy;
};

Pose object_pose(const SceneObject& o, double tau) {
    // Backward-flow convention: content at p now was at p + velocity one
    // frame ago, so the object travels by -velocity per frame.
    return {o.x - o.vx * tau, o.y - o.vy * tau};
}

bool inside_silhouette(const SceneObject& o, const Pose& p, double x, double y) {
    double dx = x - p.cx, dy = y - p.cy;
    if (o.shape == SceneObject::Shape::Box) {
        double half = o.size * 0.5;
        return std::abs(dx) <= half && std::abs(dy) <= half;
    }
    return dx * dx + dy * dy <= o.size * o.size;
}

} // namespace

std::vector<FramePacket> render_sequence(const SceneSpec& spec, int n_frames,
                                         int frame_stride) {
    if (n_frames < 1)
        throw PreconditionError("need at least one frame");
    if (frame_stride < 1)
        throw PreconditionError("frame stride must be positive");
    if (spec.width < 1 || spec.height < 1)
        throw SizeError("scene extent must be positive");
    for (const auto& o : spec.objects)
        if (!(o.size > 0.0))
            throw PreconditionError("object size must be positive");

    const int w = spec.width, h = spec.height;
    const double plane_nx = -spec.plane_a, plane_ny = -spec.plane_b;
    const double plane_inv = 1.0 / std::sqrt(plane_nx * plane_nx + plane_ny * plane_ny + 1.0);

    // Object surface depths are anchored at the initial center so a rigid
    // translation keeps its depth field; the background plane is attached to
    // the world and slides with the camera.
    std::vector<double> base_depth(spec.objects.size());
    for (std::size_t k = 0; k < spec.objects.size(); ++k)
        base_depth[k] = spec.plane_a * spec.objects[k].x + spec.plane_b * spec.objects[k].y +
                        spec.plane_c;

    std::vector<FramePacket> frames;
    frames.reserve(n_frames);
    for (int f = 0; f < n_frames; ++f) {
        double tau = static_cast<double>(f) * frame_stride;
        double tau_prev = tau - frame_stride;

        FramePacket pkt;
        Grid depth(h, w);
        pkt.normals_gt = NormalMap(h, w);
        pkt.flow_to_prev = FlowField(h, w);
        pkt.changed_gt = BinaryMask(h, w);

        std::vector<Pose> poses(spec.objects.size()), poses_prev(spec.objects.size());
        std::vector<int> silhouette_count(spec.objects.size(), 0);
        for (std::size_t k = 0; k < spec.objects.size(); ++k) {
            poses[k] = object_pose(spec.objects[k], tau);
            poses_prev[k] = object_pose(spec.objects[k], tau_prev);
        }

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double wx = x + spec.camera_shift_x * tau;
                double wy = y + spec.camera_shift_y * tau;
                double best = spec.plane_a * wx + spec.plane_b * wy + spec.plane_c;
                int winner = -1;

                for (std::size_t k = 0; k < spec.objects.size(); ++k) {
                    const auto& o = spec.objects[k];
                    if (!inside_silhouette(o, poses[k], x, y)) continue;
                    silhouette_count[k]++;
                    double d;
                    if (o.shape == SceneObject::Shape::Box) {
                        d = base_depth[k] - o.depth_offset;
                    } else {
                        double dx = x - poses[k].cx, dy = y - poses[k].cy;
                        double s = std::sqrt(std::max(
                            0.0, 1.0 - (dx * dx + dy * dy) / (o.size * o.size)));
                        d = base_depth[k] - o.depth_offset * s;
                    }
                    if (d < best) {
                        best = d;
                        winner = static_cast<int>(k);
                    }
                }
                if (!(best > 0.0))
                    throw PreconditionError("scene produced nonpositive depth");
                depth.at(y, x) = best;

                if (winner < 0) {
                    pkt.normals_gt.nx.at(y, x) = plane_nx * plane_inv;
                    pkt.normals_gt.ny.at(y, x) = plane_ny * plane_inv;
                    pkt.normals_gt.nz.at(y, x) = plane_inv;
                } else {
                    const auto& o = spec.objects[winner];
                    if (o.shape == SceneObject::Shape::Box) {
                        pkt.normals_gt.nx.at(y, x) = 0.0;
                        pkt.normals_gt.ny.at(y, x) = 0.0;
                        pkt.normals_gt.nz.at(y, x) = 1.0;
                    } else {
                        double dx = x - poses[winner].cx, dy = y - poses[winner].cy;
                        double r2 = o.size * o.size;
                        double s = std::sqrt(std::max(0.0, 1.0 - (dx * dx + dy * dy) / r2));
                        s = std::max(s, 1e-6); // rim pixels keep a finite slope
                        double gx = o.depth_offset * dx / (r2 * s);
                        double gy = o.depth_offset * dy / (r2 * s);
                        double inv = 1.0 / std::sqrt(gx * gx + gy * gy + 1.0);
                        pkt.normals_gt.nx.at(y, x) = -gx * inv;
                        pkt.normals_gt.ny.at(y, x) = -gy * inv;
                        pkt.normals_gt.nz.at(y, x) = inv;
                    }
                }

                if (f > 0) {
                    if (winner >= 0) {
                        pkt.flow_to_prev.u.at(y, x) = spec.objects[winner].vx * frame_stride;
                        pkt.flow_to_prev.v.at(y, x) = spec.objects[winner].vy * frame_stride;
                    } else {
                        pkt.flow_to_prev.u.at(y, x) = spec.camera_shift_x * frame_stride;
                        pkt.flow_to_prev.v.at(y, x) = spec.camera_shift_y * frame_stride;
                    }
                    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
                        const auto& o = spec.objects[k];
                        if (o.vx == 0.0 && o.vy == 0.0) continue;
                        if (inside_silhouette(o, poses[k], x, y) ||
                            inside_silhouette(o, poses_prev[k], x, y))
                            pkt.changed_gt.at(y, x) = 1;
                    }
                }
            }
        }

        for (std::size_t k = 0; k < spec.objects.size(); ++k)
            if (silhouette_count[k] == 0)
                pkt.offscreen_warning = true;

        pkt.depth = DepthMap::from_grid(std::move(depth));
        frames.push_back(std::move(pkt));
    }
    return frames;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b))
        throw SizeError("masks differ in size");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool av = a.values[i] != 0, bv = b.values[i] != 0;
        if (av && bv) ++inter;
        if (av || bv) ++uni;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace tempdepth

#include "tempdepth/geometry.hpp"

#include <cmath>

#include "tempdepth/numeric.hpp"

namespace tempdepth {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Pixel usable for gradients: it and its (replicate-padded) 3x3 neighborhood
// are all valid.
bool neighborhood_valid(const DepthMap& d, int y, int x) {
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            int yy = clampi(y + dy, 0, d.height() - 1);
            int xx = clampi(x + dx, 0, d.width() - 1);
            if (!d.is_valid(yy, xx)) return false;
        }
    return true;
}

} // namespace

std::pair<Grid, Grid> sobel_gradients(const DepthMap& depth) {
    const int h = depth.height(), w = depth.width();
    if (h < 3 || w < 3)
        throw SizeError("sobel_gradients needs at least a 3x3 grid");

    Grid gx(h, w), gy(h, w);
    parallel_rows(h, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!neighborhood_valid(depth, y, x)) {
                    gx.at(y, x) = 0.0;
                    gy.at(y, x) = 0.0;
                    continue;
                }
                auto v = [&](int dy, int dx) {
                    return depth.values.at(clampi(y + dy, 0, h - 1), clampi(x + dx, 0, w - 1));
                };
                double sx = -v(-1, -1) + v(-1, 1) - 2.0 * v(0, -1) + 2.0 * v(0, 1) - v(1, -1) + v(1, 1);
                double sy = -v(-1, -1) - 2.0 * v(-1, 0) - v(-1, 1) + v(1, -1) + 2.0 * v(1, 0) + v(1, 1);
                gx.at(y, x) = sx / 8.0;
                gy.at(y, x) = sy / 8.0;
            }
        }
    });
    return {std::move(gx), std::move(gy)};
}

NormalMap normals_from_depth(const DepthMap& depth) {
    auto [gx, gy] = sobel_gradients(depth);
    const int h = depth.height(), w = depth.width();

    NormalMap n(h, w);
    parallel_rows(h, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!neighborhood_valid(depth, y, x)) {
                    n.nx.at(y, x) = 0.0;
                    n.ny.at(y, x) = 0.0;
                    n.nz.at(y, x) = 1.0;
                    n.valid[static_cast<std::size_t>(y) * w + x] = 0;
                    continue;
                }
                double a = -gx.at(y, x), b = -gy.at(y, x);
                double inv = 1.0 / std::sqrt(a * a + b * b + 1.0);
                n.nx.at(y, x) = a * inv;
                n.ny.at(y, x) = b * inv;
                n.nz.at(y, x) = inv;
            }
        }
    });
    return n;
}

} // namespace tempdepth

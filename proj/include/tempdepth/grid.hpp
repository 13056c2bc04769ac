#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tempdepth/error.hpp"

namespace tempdepth {

// H x W scalar grid, row-major, top-to-bottom. All on-disk rasters are
// converted to this orientation at the I/O boundary.
struct Grid {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Grid() = default;
    Grid(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {
        if (h < 0 || w < 0)
            throw SizeError("grid extent must be nonnegative");
    }

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Grid& o) const { return height == o.height && width == o.width; }
};

// Per-pixel {0,1} grid.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;

    BinaryMask() = default;
    BinaryMask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {
        if (h < 0 || w < 0)
            throw SizeError("mask extent must be nonnegative");
    }

    std::uint8_t& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return values.size(); }
    bool same_shape(const BinaryMask& o) const { return height == o.height && width == o.width; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : values) n += v ? 1 : 0;
        return n;
    }
};

// Dense depth in meters. A pixel is valid when its value is finite and > 0;
// callers may clear further bits (e.g. around discontinuities).
struct DepthMap {
    Grid values;
    std::vector<std::uint8_t> valid;

    DepthMap() = default;

    static DepthMap from_grid(Grid g) {
        DepthMap d;
        d.valid.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            d.valid[i] = (std::isfinite(g.data[i]) && g.data[i] > 0.0) ? 1 : 0;
        d.values = std::move(g);
        return d;
    }

    int height() const { return values.height; }
    int width() const { return values.width; }
    bool is_valid(int y, int x) const { return valid[static_cast<std::size_t>(y) * values.width + x] != 0; }
};

// Unit surface-orientation vectors, one per pixel, camera-facing (z >= 0).
struct NormalMap {
    int height = 0;
    int width = 0;
    Grid nx, ny, nz;
    std::vector<std::uint8_t> valid;

    NormalMap() = default;
    NormalMap(int h, int w)
        : height(h), width(w), nx(h, w), ny(h, w), nz(h, w, 1.0),
          valid(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 1) {}

    bool is_valid(int y, int x) const { return valid[static_cast<std::size_t>(y) * width + x] != 0; }
    bool same_shape(const NormalMap& o) const { return height == o.height && width == o.width; }
};

// Per-pixel displacement (pixels) toward the previous frame's sampling
// coordinates: sample frame t-1 at p + (u, v).
struct FlowField {
    Grid u, v;

    FlowField() = default;
    FlowField(int h, int w) : u(h, w), v(h, w) {}
    int height() const { return u.height; }
    int width() const { return u.width; }
};

// C x h x w real grid, channel-major.
struct FeatureGrid {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    FeatureGrid() = default;
    FeatureGrid(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, 0.0) {
        if (c < 0 || h < 0 || w < 0)
            throw SizeError("feature grid extent must be nonnegative");
    }

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    int locations() const { return height * width; }
    bool same_spatial(const FeatureGrid& o) const { return height == o.height && width == o.width; }
    bool same_shape(const FeatureGrid& o) const { return same_spatial(o) && channels == o.channels; }
};

// Row-stochastic location-similarity weights, L0 x L1 row-major.
struct SimilarityMap {
    int rows = 0;
    int cols = 0;
    std::vector<double> weights;

    SimilarityMap() = default;
    SimilarityMap(int r, int c)
        : rows(r), cols(c), weights(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int i, int j) { return weights[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return weights[static_cast<std::size_t>(i) * cols + j]; }
};

// Small dense matrix, row-major.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

} // namespace tempdepth

#pragma once

#include <string>

#include "tempdepth/grid.hpp"

namespace tempdepth {

// Planar float raster matching what a PFM file holds (1 or 3 channels).
// Channel planes are stored back to back, each row-major top-to-bottom;
// PFM's bottom-to-top row order and pixel interleaving exist only on disk.
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;

    Raster() = default;
    Raster(int c, int h, int w)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

// PFM: "Pf"/"PF", "W H", scale (sign = byte order), then raw 32-bit floats.
Raster read_pfm(const std::string& path);
void write_pfm(const Raster& r, const std::string& path);

// Binary PGM, maxval 255. Read thresholds at >127; write maps 1 -> 255.
BinaryMask read_mask_pgm(const std::string& path);
void write_mask_pgm(const BinaryMask& m, const std::string& path);

// FGRID: "FGRD", three u32le counts (C,H,W), then C*H*W little-endian floats
// in channel-major order.
FeatureGrid read_fgrid(const std::string& path);
void write_fgrid(const FeatureGrid& g, const std::string& path);

// Raster <-> typed map conversions.
Raster to_raster(const Grid& g);
Raster to_raster(const DepthMap& d);
Raster to_raster(const NormalMap& n);
Raster to_raster(const FlowField& f); // 3 channels, third written as zero

Grid grid_from_raster(const Raster& r);           // requires 1 channel
DepthMap depth_from_raster(const Raster& r);      // requires 1 channel
NormalMap normals_from_raster(const Raster& r);   // requires 3 channels
FlowField flow_from_raster(const Raster& r);      // requires 3 channels, third ignored

} // namespace tempdepth

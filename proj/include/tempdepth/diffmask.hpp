#pragma once

#include "tempdepth/grid.hpp"

namespace tempdepth {

// Per-pixel sum over x,y,z of the temporal variance of normal components
// across a frame pair. Zero exactly where the two normals coincide.
struct VarianceMap {
    Grid values;
    std::vector<std::uint8_t> valid;

    int height() const { return values.height; }
    int width() const { return values.width; }
};

struct MaskConfig {
    double alpha = 0.05;       // threshold margin over the motion baseline
    int histogram_bins = 64;   // bins for the modal-variance estimate
    int refine_open_radius = 1;
    int refine_close_radius = 1;
};

// sigma^2_total(i) = sum_k var over the two frames of component k at pixel i.
// Inputs must be unit normals of equal size.
VarianceMap directional_variance(const NormalMap& n0, const NormalMap& n1);

// Modal variance attributed to global camera motion: center of the most
// populated histogram bin over [0, max], ties broken toward the lowest bin.
double motion_baseline(const VarianceMap& var, const MaskConfig& cfg);

// Pixel = 1 iff variance > baseline + alpha (strict).
BinaryMask raw_mask(const VarianceMap& var, double baseline, const MaskConfig& cfg);

// Deterministic refinement: morphological opening then closing with disk
// structuring elements. Output never exceeds the dilation of the input by
// the closing radius. `normals` must match the mask extent.
BinaryMask refine_mask(const BinaryMask& raw, const NormalMap& normals, const MaskConfig& cfg);

// Mean squared difference between a binary pseudo-label and a soft mask,
// averaged over all pixels.
double mask_loss(const BinaryMask& md, const Grid& ml);

// Morphology building blocks (disk structuring element of the given radius;
// outside the grid counts as background).
BinaryMask erode(const BinaryMask& m, int radius);
BinaryMask dilate(const BinaryMask& m, int radius);

} // namespace tempdepth

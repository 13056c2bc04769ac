#pragma once

#include <limits>
#include <utility>

#include "tempdepth/grid.hpp"

namespace tempdepth {

// Entries left NaN were not produced by the operation that built the report.
struct MetricsReport {
    double abs_rel = std::numeric_limits<double>::quiet_NaN();
    double sq_rel = std::numeric_limits<double>::quiet_NaN();
    double rmse = std::numeric_limits<double>::quiet_NaN();
    double delta1 = std::numeric_limits<double>::quiet_NaN();
    double delta2 = std::numeric_limits<double>::quiet_NaN();
    double delta3 = std::numeric_limits<double>::quiet_NaN();
    double qtc = std::numeric_limits<double>::quiet_NaN();
    double rtc = std::numeric_limits<double>::quiet_NaN();
};

// Standard accuracy metrics over the valid overlap restricted to ground
// truth in (0, cap] meters. Thresholds are 1.25, 1.25^2, 1.25^3 (strict).
MetricsReport depth_metrics(const DepthMap& pred, const DepthMap& gt, double cap);

// Bilinear backward warp: warped(p) = prev sampled at p + flow(p). The
// validity bit clears wherever a nonzero-weight corner leaves the grid or
// touches an invalid source pixel.
std::pair<DepthMap, BinaryMask> backward_warp(const DepthMap& prev, const FlowField& flow);

// Mean relative difference |d - dw| / d over pixels with k = 1.
double qtc(const DepthMap& d, const DepthMap& dw, const BinaryMask& k);

// Fraction of k = 1 pixels whose symmetric ratio max(d/dw, dw/d) is strictly
// below thr.
double rtc(const DepthMap& d, const DepthMap& dw, const BinaryMask& k, double thr);

} // namespace tempdepth

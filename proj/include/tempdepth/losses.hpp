#pragma once

#include <functional>

#include "tempdepth/grid.hpp"

namespace tempdepth {

struct LossConfig {
    double lambda = 0.85;      // variance-focus parameter of the scale-invariant loss
    double silog_scale = 10.0;
    double loss_alpha = 10.0;  // weight on the normal and mask terms
    double eps = 1e-6;         // log-domain clamp, meters
};

struct LossReport {
    double depth_loss = 0.0;
    double normal_loss = 0.0;
    double mask_loss = 0.0;
    double total = 0.0;
};

// Scale-invariant log loss over the valid overlap:
// silog_scale * sqrt(mean(g^2) - lambda * mean(g)^2), g = log pred - log gt,
// depths clamped to >= eps before the log.
double silog(const DepthMap& pred, const DepthMap& gt, const LossConfig& cfg);

// Analytic d silog / d pred. Undefined at exactly zero loss.
Grid silog_grad(const DepthMap& pred, const DepthMap& gt, const LossConfig& cfg);

double mse(const Grid& a, const Grid& b);
Grid mse_grad(const Grid& a, const Grid& b); // 2(a-b)/N

// total = depth + alpha * normal + alpha * mask; components must be finite
// and nonnegative.
LossReport total_loss(double depth_loss, double normal_loss, double mask_loss,
                      const LossConfig& cfg);

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h per element.
Grid finite_diff(const std::function<double(const Grid&)>& f, const Grid& x, double step);

} // namespace tempdepth

#include "tempdepth/losses.hpp"

#include <cmath>
#include <vector>

#include "tempdepth/numeric.hpp"

namespace tempdepth {

namespace {

struct LogDiffs {
    std::vector<double> g;       // log pred - log gt at overlap pixels
    std::vector<std::size_t> px; // flat indices of those pixels
};

LogDiffs log_diffs(const DepthMap& pred, const DepthMap& gt, const LossConfig& cfg) {
    if (!pred.values.same_shape(gt.values))
        throw SizeError("depth maps differ in size");
    if (cfg.eps <= 0.0)
        throw PreconditionError("eps must be positive");

    LogDiffs out;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        if (!pred.valid[i] || !gt.valid[i]) continue;
        double p = std::max(pred.values.data[i], cfg.eps);
        double g = std::max(gt.values.data[i], cfg.eps);
        out.g.push_back(std::log(p) - std::log(g));
        out.px.push_back(i);
    }
    if (out.g.empty())
        throw EmptyInputError("no valid overlap between depth maps");
    return out;
}

} // namespace

double silog(const DepthMap& pred, const DepthMap& gt, const LossConfig& cfg) {
    LogDiffs d = log_diffs(pred, gt, cfg);
    const double n = static_cast<double>(d.g.size());
    std::vector<double> sq(d.g.size());
    for (std::size_t i = 0; i < d.g.size(); ++i) sq[i] = d.g[i] * d.g[i];
    double mean_sq = pairwise_sum(sq) / n;
    double mean = pairwise_sum(d.g) / n;
    double radicand = mean_sq - cfg.lambda * mean * mean;
    if (radicand < 0.0) radicand = 0.0; // rounding at lambda = 1
    return cfg.silog_scale * std::sqrt(radicand);
}

Grid silog_grad(const DepthMap& pred, const DepthMap& gt, const LossConfig& cfg) {
    LogDiffs d = log_diffs(pred, gt, cfg);
    const double n = static_cast<double>(d.g.size());
    std::vector<double> sq(d.g.size());
    for (std::size_t i = 0; i < d.g.size(); ++i) sq[i] = d.g[i] * d.g[i];
    double mean_sq = pairwise_sum(sq) / n;
    double mean = pairwise_sum(d.g) / n;
    double radicand = mean_sq - cfg.lambda * mean * mean;
    if (!(radicand > 0.0))
        throw NumericError("gradient undefined at zero loss");
    double root = std::sqrt(radicand);

    // d loss / d g_i = scale / root * (g_i - lambda * mean) / n, and
    // d g_i / d pred_i = 1/pred_i unless the clamp is active.
    Grid grad(pred.height(), pred.width());
    for (std::size_t k = 0; k < d.g.size(); ++k) {
        std::size_t i = d.px[k];
        double p = pred.values.data[i];
        double dgdp = (p >= cfg.eps) ? 1.0 / p : 0.0;
        grad.data[i] = cfg.silog_scale / root * (d.g[k] - cfg.lambda * mean) / n * dgdp;
    }
    return grad;
}

double mse(const Grid& a, const Grid& b) {
    if (!a.same_shape(b))
        throw SizeError("grids differ in size");
    if (a.size() == 0)
        throw EmptyInputError("empty grids");
    std::vector<double> sq(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.data[i] - b.data[i];
        sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(a.size());
}

Grid mse_grad(const Grid& a, const Grid& b) {
    if (!a.same_shape(b))
        throw SizeError("grids differ in size");
    if (a.size() == 0)
        throw EmptyInputError("empty grids");
    Grid g(a.height, a.width);
    double inv = 2.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        g.data[i] = inv * (a.data[i] - b.data[i]);
    return g;
}

LossReport total_loss(double depth_loss, double normal_loss, double mask_loss,
                      const LossConfig& cfg) {
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!ok(depth_loss) || !ok(normal_loss) || !ok(mask_loss))
        throw PreconditionError("loss components must be finite and nonnegative");
    LossReport r;
    r.depth_loss = depth_loss;
    r.normal_loss = normal_loss;
    r.mask_loss = mask_loss;
    r.total = depth_loss + cfg.loss_alpha * normal_loss + cfg.loss_alpha * mask_loss;
    return r;
}

Grid finite_diff(const std::function<double(const Grid&)>& f, const Grid& x, double step) {
    if (step <= 0.0)
        throw PreconditionError("step must be positive");
    Grid g(x.height, x.width);
    Grid probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double orig = probe.data[i];
        probe.data[i] = orig + step;
        double fp = f(probe);
        probe.data[i] = orig - step;
        double fm = f(probe);
        probe.data[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("objective not finite at probe point");
        g.data[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

} // namespace tempdepth

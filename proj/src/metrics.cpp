#include "tempdepth/metrics.hpp"

#include <cmath>
#include <vector>

#include "tempdepth/numeric.hpp"

namespace tempdepth {

MetricsReport depth_metrics(const DepthMap& pred, const DepthMap& gt, double cap) {
    if (!pred.values.same_shape(gt.values))
        throw SizeError("depth maps differ in size");
    if (!(cap > 0.0))
        throw PreconditionError("cap must be positive");

    std::vector<double> absrel, sqrel, sqerr;
    std::size_t n = 0, d1 = 0, d2 = 0, d3 = 0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        if (!pred.valid[i] || !gt.valid[i]) continue;
        double p = pred.values.data[i];
        double g = gt.values.data[i];
        if (g > cap) continue; // evaluation domain is gt in (0, cap]
        double diff = p - g;
        absrel.push_back(std::abs(diff) / g);
        sqrel.push_back(diff * diff / g);
        sqerr.push_back(diff * diff);
        double ratio = std::max(p / g, g / p);
        if (ratio < 1.25) ++d1;
        if (ratio < 1.25 * 1.25) ++d2;
        if (ratio < 1.25 * 1.25 * 1.25) ++d3;
        ++n;
    }
    if (n == 0)
        throw EmptyInputError("no valid overlap between depth maps");

    MetricsReport r;
    double dn = static_cast<double>(n);
    r.abs_rel = pairwise_sum(absrel) / dn;
    r.sq_rel = pairwise_sum(sqrel) / dn;
    r.rmse = std::sqrt(pairwise_sum(sqerr) / dn);
    r.delta1 = static_cast<double>(d1) / dn;
    r.delta2 = static_cast<double>(d2) / dn;
    r.delta3 = static_cast<double>(d3) / dn;
    return r;
}

std::pair<DepthMap, BinaryMask> backward_warp(const DepthMap& prev, const FlowField& flow) {
    const int h = prev.height(), w = prev.width();
    if (flow.height() != h || flow.width() != w)
        throw SizeError("flow field does not match depth size");

    DepthMap warped;
    warped.values = Grid(h, w);
    warped.valid.assign(static_cast<std::size_t>(h) * w, 0);
    BinaryMask validity(h, w);

    parallel_rows(h, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < w; ++x) {
                double sx = x + flow.u.at(y, x);
                double sy = y + flow.v.at(y, x);
                if (!std::isfinite(sx) || !std::isfinite(sy) || std::abs(sx) > 1e9 ||
                    std::abs(sy) > 1e9)
                    continue; // leaves the pixel invalid
                double fx0 = std::floor(sx), fy0 = std::floor(sy);
                int x0 = static_cast<int>(fx0), y0i = static_cast<int>(fy0);
                double ax = sx - fx0, ay = sy - fy0;

                // Corner weights; zero-weight corners are outside the sample
                // footprint and do not constrain validity.
                const double wgt[4] = {(1 - ax) * (1 - ay), ax * (1 - ay),
                                       (1 - ax) * ay, ax * ay};
                const int cx[4] = {x0, x0 + 1, x0, x0 + 1};
                const int cy[4] = {y0i, y0i, y0i + 1, y0i + 1};

                double acc = 0.0;
                bool ok = true;
                for (int k = 0; k < 4 && ok; ++k) {
                    if (wgt[k] == 0.0) continue;
                    if (cx[k] < 0 || cx[k] >= w || cy[k] < 0 || cy[k] >= h ||
                        !prev.is_valid(cy[k], cx[k]))
                        ok = false;
                    else
                        acc += wgt[k] * prev.values.at(cy[k], cx[k]);
                }
                if (ok) {
                    warped.values.at(y, x) = acc;
                    warped.valid[static_cast<std::size_t>(y) * w + x] = 1;
                    validity.at(y, x) = 1;
                }
            }
        }
    });
    return {std::move(warped), std::move(validity)};
}

double qtc(const DepthMap& d, const DepthMap& dw, const BinaryMask& k) {
    if (!d.values.same_shape(dw.values) || d.height() != k.height || d.width() != k.width)
        throw SizeError("qtc inputs differ in size");

    std::vector<double> terms;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        if (!k.values[i]) continue;
        double dv = d.values.data[i];
        if (!(dv > 0.0))
            throw PreconditionError("depth must be positive where the validity mask is set");
        terms.push_back(std::abs(dv - dw.values.data[i]) / dv);
    }
    if (terms.empty())
        throw EmptyInputError("validity mask is empty");
    return pairwise_sum(terms) / static_cast<double>(terms.size());
}

double rtc(const DepthMap& d, const DepthMap& dw, const BinaryMask& k, double thr) {
    if (!d.values.same_shape(dw.values) || d.height() != k.height || d.width() != k.width)
        throw SizeError("rtc inputs differ in size");

    std::size_t n = 0, hit = 0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        if (!k.values[i]) continue;
        double dv = d.values.data[i];
        double wv = dw.values.data[i];
        if (!(dv > 0.0) || !(wv > 0.0))
            throw PreconditionError("depths must be positive where the validity mask is set");
        double ratio = std::max(dv / wv, wv / dv);
        if (ratio < thr) ++hit;
        ++n;
    }
    if (n == 0)
        throw EmptyInputError("validity mask is empty");
    return static_cast<double>(hit) / static_cast<double>(n);
}

} // namespace tempdepth

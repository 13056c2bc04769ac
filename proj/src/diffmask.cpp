#include "tempdepth/diffmask.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tempdepth/numeric.hpp"

namespace tempdepth {

namespace {

void check_unit(const NormalMap& n, const char* which) {
    for (int y = 0; y < n.height; ++y)
        for (int x = 0; x < n.width; ++x) {
            if (!n.is_valid(y, x)) continue;
            double sq = n.nx.at(y, x) * n.nx.at(y, x) + n.ny.at(y, x) * n.ny.at(y, x) +
                        n.nz.at(y, x) * n.nz.at(y, x);
            if (!(std::abs(sq - 1.0) <= 1e-3))
                throw PreconditionError(std::string(which) + " contains non-unit normals");
        }
}

// Disk structuring element: offsets with dx^2 + dy^2 <= (r + 0.5)^2, so
// radius 1 is the full 3x3 neighborhood.
std::vector<std::pair<int, int>> disk_offsets(int radius) {
    std::vector<std::pair<int, int>> offs;
    double lim = (radius + 0.5) * (radius + 0.5);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= lim)
                offs.emplace_back(dy, dx);
    return offs;
}

BinaryMask closing(const BinaryMask& m, int radius) {
    if (radius <= 0) return m;
    // Pad so the dilated set is not cropped before the erosion sees it.
    BinaryMask padded(m.height + 2 * radius, m.width + 2 * radius);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            padded.at(y + radius, x + radius) = m.at(y, x);
    BinaryMask closed = erode(dilate(padded, radius), radius);
    BinaryMask out(m.height, m.width);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            out.at(y, x) = closed.at(y + radius, x + radius);
    return out;
}

} // namespace

BinaryMask erode(const BinaryMask& m, int radius) {
    if (radius <= 0) return m;
    auto offs = disk_offsets(radius);
    BinaryMask out(m.height, m.width);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            std::uint8_t keep = 1;
            for (auto [dy, dx] : offs) {
                int yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= m.height || xx < 0 || xx >= m.width || !m.at(yy, xx)) {
                    keep = 0;
                    break;
                }
            }
            out.at(y, x) = keep;
        }
    return out;
}

BinaryMask dilate(const BinaryMask& m, int radius) {
    if (radius <= 0) return m;
    auto offs = disk_offsets(radius);
    BinaryMask out(m.height, m.width);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            std::uint8_t hit = 0;
            for (auto [dy, dx] : offs) {
                int yy = y + dy, xx = x + dx;
                if (yy >= 0 && yy < m.height && xx >= 0 && xx < m.width && m.at(yy, xx)) {
                    hit = 1;
                    break;
                }
            }
            out.at(y, x) = hit;
        }
    return out;
}

VarianceMap directional_variance(const NormalMap& n0, const NormalMap& n1) {
    if (!n0.same_shape(n1))
        throw SizeError("normal maps differ in size");
    check_unit(n0, "first frame");
    check_unit(n1, "second frame");

    const int h = n0.height, w = n0.width;
    VarianceMap out;
    out.values = Grid(h, w);
    out.valid.assign(static_cast<std::size_t>(h) * w, 0);

    parallel_rows(h, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!n0.is_valid(y, x) || !n1.is_valid(y, x)) continue;
                double total = 0.0;
                const Grid* c0[3] = {&n0.nx, &n0.ny, &n0.nz};
                const Grid* c1[3] = {&n1.nx, &n1.ny, &n1.nz};
                for (int k = 0; k < 3; ++k) {
                    double a = c0[k]->at(y, x), b = c1[k]->at(y, x);
                    double mu = 0.5 * (a + b);
                    total += 0.5 * ((a - mu) * (a - mu) + (b - mu) * (b - mu));
                }
                out.values.at(y, x) = total;
                out.valid[static_cast<std::size_t>(y) * w + x] = 1;
            }
        }
    });
    return out;
}

double motion_baseline(const VarianceMap& var, const MaskConfig& cfg) {
    if (cfg.histogram_bins < 2)
        throw PreconditionError("histogram_bins must be >= 2");

    double maxv = 0.0;
    std::size_t nvalid = 0;
    for (std::size_t i = 0; i < var.values.size(); ++i) {
        if (!var.valid[i]) continue;
        double v = var.values.data[i];
        if (!(v >= 0.0) || !std::isfinite(v))
            throw PreconditionError("variance values must be finite and nonnegative");
        ++nvalid;
        maxv = std::max(maxv, v);
    }
    if (nvalid == 0)
        throw EmptyInputError("variance map has no valid pixels");
    if (maxv <= 0.0)
        return 0.0; // every valid pixel sits in the degenerate zero bin

    const int bins = cfg.histogram_bins;
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t i = 0; i < var.values.size(); ++i) {
        if (!var.valid[i]) continue;
        int b = static_cast<int>(std::floor(var.values.data[i] / maxv * bins));
        counts[std::min(b, bins - 1)]++;
    }
    int best = 0;
    for (int b = 1; b < bins; ++b)
        if (counts[b] > counts[best]) best = b; // ties keep the lower bin
    return (best + 0.5) * (maxv / bins);
}

BinaryMask raw_mask(const VarianceMap& var, double baseline, const MaskConfig& cfg) {
    if (baseline < 0.0)
        throw PreconditionError("baseline must be nonnegative");
    double thr = baseline + cfg.alpha;
    BinaryMask out(var.height(), var.width());
    for (std::size_t i = 0; i < var.values.size(); ++i)
        out.values[i] = (var.valid[i] && var.values.data[i] > thr) ? 1 : 0;
    return out;
}

BinaryMask refine_mask(const BinaryMask& raw, const NormalMap& normals, const MaskConfig& cfg) {
    if (raw.height != normals.height || raw.width != normals.width)
        throw SizeError("mask and normal map differ in size");
    BinaryMask opened = dilate(erode(raw, cfg.refine_open_radius), cfg.refine_open_radius);
    return closing(opened, cfg.refine_close_radius);
}

double mask_loss(const BinaryMask& md, const Grid& ml) {
    if (md.height != ml.height || md.width != ml.width)
        throw SizeError("mask_loss inputs differ in size");
    std::vector<double> sq(md.size());
    for (std::size_t i = 0; i < md.size(); ++i) {
        double d = static_cast<double>(md.values[i]) - ml.data[i];
        sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(sq.size());
}

} // namespace tempdepth

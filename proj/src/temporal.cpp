#include "tempdepth/temporal.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "tempdepth/io.hpp"
#include "tempdepth/numeric.hpp"

namespace tempdepth {

namespace {

// Row view of a feature grid: location i = y*w + x maps to the channel
// vector at (y, x).
inline void location_row(const FeatureGrid& g, int i, double* out) {
    int y = i / g.width, x = i % g.width;
    for (int c = 0; c < g.channels; ++c)
        out[c] = g.at(c, y, x);
}

FeatureGrid rows_to_grid(const Mat& m, int h, int w) {
    FeatureGrid g(m.cols, h, w);
    for (int i = 0; i < m.rows; ++i)
        for (int c = 0; c < m.cols; ++c)
            g.at(c, i / w, i % w) = m.at(i, c);
    return g;
}

void l2_normalize_rows(Mat& m) {
    for (int i = 0; i < m.rows; ++i) {
        double sq = 0.0;
        for (int c = 0; c < m.cols; ++c) sq += m.at(i, c) * m.at(i, c);
        if (sq > 0.0) {
            double inv = 1.0 / std::sqrt(sq);
            for (int c = 0; c < m.cols; ++c) m.at(i, c) *= inv;
        }
    }
}

// rows(L x C) * proj(C x C)
Mat project_rows(const Mat& rows, const Mat& proj) {
    if (proj.rows != rows.cols || proj.cols != rows.cols)
        throw SizeError("projection matrix does not match channel count");
    Mat out(rows.rows, rows.cols);
    for (int i = 0; i < rows.rows; ++i)
        for (int j = 0; j < proj.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < rows.cols; ++k)
                s += rows.at(i, k) * proj.at(k, j);
            out.at(i, j) = s;
        }
    return out;
}

// Row-softmax of scale * q . k^T with max subtraction; rows of an all-zero
// query come out exactly 1/L1.
SimilarityMap softmax_similarity(const Mat& q, const Mat& k, double scale) {
    SimilarityMap s(q.rows, k.rows);
    std::vector<double> logits(k.rows);
    for (int i = 0; i < q.rows; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k.rows; ++j) {
            double dot = 0.0;
            for (int c = 0; c < q.cols; ++c)
                dot += q.at(i, c) * k.at(j, c);
            logits[j] = scale * dot;
            if (logits[j] > m) m = logits[j];
        }
        double sum = 0.0;
        for (int j = 0; j < k.rows; ++j) {
            logits[j] = std::exp(logits[j] - m);
            sum += logits[j];
        }
        for (int j = 0; j < k.rows; ++j)
            s.at(i, j) = logits[j] / sum;
    }
    return s;
}

void apply_mask_rows(Mat& rows, const BinaryMask& mask, bool inverted) {
    for (int i = 0; i < rows.rows; ++i) {
        std::uint8_t mv = mask.values[i];
        double f = inverted ? (mv ? 0.0 : 1.0) : (mv ? 1.0 : 0.0);
        for (int c = 0; c < rows.cols; ++c)
            rows.at(i, c) *= f;
    }
}

void check_mask(const BinaryMask& mask, const FeatureGrid& g) {
    if (mask.height != g.height || mask.width != g.width)
        throw SizeError("mask is not at feature resolution");
}

Mat fill_random(int rows, int cols, double spread, std::mt19937_64& rng) {
    Mat m(rows, cols);
    for (auto& v : m.data)
        v = spread * uniform_pm1(rng);
    return m;
}

} // namespace

Mat feature_rows(const FeatureGrid& g) {
    Mat m(g.locations(), g.channels);
    for (int i = 0; i < m.rows; ++i)
        location_row(g, i, &m.data[static_cast<std::size_t>(i) * m.cols]);
    return m;
}

AttentionWeights AttentionWeights::passthrough(int channels) {
    AttentionWeights w;
    w.wq = Mat::identity(channels);
    w.wk = Mat::identity(channels);
    w.wv = Mat::identity(channels);
    w.kernel = Mat(channels, 2 * channels);
    for (int i = 0; i < channels; ++i)
        w.kernel.at(i, i) = 1.0;
    w.bias.assign(channels, 0.0);
    w.ms_scale = 1.0 / std::sqrt(static_cast<double>(channels));
    return w;
}

AttentionWeights AttentionWeights::seeded(int channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    AttentionWeights w;
    double ps = 1.0 / std::sqrt(static_cast<double>(channels));
    w.wq = fill_random(channels, channels, ps, rng);
    w.wk = fill_random(channels, channels, ps, rng);
    w.wv = fill_random(channels, channels, ps, rng);
    w.kernel = fill_random(channels, 2 * channels, 1.0 / std::sqrt(2.0 * channels), rng);
    w.bias.resize(channels);
    for (auto& b : w.bias)
        b = 0.1 * uniform_pm1(rng);
    w.ms_scale = ps;
    return w;
}

std::pair<FeatureGrid, FeatureGrid> toy_feature_extractor(
    const DepthMap& depth, const NormalMap& normals,
    int stride, int cd, int cn, std::uint64_t seed) {
    const int h = depth.height(), w = depth.width();
    if (stride < 1 || cd < 1 || cn < 1)
        throw PreconditionError("stride and channel counts must be positive");
    if (h != normals.height || w != normals.width)
        throw SizeError("depth and normal maps differ in size");
    if (h % stride != 0 || w % stride != 0)
        throw SizeError("grid dimensions must be divisible by the patch stride");

    const int oh = h / stride, ow = w / stride;
    const int dlen = stride * stride;
    const int nlen = 3 * dlen;

    std::mt19937_64 rng(seed);
    Mat pd = fill_random(cd, dlen, 1.0 / std::sqrt(static_cast<double>(dlen)), rng);
    Mat pn = fill_random(cn, nlen, 1.0 / std::sqrt(static_cast<double>(nlen)), rng);

    FeatureGrid zd(cd, oh, ow), zn(cn, oh, ow);
    std::vector<double> dp(dlen), np(nlen);
    for (int py = 0; py < oh; ++py) {
        for (int px = 0; px < ow; ++px) {
            int k = 0;
            // Patch is flattened row-major; normal components are stacked as
            // the full x block, then y, then z.
            for (int dy = 0; dy < stride; ++dy)
                for (int dx = 0; dx < stride; ++dx, ++k) {
                    int y = py * stride + dy, x = px * stride + dx;
                    dp[k] = depth.values.at(y, x);
                    np[k] = normals.nx.at(y, x);
                    np[dlen + k] = normals.ny.at(y, x);
                    np[2 * dlen + k] = normals.nz.at(y, x);
                }
            for (int c = 0; c < cd; ++c) {
                double s = 0.0;
                for (int i = 0; i < dlen; ++i) s += pd.at(c, i) * dp[i];
                zd.at(c, py, px) = s;
            }
            for (int c = 0; c < cn; ++c) {
                double s = 0.0;
                for (int i = 0; i < nlen; ++i) s += pn.at(c, i) * np[i];
                zn.at(c, py, px) = s;
            }
        }
    }
    return {std::move(zd), std::move(zn)};
}

FeatureGrid fuse_features(const FeatureGrid& zd, const FeatureGrid& zn) {
    if (!zd.same_spatial(zn))
        throw SizeError("feature grids differ in spatial size");
    FeatureGrid out(zd.channels + zn.channels, zd.height, zd.width);
    std::copy(zd.data.begin(), zd.data.end(), out.data.begin());
    std::copy(zn.data.begin(), zn.data.end(), out.data.begin() + zd.data.size());
    return out;
}

SimilarityMap sns_similarity(const FeatureGrid& zs_query, const FeatureGrid& zs_key,
                             const BinaryMask& mask, double scale, bool normalize) {
    if (!zs_query.same_shape(zs_key))
        throw SizeError("query and key grids differ in shape");
    check_mask(mask, zs_query);

    Mat q = feature_rows(zs_query);
    Mat k = feature_rows(zs_key);
    if (normalize) {
        l2_normalize_rows(q);
        l2_normalize_rows(k);
    }
    apply_mask_rows(q, mask, /*inverted=*/false);
    return softmax_similarity(q, k, scale);
}

Mat sns_align(const SimilarityMap& s, const FeatureGrid& zd_value) {
    if (s.cols != zd_value.locations())
        throw SizeError("similarity columns do not match value locations");
    Mat v = feature_rows(zd_value);
    Mat out(s.rows, v.cols);
    for (int i = 0; i < s.rows; ++i)
        for (int c = 0; c < v.cols; ++c) {
            double acc = 0.0;
            for (int j = 0; j < s.cols; ++j)
                acc += s.at(i, j) * v.at(j, c);
            out.at(i, c) = acc;
        }
    return out;
}

FeatureGrid apply_pointwise(const Mat& kernel, const std::vector<double>& bias,
                            const FeatureGrid& in) {
    if (kernel.cols != in.channels)
        throw SizeError("kernel input width does not match channel count");
    if (static_cast<int>(bias.size()) != kernel.rows)
        throw SizeError("bias length does not match kernel output width");
    FeatureGrid out(kernel.rows, in.height, in.width);
    for (int o = 0; o < kernel.rows; ++o)
        for (int y = 0; y < in.height; ++y)
            for (int x = 0; x < in.width; ++x) {
                double s = bias[o];
                for (int i = 0; i < in.channels; ++i)
                    s += kernel.at(o, i) * in.at(i, y, x);
                out.at(o, y, x) = s;
            }
    return out;
}

namespace {

struct SnsDirection {
    SimilarityMap s;
    Mat align;
    FeatureGrid out;
};

SnsDirection sns_direction(const FeatureGrid& q_zd, const FeatureGrid& q_zn,
                           const FeatureGrid& k_zd, const FeatureGrid& k_zn,
                           const BinaryMask& mask, const AttentionWeights& w) {
    FeatureGrid qs = fuse_features(q_zd, q_zn);
    FeatureGrid ks = fuse_features(k_zd, k_zn);
    SnsDirection d;
    d.s = sns_similarity(qs, ks, mask, w.sns_scale, w.normalize_features);
    d.align = sns_align(d.s, k_zd);
    FeatureGrid aligned = rows_to_grid(d.align, q_zd.height, q_zd.width);
    d.out = apply_pointwise(w.kernel, w.bias, fuse_features(q_zd, aligned));
    return d;
}

struct MsDirection {
    SimilarityMap attn;
    Mat align;
    Mat value;
    FeatureGrid out;
};

MsDirection ms_direction(const FeatureGrid& q_zd, const FeatureGrid& k_zd,
                         const BinaryMask& mask, const AttentionWeights& w) {
    Mat q = feature_rows(q_zd);
    Mat k = feature_rows(k_zd);
    apply_mask_rows(q, mask, /*inverted=*/true);
    apply_mask_rows(k, mask, /*inverted=*/true);
    Mat v = k;

    Mat qp = project_rows(q, w.wq);
    Mat kp = project_rows(k, w.wk);
    Mat vp = project_rows(v, w.wv);

    double scale = w.ms_scale > 0.0 ? w.ms_scale
                                    : 1.0 / std::sqrt(static_cast<double>(q_zd.channels));
    MsDirection d;
    d.attn = softmax_similarity(qp, kp, scale);
    d.align.rows = d.attn.rows;
    d.align.cols = vp.cols;
    d.align.data.assign(static_cast<std::size_t>(d.align.rows) * d.align.cols, 0.0);
    for (int i = 0; i < d.attn.rows; ++i)
        for (int c = 0; c < vp.cols; ++c) {
            double acc = 0.0;
            for (int j = 0; j < d.attn.cols; ++j)
                acc += d.attn.at(i, j) * vp.at(j, c);
            d.align.at(i, c) = acc;
        }

    FeatureGrid aligned = rows_to_grid(d.align, q_zd.height, q_zd.width);
    FeatureGrid masked_q = rows_to_grid(q, q_zd.height, q_zd.width);
    d.out = apply_pointwise(w.kernel, w.bias, fuse_features(aligned, masked_q));
    d.value = std::move(vp);
    return d;
}

} // namespace

std::pair<FeatureGrid, FeatureGrid> sns_forward(
    const FeatureGrid& zd0, const FeatureGrid& zd1,
    const FeatureGrid& zn0, const FeatureGrid& zn1,
    const BinaryMask& mask, const AttentionWeights& w, SnsTrace* trace) {
    if (!zd0.same_shape(zd1) || !zn0.same_shape(zn1))
        throw SizeError("frame features differ in shape");

    SnsDirection d0 = sns_direction(zd0, zn0, zd1, zn1, mask, w);
    SnsDirection d1 = sns_direction(zd1, zn1, zd0, zn0, mask, w);
    if (trace) {
        trace->s01 = std::move(d0.s);
        trace->s10 = std::move(d1.s);
        trace->align0 = std::move(d0.align);
        trace->align1 = std::move(d1.align);
    }
    return {std::move(d0.out), std::move(d1.out)};
}

std::pair<FeatureGrid, FeatureGrid> ms_forward(
    const FeatureGrid& zd0, const FeatureGrid& zd1,
    const BinaryMask& mask, const AttentionWeights& w, MsTrace* trace) {
    if (!zd0.same_shape(zd1))
        throw SizeError("frame features differ in shape");
    check_mask(mask, zd0);

    MsDirection d0 = ms_direction(zd0, zd1, mask, w);
    MsDirection d1 = ms_direction(zd1, zd0, mask, w);
    if (trace) {
        trace->attn0 = std::move(d0.attn);
        trace->attn1 = std::move(d1.attn);
        trace->align0 = std::move(d0.align);
        trace->align1 = std::move(d1.align);
        trace->value0 = std::move(d0.value);
        trace->value1 = std::move(d1.value);
    }
    return {std::move(d0.out), std::move(d1.out)};
}

FeatureGrid fuse_video_feature(const FeatureGrid& zstatic, const FeatureGrid& zdyna,
                               const AttentionWeights& w) {
    if (!zstatic.same_shape(zdyna))
        throw SizeError("static and dynamic features differ in shape");
    return apply_pointwise(w.kernel, w.bias, fuse_features(zstatic, zdyna));
}

BinaryMask downsample_mask_max(const BinaryMask& full, int stride) {
    if (stride < 1)
        throw PreconditionError("stride must be positive");
    if (full.height % stride != 0 || full.width % stride != 0)
        throw SizeError("mask dimensions must be divisible by the stride");
    BinaryMask out(full.height / stride, full.width / stride);
    for (int y = 0; y < full.height; ++y)
        for (int x = 0; x < full.width; ++x)
            if (full.at(y, x))
                out.at(y / stride, x / stride) = 1;
    return out;
}

double max_row_sum_error(const SimilarityMap& s) {
    double worst = 0.0;
    for (int i = 0; i < s.rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < s.cols; ++j)
            sum += s.at(i, j);
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

bool weights_in_unit_interval(const SimilarityMap& s) {
    for (double v : s.weights)
        if (!(v >= 0.0 && v <= 1.0))
            return false;
    return true;
}

double hull_violation(const Mat& aligned, const Mat& value_rows) {
    double worst = 0.0;
    for (int c = 0; c < value_rows.cols; ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int j = 0; j < value_rows.rows; ++j) {
            double v = value_rows.at(j, c);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (int i = 0; i < aligned.rows; ++i) {
            double v = aligned.at(i, c);
            if (v < lo) worst = std::max(worst, lo - v);
            if (v > hi) worst = std::max(worst, v - hi);
        }
    }
    return worst;
}

double hull_violation(const Mat& aligned, const FeatureGrid& value) {
    return hull_violation(aligned, feature_rows(value));
}

namespace {

FeatureGrid mat_to_fgrid(const Mat& m) {
    FeatureGrid g(1, m.rows, m.cols);
    g.data = m.data;
    return g;
}

Mat mat_from_fgrid(const FeatureGrid& g, const char* what) {
    if (g.channels != 1)
        throw FormatError(std::string(what) + ": expected a single-channel grid");
    Mat m(g.height, g.width);
    m.data = g.data;
    return m;
}

} // namespace

void save_attention_weights(const AttentionWeights& w, const std::string& dir) {
    write_fgrid(mat_to_fgrid(w.wq), dir + "/wq.fgrid");
    write_fgrid(mat_to_fgrid(w.wk), dir + "/wk.fgrid");
    write_fgrid(mat_to_fgrid(w.wv), dir + "/wv.fgrid");
    Mat kb(w.kernel.rows, w.kernel.cols + 1);
    for (int i = 0; i < w.kernel.rows; ++i) {
        for (int j = 0; j < w.kernel.cols; ++j)
            kb.at(i, j) = w.kernel.at(i, j);
        kb.at(i, w.kernel.cols) = w.bias[i];
    }
    write_fgrid(mat_to_fgrid(kb), dir + "/kernel.fgrid");
}

AttentionWeights load_attention_weights(const std::string& dir) {
    AttentionWeights w;
    w.wq = mat_from_fgrid(read_fgrid(dir + "/wq.fgrid"), "wq");
    w.wk = mat_from_fgrid(read_fgrid(dir + "/wk.fgrid"), "wk");
    w.wv = mat_from_fgrid(read_fgrid(dir + "/wv.fgrid"), "wv");
    Mat kb = mat_from_fgrid(read_fgrid(dir + "/kernel.fgrid"), "kernel");
    if (kb.cols < 2)
        throw FormatError("kernel grid too narrow for weights plus bias");
    w.kernel = Mat(kb.rows, kb.cols - 1);
    w.bias.resize(kb.rows);
    for (int i = 0; i < kb.rows; ++i) {
        for (int j = 0; j + 1 < kb.cols; ++j)
            w.kernel.at(i, j) = kb.at(i, j);
        w.bias[i] = kb.at(i, kb.cols - 1);
    }
    w.ms_scale = w.wq.rows > 0 ? 1.0 / std::sqrt(static_cast<double>(w.wq.rows)) : 0.0;
    return w;
}

} // namespace tempdepth

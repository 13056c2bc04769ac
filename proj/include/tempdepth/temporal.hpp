#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "tempdepth/grid.hpp"

namespace tempdepth {

// Projection and refinement weights shared by the alignment passes.
// kernel/bias describe a pointwise (1x1) convolution out_c x in_c.
struct AttentionWeights {
    Mat wq, wk, wv;            // C x C projections for the static-area pass
    Mat kernel;                // out_c x in_c pointwise refinement
    std::vector<double> bias;  // out_c
    double sns_scale = 1.0;    // similarity logits use a raw dot product
    double ms_scale = 0.0;     // <= 0 resolves to 1/sqrt(C) at call time
    bool normalize_features = false; // optional L2 normalization before the dot product

    // Identity projections; kernel [I | 0] passes the first `channels`
    // channels of the concatenation through unchanged.
    static AttentionWeights passthrough(int channels);
    // Random projections and kernel, deterministic in the seed.
    static AttentionWeights seeded(int channels, std::uint64_t seed);
};

// Stand-in feature extractor: each stride x stride patch is flattened and
// linearly projected (seeded random matrix, no bias) to cd channels from
// depth and cn channels from normals. Output spatial dims are H/stride x
// W/stride.
std::pair<FeatureGrid, FeatureGrid> toy_feature_extractor(
    const DepthMap& depth, const NormalMap& normals,
    int stride, int cd, int cn, std::uint64_t seed);

// Channel concatenation, first argument's channels first.
FeatureGrid fuse_features(const FeatureGrid& zd, const FeatureGrid& zn);

// Location-similarity map: query rows are the flattened query grid with each
// location multiplied by its mask value; result is the row-softmax of
// scale * query . key^T. Rows whose mask is 0 come out exactly uniform.
SimilarityMap sns_similarity(const FeatureGrid& zs_query, const FeatureGrid& zs_key,
                             const BinaryMask& mask, double scale = 1.0,
                             bool normalize = false);

// Row i of the result is the S-weighted convex combination of the value
// grid's locations; L0 x C_value.
Mat sns_align(const SimilarityMap& s, const FeatureGrid& zd_value);

struct SnsTrace {
    SimilarityMap s01, s10;
    Mat align0, align1;
};

// Dynamic-area alignment, both directions. Direction 0 refines
// concat(zd0, align(S(fused0 * mask, fused1), zd1)) through the pointwise
// kernel; direction 1 swaps the frame roles.
std::pair<FeatureGrid, FeatureGrid> sns_forward(
    const FeatureGrid& zd0, const FeatureGrid& zd1,
    const FeatureGrid& zn0, const FeatureGrid& zn1,
    const BinaryMask& mask, const AttentionWeights& w,
    SnsTrace* trace = nullptr);

struct MsTrace {
    SimilarityMap attn0, attn1;
    Mat align0, align1;
    Mat value0, value1; // projected value rows each align drew from
};

// Static-area cross attention on features masked by (1 - mask), then
// pointwise refinement of concat(align, masked query features).
std::pair<FeatureGrid, FeatureGrid> ms_forward(
    const FeatureGrid& zd0, const FeatureGrid& zd1,
    const BinaryMask& mask, const AttentionWeights& w,
    MsTrace* trace = nullptr);

// Pointwise refinement of concat(zstatic, zdyna) into the video feature.
FeatureGrid fuse_video_feature(const FeatureGrid& zstatic, const FeatureGrid& zdyna,
                               const AttentionWeights& w);

// 1x1 convolution: out(o,y,x) = sum_i kernel(o,i) * in(i,y,x) + bias[o].
FeatureGrid apply_pointwise(const Mat& kernel, const std::vector<double>& bias,
                            const FeatureGrid& in);

// Max-pool a full-resolution mask to feature resolution: a patch is dynamic
// if any pixel in it is.
BinaryMask downsample_mask_max(const BinaryMask& full, int stride);

// Location-major flattening: row i = y*w + x holds the channel vector there.
Mat feature_rows(const FeatureGrid& g);

// Invariant probes used by the pipeline self-checks and the tests.
double max_row_sum_error(const SimilarityMap& s);   // max_i |sum_j S(i,j) - 1|
bool weights_in_unit_interval(const SimilarityMap& s);
// Max distance of any aligned entry outside the per-column [min, max] of the
// value rows; 0 when the convex-hull bound holds.
double hull_violation(const Mat& aligned, const Mat& value_rows);
double hull_violation(const Mat& aligned, const FeatureGrid& value);

// Weight persistence: <dir>/wq.fgrid, wk.fgrid, wv.fgrid each 1 x C x C, and
// <dir>/kernel.fgrid of shape 1 x out_c x (in_c + 1) with the bias in the
// last column.
void save_attention_weights(const AttentionWeights& w, const std::string& dir);
AttentionWeights load_attention_weights(const std::string& dir);

} // namespace tempdepth

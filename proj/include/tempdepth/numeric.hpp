#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace tempdepth {

// Deterministic pairwise reduction; all library means/sums go through this so
// results do not depend on accumulation incidentals.
double pairwise_sum(const double* v, std::size_t n);

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

// Uniform draw in [-1, 1) built from the raw mt19937_64 stream, so sequences
// are identical across platforms (std::*_distribution is not portable).
inline double uniform_pm1(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

// Thread cap from TEMPDEPTH_THREADS; defaults to 1 (serial).
int thread_cap();

// Runs fn(y0, y1) over disjoint row ranges, possibly on thread_cap() threads.
// Only used for maps with per-pixel independent outputs, which keeps results
// identical for any thread count.
void parallel_rows(int height, const std::function<void(int, int)>& fn);

} // namespace tempdepth

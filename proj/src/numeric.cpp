#include "tempdepth/numeric.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace tempdepth {

double pairwise_sum(const double* v, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

int thread_cap() {
    const char* env = std::getenv("TEMPDEPTH_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    return n < 1 ? 1 : n;
}

void parallel_rows(int height, const std::function<void(int, int)>& fn) {
    int cap = std::min(thread_cap(), height);
    if (cap <= 1 || height <= 1) {
        fn(0, height);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(cap);
    int chunk = (height + cap - 1) / cap;
    for (int t = 0; t < cap; ++t) {
        int y0 = t * chunk;
        int y1 = std::min(height, y0 + chunk);
        if (y0 >= y1) break;
        workers.emplace_back(fn, y0, y1);
    }
    for (auto& w : workers) w.join();
}

} // namespace tempdepth

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mwlab {

// Pairwise (tree) summation. Fixed association order, so results do not
// depend on thread scheduling and match between oracle and production paths.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 64) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(std::span<const double>(v.data(), v.size()));
}

// Sum of f(i) for i in [0, n), evaluated in index order with tree association.
inline double pairwise_sum_indexed(std::size_t n, const std::function<double(std::size_t)>& f) {
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) terms[i] = f(i);
    return pairwise_sum(terms);
}

}  // namespace mwlab

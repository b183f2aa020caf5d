#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace mkv {

// Pairwise (index-ascending tree) summation. Fixed association order makes
// reductions bit-stable across reruns and worker counts.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_sq(std::span<const double> v) { return dot(v, v); }

inline double norm(std::span<const double> v) { return std::sqrt(norm_sq(v)); }

// Frobenius norm of a dim x dim matrix stored row-major.
inline double frobenius_norm(std::span<const double> m) { return std::sqrt(norm_sq(m)); }

// out = M * v for a dim x dim row-major matrix.
inline void mat_vec(std::span<const double> m, std::span<const double> v, std::span<double> out) {
    const std::size_t d = v.size();
    for (std::size_t r = 0; r < d; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += m[r * d + c] * v[c];
        out[r] = s;
    }
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace mkv

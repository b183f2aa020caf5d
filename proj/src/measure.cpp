#include "mkv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mkv/numeric.hpp"

namespace mkv {

namespace {

// Per-atom squared norms in index order, reduced pairwise.
double mean_sq_norm(int dim, std::span<const double> atoms) {
    const std::size_t n = atoms.size() / static_cast<std::size_t>(dim);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i)
        sq[i] = norm_sq(atoms.subspan(i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)));
    return pairwise_sum(sq) / static_cast<double>(n);
}

}  // namespace

void MeasureSummary::compute(int dim, std::span<const double> atoms) {
    const std::size_t n = atoms.size() / static_cast<std::size_t>(dim);
    mean.assign(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> coord(n);
    for (int c = 0; c < dim; ++c) {
        for (std::size_t i = 0; i < n; ++i) coord[i] = atoms[i * static_cast<std::size_t>(dim) + c];
        mean[static_cast<std::size_t>(c)] = pairwise_sum(coord) / static_cast<double>(n);
    }
    second_moment = mean_sq_norm(dim, atoms);
    w2_to_dirac0 = std::sqrt(second_moment);
}

double w2_to_dirac0(const EmpiricalMeasure& mu) {
    return std::sqrt(mean_sq_norm(mu.dim, mu.atoms));
}

double w2_1d_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.dim != 1 || nu.dim != 1 || mu.size() != nu.size())
        throw std::invalid_argument("w2_1d_exact: unsupported shape (needs d=1 and equal atom counts)");
    std::vector<double> a = mu.atoms;
    std::vector<double> b = nu.atoms;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> sq(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq[i] = d * d;
    }
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(a.size()));
}

double w2_paired_bound(std::span<const double> x, std::span<const double> y, int dim) {
    if (x.size() != y.size() || x.size() % static_cast<std::size_t>(dim) != 0)
        throw std::invalid_argument("w2_paired_bound: shape mismatch");
    const std::size_t n = x.size() / static_cast<std::size_t>(dim);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int c = 0; c < dim; ++c) {
            const double d = x[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] -
                             y[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
            s += d * d;
        }
        sq[i] = s;
    }
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(n));
}

double w2_paired_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.dim != nu.dim) throw std::invalid_argument("w2_paired_bound: shape mismatch");
    return w2_paired_bound(mu.atoms, nu.atoms, mu.dim);
}

double w2_small_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int cap) {
    if (mu.dim != nu.dim || mu.size() != nu.size())
        throw std::invalid_argument("w2_small_exact: unsupported shape");
    const std::size_t n = mu.size();
    if (n > static_cast<std::size_t>(cap)) throw std::invalid_argument("w2_small_exact: oracle size exceeded");

    // Pairwise squared costs, then exhaustive search over assignments.
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (int c = 0; c < mu.dim; ++c) {
                const double d = mu.atom(i)[static_cast<std::size_t>(c)] - nu.atom(j)[static_cast<std::size_t>(c)];
                s += d * d;
            }
            cost[i * n + j] = s;
        }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n && s < best; ++i) s += cost[i * n + perm[i]];
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best / static_cast<double>(n));
}

double moment(const EmpiricalMeasure& mu, double p) {
    if (p == 2.0) return mean_sq_norm(mu.dim, mu.atoms);
    const std::size_t n = mu.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::pow(norm(mu.atom(i)), p);
    return pairwise_sum(v) / static_cast<double>(n);
}

}  // namespace mkv

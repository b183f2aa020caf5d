#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mkv {

// Uniformly weighted atomic measure: n atoms in R^dim, flat row-major storage.
struct EmpiricalMeasure {
    int dim = 1;
    std::vector<double> atoms;  // size() == n_atoms * dim

    EmpiricalMeasure() = default;
    EmpiricalMeasure(int d, std::vector<double> a) : dim(d), atoms(std::move(a)) {
        if (dim < 1) throw std::invalid_argument("EmpiricalMeasure: dim must be >= 1");
        if (atoms.empty() || atoms.size() % static_cast<std::size_t>(dim) != 0)
            throw std::invalid_argument("EmpiricalMeasure: atom storage not a multiple of dim");
    }
    static EmpiricalMeasure scalar(std::vector<double> a) { return EmpiricalMeasure(1, std::move(a)); }

    std::size_t size() const { return atoms.size() / static_cast<std::size_t>(dim); }
    std::span<const double> atom(std::size_t i) const {
        return std::span<const double>(atoms).subspan(i * static_cast<std::size_t>(dim),
                                                      static_cast<std::size_t>(dim));
    }
};

// Read-only snapshot handed to coefficient maps: summary statistics plus a
// handle to the full atom list. Valid for one time step only.
struct MeasureView {
    int dim = 1;
    std::size_t n_atoms = 0;
    const double* atoms = nullptr;  // n_atoms * dim, row-major
    const double* mean = nullptr;   // dim entries
    double second_moment = 0.0;     // (1/n) sum |x_i|^2
    double w2_to_dirac0 = 0.0;      // sqrt(second_moment)

    std::span<const double> mean_span() const { return {mean, static_cast<std::size_t>(dim)}; }
    std::span<const double> atom(std::size_t i) const {
        return {atoms + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
};

// Owned summary backing a MeasureView.
struct MeasureSummary {
    std::vector<double> mean;
    double second_moment = 0.0;
    double w2_to_dirac0 = 0.0;

    void compute(int dim, std::span<const double> atoms);
    MeasureView view(int dim, std::span<const double> atoms) const {
        MeasureView v;
        v.dim = dim;
        v.n_atoms = atoms.size() / static_cast<std::size_t>(dim);
        v.atoms = atoms.data();
        v.mean = mean.data();
        v.second_moment = second_moment;
        v.w2_to_dirac0 = w2_to_dirac0;
        return v;
    }
};

// sqrt((1/n) sum |x_i|^2): the exact W2 distance to the Dirac mass at 0.
double w2_to_dirac0(const EmpiricalMeasure& mu);

// Exact W2 between equal-size 1-d empirical measures (sort and pair by rank).
double w2_1d_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// sqrt((1/n) sum |x_i - y_i|^2): upper bound on W2 for index-coupled clouds.
double w2_paired_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);
double w2_paired_bound(std::span<const double> x, std::span<const double> y, int dim);

// Exact W2 via minimum-cost assignment over all pairings; brute-force oracle
// for small n (n! search, capped).
double w2_small_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int cap = 10);

// (1/n) sum |x_i|^p.
double moment(const EmpiricalMeasure& mu, double p);

}  // namespace mkv

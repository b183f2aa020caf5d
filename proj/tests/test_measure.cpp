#include <doctest.h>

#include <cmath>
#include <random>

#include "mkv/measure.hpp"
#include "mkv/numeric.hpp"

using namespace mkv;

namespace {

EmpiricalMeasure random_measure_1d(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<double> atoms(n);
    for (auto& a : atoms) a = u(rng);
    return EmpiricalMeasure::scalar(std::move(atoms));
}

}  // namespace

TEST_CASE("w2_to_dirac0 known values") {
    CHECK(w2_to_dirac0(EmpiricalMeasure::scalar({1, 2, 3})) == doctest::Approx(std::sqrt(14.0 / 3.0)).epsilon(1e-12));
    CHECK(w2_to_dirac0(EmpiricalMeasure::scalar({0, 0, 0, 0})) == 0.0);
    CHECK(w2_to_dirac0(EmpiricalMeasure(2, {3, 4})) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("w2_1d_exact known values and shape errors") {
    CHECK(w2_1d_exact(EmpiricalMeasure::scalar({0, 2}), EmpiricalMeasure::scalar({1, 3})) ==
          doctest::Approx(1.0).epsilon(1e-12));
    const auto mu = EmpiricalMeasure::scalar({0.3, -1.5, 2.0});
    CHECK(w2_1d_exact(mu, mu) == 0.0);
    CHECK(w2_1d_exact(EmpiricalMeasure::scalar({0}), EmpiricalMeasure::scalar({5})) == doctest::Approx(5.0));
    CHECK_THROWS_AS(w2_1d_exact(EmpiricalMeasure::scalar({0, 1}), EmpiricalMeasure::scalar({0})),
                    std::invalid_argument);
    CHECK_THROWS_AS(w2_1d_exact(EmpiricalMeasure(2, {0, 1}), EmpiricalMeasure(2, {0, 1})),
                    std::invalid_argument);
}

TEST_CASE("w2_paired_bound known values") {
    const std::vector<double> x = {0, 0}, y = {3, 4};
    CHECK(w2_paired_bound(x, y, 1) == doctest::Approx(std::sqrt(25.0 / 2.0)).epsilon(1e-12));
    CHECK(w2_paired_bound(x, x, 1) == 0.0);
    CHECK(w2_paired_bound(std::vector<double>{1}, std::vector<double>{4}, 1) == doctest::Approx(3.0));
    CHECK_THROWS_AS(w2_paired_bound(std::vector<double>{1, 2}, std::vector<double>{1}, 1),
                    std::invalid_argument);
}

TEST_CASE("w2_small_exact known values") {
    CHECK(w2_small_exact(EmpiricalMeasure::scalar({0, 2}), EmpiricalMeasure::scalar({1, 3})) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // Permutation invariance.
    const auto mu = EmpiricalMeasure::scalar({0.5, -2.0, 1.25, 3.0});
    const auto perm = EmpiricalMeasure::scalar({3.0, 0.5, -2.0, 1.25});
    CHECK(w2_small_exact(mu, perm) == 0.0);
    // Both 2-matchings in this d=2 pair cost (0+2)/2 and (1+1)/2; W2 = 1.
    CHECK(w2_small_exact(EmpiricalMeasure(2, {0, 0, 1, 0}), EmpiricalMeasure(2, {0, 0, 0, 1})) ==
          doctest::Approx(1.0).epsilon(1e-12));
    std::mt19937_64 rng(11);
    const auto big_a = random_measure_1d(rng, 12);
    const auto big_b = random_measure_1d(rng, 12);
    CHECK_THROWS_AS(w2_small_exact(big_a, big_b), std::invalid_argument);
}

TEST_CASE("moment known values") {
    CHECK(moment(EmpiricalMeasure::scalar({1, 2, 3}), 2.0) == doctest::Approx(14.0 / 3.0).epsilon(1e-12));
    CHECK(moment(EmpiricalMeasure::scalar({0, 0}), 7.5) == 0.0);
    CHECK(moment(EmpiricalMeasure::scalar({2}), 3.0) == doctest::Approx(8.0));
}

TEST_CASE("oracle equivalence: 1-d rank pairing matches assignment search") {
    std::mt19937_64 rng(20240817);
    std::uniform_int_distribution<std::size_t> size(1, 8);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = size(rng);
        const auto mu = random_measure_1d(rng, n);
        const auto nu = random_measure_1d(rng, n);
        CHECK(std::abs(w2_1d_exact(mu, nu) - w2_small_exact(mu, nu)) <= 1e-10);
    }
}

TEST_CASE("bound dominance: exact W2 never exceeds the paired coupling") {
    std::mt19937_64 rng(7151);
    std::uniform_int_distribution<std::size_t> size(1, 8);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = size(rng);
        const auto mu = random_measure_1d(rng, n);
        const auto nu = random_measure_1d(rng, n);
        CHECK(w2_small_exact(mu, nu) <= w2_paired_bound(mu, nu) + 1e-10);
    }
}

TEST_CASE("triangle inequality on the assignment oracle") {
    std::mt19937_64 rng(99021);
    std::uniform_int_distribution<std::size_t> size(1, 6);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = size(rng);
        const auto a = random_measure_1d(rng, n);
        const auto b = random_measure_1d(rng, n);
        const auto c = random_measure_1d(rng, n);
        CHECK(w2_small_exact(a, c) <= w2_small_exact(a, b) + w2_small_exact(b, c) + 1e-9);
    }
}

TEST_CASE("w2_to_dirac0 squared equals the second moment, same summation order") {
    std::mt19937_64 rng(5);
    for (std::size_t n : {3ul, 17ul, 1024ul}) {
        const auto mu = random_measure_1d(rng, n);
        const double w = w2_to_dirac0(mu);
        CHECK(w * w == doctest::Approx(moment(mu, 2.0)).epsilon(1e-12));
    }
    // Large-measure cache coherence: one million atoms.
    std::vector<double> big(1000000);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& a : big) a = u(rng);
    const auto mu = EmpiricalMeasure::scalar(std::move(big));
    MeasureSummary summary;
    summary.compute(mu.dim, mu.atoms);
    CHECK(summary.w2_to_dirac0 * summary.w2_to_dirac0 ==
          doctest::Approx(summary.second_moment).epsilon(1e-12));
    CHECK(summary.second_moment == doctest::Approx(moment(mu, 2.0)).epsilon(1e-12));
}

TEST_CASE("measure invariants are enforced") {
    CHECK_THROWS_AS(EmpiricalMeasure(0, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalMeasure(2, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalMeasure::scalar({}), std::invalid_argument);
}

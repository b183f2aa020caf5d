#include <doctest.h>

#include <cmath>
#include <vector>

#include "mkv/model.hpp"
#include "mkv/noise.hpp"

using namespace mkv;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors from the published test suite of the original
    // counter-based generator family.
    auto out = philox::block({0u, 0u, 0u, 0u}, {0u, 0u});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);

    out = philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);

    out = philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("stateless draws: replay determinism and stream separation") {
    CHECK(uniform_at(42, 7, 1234) == uniform_at(42, 7, 1234));
    CHECK(gauss_at(42, 7, 1234) == gauss_at(42, 7, 1234));
    CHECK(uniform_at(42, 7, 1234) != uniform_at(42, 8, 1234));
    CHECK(uniform_at(42, 7, 1234) != uniform_at(43, 7, 1234));
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const double u = uniform_at(1, 2, i);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        CHECK(std::isfinite(gauss_at(1, 2, i)));
    }
}

TEST_CASE("brownian_increment: contract and replay") {
    NoisePlan plan;
    plan.master_seed = 9;
    NoiseStream s(plan, plan.brownian_substream(0));
    double a[1], b[1];
    brownian_increment(s, 1.0, a);
    brownian_increment(s, 1.0, b);
    CHECK(a[0] != b[0]);  // cursor advanced

    NoiseStream s2(plan, plan.brownian_substream(0));
    double a2[1];
    brownian_increment(s2, 1.0, a2);
    CHECK(a[0] == a2[0]);  // same seed, same sequence

    CHECK_THROWS_AS(brownian_increment(s, 0.0, a), std::invalid_argument);
    CHECK_THROWS_AS(brownian_increment(s, -1.0, a), std::invalid_argument);
}

TEST_CASE("brownian_increment: moment checks at one million draws") {
    NoisePlan plan;
    plan.master_seed = 2024;
    NoiseStream s(plan, plan.brownian_substream(3));
    const std::size_t n = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    double v[1];
    for (std::size_t i = 0; i < n; ++i) {
        brownian_increment(s, 0.25, v);
        sum += v[0];
        sum_sq += v[0] * v[0];
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(0.25) / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(0.25).epsilon(0.01));
}

TEST_CASE("independence proxy: paired substreams are uncorrelated") {
    NoisePlan plan;
    plan.master_seed = 31337;
    NoiseStream s1(plan, plan.brownian_substream(1));
    NoiseStream s2(plan, plan.brownian_substream(2));
    const std::size_t n = 100000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = s1.gauss();
        const double y = s2.gauss();
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    const double nd = static_cast<double>(n);
    const double corr = (sxy / nd - sx / nd * sy / nd) /
                        std::sqrt((sxx / nd - sx / nd * sx / nd) * (syy / nd - sy / nd * sy / nd));
    CHECK(std::abs(corr) <= 0.01);
}

TEST_CASE("sample_jumps: trivial laws") {
    NoisePlan plan;
    plan.master_seed = 5;

    SUBCASE("zero intensity gives the empty batch") {
        NoiseStream s(plan, plan.jump_substream(0));
        const auto batch = sample_jumps(s, 0.0, 1.0, LevyMeasureSpec::none_law(1));
        CHECK(batch.count() == 0);
        CHECK(batch.compensator_drift[0] == 0.0);
    }
    SUBCASE("centered law has exactly zero compensator") {
        NoiseStream s(plan, plan.jump_substream(0));
        const auto batch = sample_jumps(s, 0.0, 2.0, LevyMeasureSpec::gaussian_law(1.5, 1.0));
        CHECK(batch.compensator_drift[0] == 0.0);
    }
    SUBCASE("event times are sorted and strictly inside the interval") {
        NoiseStream s(plan, plan.jump_substream(1));
        const auto batch = sample_jumps(s, 1.0, 3.0, LevyMeasureSpec::gaussian_law(4.0, 1.0));
        for (std::size_t e = 0; e < batch.count(); ++e) {
            CHECK(batch.times[e] > 1.0);
            CHECK(batch.times[e] <= 4.0);
            if (e > 0) CHECK(batch.times[e] > batch.times[e - 1]);
        }
    }
}

TEST_CASE("sample_jumps: Poisson count calibration") {
    NoisePlan plan;
    plan.master_seed = 777;
    NoiseStream s(plan, plan.jump_substream(0));
    const auto spec = LevyMeasureSpec::gaussian_law(2.0, 1.0);
    const std::size_t batches = 100000;
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) total += static_cast<double>(sample_jumps(s, 0.0, 1.0, spec).count());
    CHECK(total / static_cast<double>(batches) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("compensated jump sums are mean-zero martingales") {
    NoisePlan plan;
    plan.master_seed = 140;
    const double horizon = 1.0;
    const std::size_t paths = 10000;

    // Point mass: every jump is +0.5, the compensator removes the mean.
    const auto spec = LevyMeasureSpec::point_mass_law(2.0, {0.5});
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
        NoiseStream s(plan, plan.jump_substream(p));
        const auto batch = sample_jumps(s, 0.0, horizon, spec);
        double v[1];
        batch.sum_sizes(1, v);
        const double compensated = v[0] + batch.compensator_drift[0];
        sum += compensated;
        sum_sq += compensated * compensated;
    }
    const double mean = sum / paths;
    const double sd = std::sqrt(sum_sq / paths - mean * mean);
    CHECK(std::abs(mean) <= 4.0 * sd / std::sqrt(static_cast<double>(paths)));
}

TEST_CASE("lattice access: coarse increments are sums of fine increments") {
    const std::uint64_t seed = 99, sub = 3;
    const double dt_cell = 0.125;

    double whole[1], left[1], right[1];
    brownian_over_cells(seed, sub, 1, dt_cell, 0, 8, whole);
    brownian_over_cells(seed, sub, 1, dt_cell, 0, 5, left);
    brownian_over_cells(seed, sub, 1, dt_cell, 5, 8, right);
    CHECK(whole[0] == doctest::Approx(left[0] + right[0]).epsilon(1e-12));

    const auto spec = LevyMeasureSpec::gaussian_law(3.0, 0.7);
    double jw[1], jl[1], jr[1];
    const auto cw = jumps_over_cells(seed, sub, spec, dt_cell, 0, 8, jw);
    const auto cl = jumps_over_cells(seed, sub, spec, dt_cell, 0, 5, jl);
    const auto cr = jumps_over_cells(seed, sub, spec, dt_cell, 5, 8, jr);
    CHECK(cw.count == cl.count + cr.count);
    CHECK(jw[0] == doctest::Approx(jl[0] + jr[0]).epsilon(1e-12));
}

TEST_CASE("poisson inversion handles large means by chunking") {
    NoisePlan plan;
    plan.master_seed = 8;
    NoiseStream s(plan, 17);
    const std::size_t reps = 2000;
    double total = 0.0;
    for (std::size_t i = 0; i < reps; ++i) total += static_cast<double>(s.poisson(150.0));
    CHECK(total / static_cast<double>(reps) == doctest::Approx(150.0).epsilon(0.02));
}

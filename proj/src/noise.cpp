#include "mkv/noise.hpp"

#include <algorithm>
#include <cmath>

#include "mkv/model.hpp"
#include "mkv/numeric.hpp"

namespace mkv {

namespace philox {

namespace {

constexpr std::uint32_t kMult0 = 0xD2511F53u;
constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& x, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMult0) * x[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMult1) * x[2];
    x = {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k[1], static_cast<std::uint32_t>(p0)};
}

}  // namespace

std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        round_once(counter, key);
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return counter;
}

}  // namespace philox

namespace {

constexpr double kTwoPow53Inv = 0x1.0p-53;
constexpr double kTwoPow54Inv = 0x1.0p-54;
constexpr double kTwoPi = 6.283185307179586476925286766559;

inline std::uint64_t join(std::uint32_t hi, std::uint32_t lo) {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

// Two uniforms on (0,1) from one block.
inline std::pair<double, double> uniform_pair(std::uint64_t seed, std::uint64_t substream, std::uint64_t index) {
    const auto b = philox::block_at(seed, substream, index);
    const double u0 = static_cast<double>(join(b[0], b[1]) >> 11) * kTwoPow53Inv + kTwoPow54Inv;
    const double u1 = static_cast<double>(join(b[2], b[3]) >> 11) * kTwoPow53Inv + kTwoPow54Inv;
    return {u0, u1};
}

}  // namespace

double uniform_at(std::uint64_t seed, std::uint64_t substream, std::uint64_t index) {
    return uniform_pair(seed, substream, index).first;
}

double gauss_at(std::uint64_t seed, std::uint64_t substream, std::uint64_t index) {
    const auto [u0, u1] = uniform_pair(seed, substream, index);
    return std::sqrt(-2.0 * std::log(u0)) * std::cos(kTwoPi * u1);
}

void JumpBatch::sum_sizes(int dim, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t e = 0; e < count(); ++e)
        for (int c = 0; c < dim; ++c)
            out[static_cast<std::size_t>(c)] += sizes[e * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
}

std::uint64_t NoiseStream::poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    // Inversion by uniform products; chunked so exp(-mean) never underflows.
    std::uint64_t total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
        const double chunk = std::min(remaining, 64.0);
        remaining -= chunk;
        const double limit = std::exp(-chunk);
        double prod = 1.0;
        std::uint64_t k = 0;
        for (;;) {
            prod *= uniform();
            if (prod < limit) break;
            ++k;
        }
        total += k;
    }
    return total;
}

void brownian_increment(NoiseStream& stream, double dt, std::span<double> out) {
    if (!(dt > 0.0)) throw std::invalid_argument("brownian_increment: dt must be > 0");
    const double s = std::sqrt(dt);
    for (double& v : out) v = s * stream.gauss();
}

JumpBatch sample_jumps(NoiseStream& stream, double t, double dt, const LevyMeasureSpec& spec) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_jumps: dt must be > 0");
    spec.validate();
    JumpBatch batch;
    const int d = spec.dim;
    batch.compensator_drift.assign(static_cast<std::size_t>(d), 0.0);
    for (int c = 0; c < d; ++c)
        batch.compensator_drift[static_cast<std::size_t>(c)] = -dt * spec.mean_jump()[static_cast<std::size_t>(c)];
    if (spec.intensity <= 0.0) return batch;

    const std::uint64_t k = stream.poisson(spec.intensity * dt);
    batch.times.resize(k);
    for (std::uint64_t e = 0; e < k; ++e) batch.times[e] = t + dt * stream.uniform();
    std::sort(batch.times.begin(), batch.times.end());
    batch.sizes.resize(k * static_cast<std::size_t>(d));
    for (std::uint64_t e = 0; e < k; ++e)
        spec.sample_size(stream, std::span<double>(batch.sizes).subspan(e * static_cast<std::size_t>(d),
                                                                        static_cast<std::size_t>(d)));
    return batch;
}

void brownian_over_cells(std::uint64_t seed, std::uint64_t substream, int dim, double dt_cell,
                         std::uint64_t cell0, std::uint64_t cell1, std::span<double> out) {
    const double s = std::sqrt(dt_cell);
    for (int c = 0; c < dim; ++c) {
        double acc = 0.0;
        for (std::uint64_t cell = cell0; cell < cell1; ++cell)
            acc += gauss_at(seed, substream, cell * static_cast<std::uint64_t>(dim) + static_cast<std::uint64_t>(c));
        out[static_cast<std::size_t>(c)] = s * acc;
    }
}

JumpCellSums jumps_over_cells(std::uint64_t seed, std::uint64_t substream, const LevyMeasureSpec& spec,
                              double dt_cell, std::uint64_t cell0, std::uint64_t cell1,
                              std::span<double> size_sum) {
    std::fill(size_sum.begin(), size_sum.end(), 0.0);
    JumpCellSums sums;
    if (spec.intensity <= 0.0) return sums;
    const double cell_mean = spec.intensity * dt_cell;
    if (!(cell_mean <= 256.0))
        throw std::invalid_argument("jumps_over_cells: intensity*dt_cell too large for the per-cell draw window");
    const double limit = std::exp(-cell_mean);
    const int d = spec.dim;
    const std::uint64_t max_events = 2048 / static_cast<std::uint64_t>(d + 1);
    std::vector<double> one_size(static_cast<std::size_t>(d));

    for (std::uint64_t cell = cell0; cell < cell1; ++cell) {
        const std::uint64_t base = cell << 12;  // 4096 indices per cell
        // Poisson count by inversion, uniforms drawn from the cell's window.
        double prod = 1.0;
        std::uint64_t k = 0;
        std::uint64_t draw = 0;
        for (;;) {
            prod *= uniform_at(seed, substream, base + draw++);
            if (prod < limit) break;
            ++k;
            if (draw >= 2048) throw std::runtime_error("jumps_over_cells: per-cell draw window exhausted");
        }
        sums.count += k;
        // Payload indices: event e uses slot base+2048+e*(d+1) for the time
        // jitter (kept for reproducibility of the event-level API) and the
        // following d slots for size coordinates.
        if (k > max_events) throw std::runtime_error("jumps_over_cells: per-cell event window exhausted");
        NoiseStream size_stream;
        size_stream.seed = seed;
        size_stream.substream = substream;
        for (std::uint64_t e = 0; e < k; ++e) {
            size_stream.cursor = base + 2048 + e * static_cast<std::uint64_t>(d + 1) + 1;
            spec.sample_size(size_stream, one_size);
            for (int c = 0; c < d; ++c)
                size_sum[static_cast<std::size_t>(c)] += one_size[static_cast<std::size_t>(c)];
        }
    }
    return sums;
}

}  // namespace mkv

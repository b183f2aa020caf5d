#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mkv {

struct LevyMeasureSpec;  // model.hpp

// ---------------------------------------------------------------------------
// Counter-based generator (Philox4x32-10). Every variate is a pure function
// of (master seed, substream id, counter), so streams can be consumed from
// any thread in any order with replayable results.
// ---------------------------------------------------------------------------

namespace philox {

std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

inline std::array<std::uint32_t, 4> block_at(std::uint64_t seed, std::uint64_t substream, std::uint64_t index) {
    return block({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                  static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)},
                 {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

}  // namespace philox

// Uniform on (0,1), strictly away from both endpoints.
double uniform_at(std::uint64_t seed, std::uint64_t substream, std::uint64_t index);

// Standard Gaussian (Box-Muller, cosine branch; one Philox block per draw).
double gauss_at(std::uint64_t seed, std::uint64_t substream, std::uint64_t index);

// ---------------------------------------------------------------------------
// Stream plan: substream 0 is the shared common-Brownian driver; particle i
// owns one Brownian and one jump substream. `substream_offset` carves out a
// disjoint id block for auxiliary systems (e.g. a large reference run), and
// `particle_perm` relabels particle streams (used by exchangeability tests).
// ---------------------------------------------------------------------------
struct NoisePlan {
    std::uint64_t master_seed = 42;
    std::size_t n_particles = 1;
    int dim = 1;
    std::uint64_t substream_offset = 0;
    std::vector<std::uint64_t> particle_perm;  // empty = identity

    static constexpr std::uint64_t kCommonSubstream = 0;

    std::uint64_t particle_id(std::size_t i) const {
        return particle_perm.empty() ? static_cast<std::uint64_t>(i) : particle_perm[i];
    }
    std::uint64_t brownian_substream(std::size_t i) const { return substream_offset + 2 * particle_id(i) + 1; }
    std::uint64_t jump_substream(std::size_t i) const { return substream_offset + 2 * particle_id(i) + 2; }
};

// One particle's ordered batch of jump events inside (t, t+dt].
struct JumpBatch {
    std::vector<double> times;              // strictly increasing, in (t, t+dt]
    std::vector<double> sizes;              // times.size() * dim, row-major
    std::vector<double> compensator_drift;  // dim entries: -dt * integral z nu(dz)

    std::size_t count() const { return times.size(); }
    void sum_sizes(int dim, std::span<double> out) const;
};

// Sequential cursor view of one substream. Owned by one consumer at a time;
// distinct streams may be advanced concurrently.
struct NoiseStream {
    std::uint64_t seed = 0;
    std::uint64_t substream = 0;
    std::uint64_t cursor = 0;

    NoiseStream() = default;
    NoiseStream(const NoisePlan& plan, std::uint64_t sub)
        : seed(plan.master_seed), substream(sub) {}

    double uniform() { return uniform_at(seed, substream, cursor++); }
    double gauss() { return gauss_at(seed, substream, cursor++); }
    // Poisson count via inversion; consumes a variable number of uniforms.
    std::uint64_t poisson(double mean);
};

// Mean-zero Gaussian vector with covariance dt * I, one draw per coordinate.
void brownian_increment(NoiseStream& stream, double dt, std::span<double> out);

// Compound-Poisson batch for (t, t+dt]: count ~ Poisson(intensity*dt), times
// uniform and sorted, sizes i.i.d. from the jump law, plus the compensator.
JumpBatch sample_jumps(NoiseStream& stream, double t, double dt, const LevyMeasureSpec& spec);

// ---------------------------------------------------------------------------
// Lattice access: a run discretizes [0,T] into uniform cells of width dt_cell
// and every scheme step covers a whole number of cells. Cell k of a Brownian
// substream owns Gaussians at indices k*dim .. k*dim+dim-1; summing cells
// makes coarse increments exactly the sum of fine ones.
// ---------------------------------------------------------------------------

// Increment of the Brownian path over cells [cell0, cell1).
void brownian_over_cells(std::uint64_t seed, std::uint64_t substream, int dim, double dt_cell,
                         std::uint64_t cell0, std::uint64_t cell1, std::span<double> out);

// Jump cell layout: each cell owns a 4096-index window; Poisson inversion
// draws live at the front, event payloads (time jitter + size coords) at the
// back half. Returns the summed jump sizes over [cell0, cell1) and the event
// count. Event times are not materialized here; the Euler update only needs
// the interval sum.
struct JumpCellSums {
    std::uint64_t count = 0;
    // sizes summed into caller storage
};
JumpCellSums jumps_over_cells(std::uint64_t seed, std::uint64_t substream, const LevyMeasureSpec& spec,
                              double dt_cell, std::uint64_t cell0, std::uint64_t cell1, std::span<double> size_sum);

}  // namespace mkv

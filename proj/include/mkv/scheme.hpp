#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkv/measure.hpp"
#include "mkv/model.hpp"
#include "mkv/noise.hpp"

namespace mkv {

enum class SchemeKind { plain, tamed_adaptive };

SchemeKind scheme_from_name(const std::string& name);
std::string scheme_name(SchemeKind k);

struct SimConfig {
    std::size_t n_particles = 1000;
    double horizon = 1.0;           // T
    double base_step = 0.01;        // Delta, in (0,1)
    double h0 = 1.0;                // adaptive step scale
    SchemeKind scheme = SchemeKind::plain;
    std::size_t record_stride = 0;  // record every k-th base step; 0 = auto (~20 records)
    int substeps = 0;               // lattice cells per base step; 0 = auto (1 plain, 16 tamed)
    std::vector<double> x0 = {1.0};
    int workers = 1;

    void validate() const;
    std::size_t base_steps() const;      // number of uniform base steps covering [0,T]
    std::size_t effective_stride() const;
    int effective_substeps() const;
    int dim() const { return static_cast<int>(x0.size()); }
};

// Uniform micro-lattice the run steps on. Every step covers a whole number of
// cells, which is what makes fine/coarse noise coupling exact.
struct LatticeGrid {
    double horizon = 1.0;
    std::uint64_t cells = 1;              // total cells over [0,T]
    std::uint64_t cells_per_base = 1;     // cells spanned by one base step
    std::vector<std::uint64_t> record_cells;  // ascending, front()==0, back()==cells

    double cell_dt() const { return horizon / static_cast<double>(cells); }
    double time_at(std::uint64_t cell) const { return cell_dt() * static_cast<double>(cell); }
};

LatticeGrid make_grid(const SimConfig& cfg);
// Grids for a coupled family: one shared lattice (LCM of member lattices),
// identical record cells taken from `base`, per-member base-step widths.
std::vector<LatticeGrid> make_family_grid(const SimConfig& base, std::span<const SimConfig> members);

struct SystemState {
    double time = 0.0;
    std::size_t n = 0;
    int dim = 1;
    std::vector<double> positions;  // n*dim
    MeasureSummary summary;
    std::vector<double> scratch;    // step double-buffer

    static SystemState initial(const SimConfig& cfg);
    MeasureView measure() const { return summary.view(dim, positions); }
    void refresh_summary() { summary.compute(dim, positions); }
};

struct Trajectory {
    int dim = 1;
    std::size_t n_particles = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> positions;  // per record time, n*dim (may be empty if not kept)
    std::vector<MeasureSummary> summaries;
    std::vector<double> common_path;             // cumulative common-Brownian value, records*dim

    std::size_t record_count() const { return times.size(); }
};

struct ExplosionError : std::runtime_error {
    std::size_t particle;
    double time;
    ExplosionError(std::size_t i, double t)
        : std::runtime_error("explosion detected: particle " + std::to_string(i) + " at t=" + std::to_string(t)),
          particle(i), time(t) {}
};

// Any non-finite coordinate, or a norm beyond this, counts as an explosion.
inline constexpr double kExplosionThreshold = 1e12;

// ---------------------------------------------------------------------------
// Taming. Both diffusion coefficients share one formula; the jump coefficient
// additionally sees the drift magnitude in its denominator.
// ---------------------------------------------------------------------------

// In-place: sig /= (1 + sqrt(delta)*|sig|_F*(1+|x|)).
void tame_diffusion(std::span<double> sig, std::span<const double> x, double delta);
// In-place: c /= (1 + sqrt(delta)*|c|_F*(1+|x|+|b|)).
void tame_jump_coef(std::span<double> c, std::span<const double> x, std::span<const double> drift, double delta);

// Adaptive time control h(x, mu) = h0 / ((1+|b|+|sigma|+|x|^ell)^2 + |c|^p0),
// minimized over particles, capped by the base step and the next record time.
double adaptive_step_size(const SystemState& state, const CoefficientModel& model, const SimConfig& cfg,
                          double next_record_time = std::numeric_limits<double>::infinity());

// ---------------------------------------------------------------------------
// One synchronous Euler step. Every particle reads the same measure snapshot
// (the live one, or `frozen_mu` when set), then positions update and the
// summary refreshes. The per-particle noise provider must be thread-safe;
// workers > 1 runs the particle loop under OpenMP with identical results.
// ---------------------------------------------------------------------------
using ParticleNoiseFn =
    std::function<void(std::size_t i, std::span<double> dw, std::span<double> jump_incr)>;

void em_step(SystemState& state, double dt, const CoefficientModel& model, std::span<const double> dw0,
             const ParticleNoiseFn& noise, SchemeKind mode, double taming_delta, int workers,
             const MeasureView* frozen_mu = nullptr);

// ---------------------------------------------------------------------------
// Frozen measure flow: time-indexed empirical measures, left lookup.
// ---------------------------------------------------------------------------
struct FrozenFlow {
    std::vector<double> times;
    std::vector<EmpiricalMeasure> measures;
    std::vector<MeasureSummary> summaries;

    static FrozenFlow dirac(std::vector<double> x0);
    void push(double t, EmpiricalMeasure m);
    std::size_t index_at(double t) const;
    MeasureView view_at(double t) const;
    bool covers() const { return !times.empty() && times.front() <= 0.0; }
};

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

struct EngineOptions {
    const FrozenFlow* flow = nullptr;  // frozen mode when set
    FrozenFlow* flow_out = nullptr;    // capture the live cloud at every step
    bool record_positions = true;
    const LatticeGrid* grid = nullptr;  // override (coupled families); default derives from cfg
};

Trajectory run_engine(const CoefficientModel& model, const SimConfig& cfg, const NoisePlan& plan,
                      const EngineOptions& opts);

Trajectory simulate_interacting(const CoefficientModel& model, const SimConfig& cfg, const NoisePlan& plan);
Trajectory simulate_frozen(const CoefficientModel& model, const SimConfig& cfg, const FrozenFlow& flow,
                           const NoisePlan& plan);

struct PicardResult {
    FrozenFlow flow;
    std::vector<double> distances;  // successive-flow distances, one per iteration
    bool converged = false;
};

// Fixed-point iteration over measure flows: start from the Dirac flow, repeat
// the frozen simulation under the same noise, feed the output cloud back in.
PicardResult picard_iterate(const CoefficientModel& model, const SimConfig& cfg, const NoisePlan& plan,
                            std::size_t max_iter, double tol);

// Runs every variant against one shared noise lattice (same substreams, same
// common path; coarse Brownian increments are sums of fine ones). Variants
// must agree on n_particles, horizon and x0.
std::vector<Trajectory> coupled_runs(const CoefficientModel& model, const SimConfig& base,
                                     const NoisePlan& plan, std::span<const SimConfig> variants);

}  // namespace mkv

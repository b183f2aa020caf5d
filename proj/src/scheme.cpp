#include "mkv/scheme.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "mkv/numeric.hpp"

namespace mkv {

SchemeKind scheme_from_name(const std::string& name) {
    if (name == "plain") return SchemeKind::plain;
    if (name == "tamed_adaptive") return SchemeKind::tamed_adaptive;
    throw std::invalid_argument("unknown scheme: " + name);
}

std::string scheme_name(SchemeKind k) {
    return k == SchemeKind::plain ? "plain" : "tamed_adaptive";
}

void SimConfig::validate() const {
    if (n_particles < 1) throw std::invalid_argument("config: n must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("config: t must be > 0");
    if (!(base_step > 0.0 && base_step < 1.0)) throw std::invalid_argument("config: delta must lie in (0,1)");
    if (!(h0 > 0.0)) throw std::invalid_argument("config: h0 must be > 0");
    if (x0.empty()) throw std::invalid_argument("config: x0 must have at least one coordinate");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (substeps < 0) throw std::invalid_argument("config: substeps must be >= 0");
}

std::size_t SimConfig::base_steps() const {
    return static_cast<std::size_t>(std::ceil(horizon / base_step - 1e-12));
}

std::size_t SimConfig::effective_stride() const {
    if (record_stride > 0) return record_stride;
    return std::max<std::size_t>(1, base_steps() / 20);
}

int SimConfig::effective_substeps() const {
    if (substeps > 0) return substeps;
    return scheme == SchemeKind::tamed_adaptive ? 16 : 1;
}

LatticeGrid make_grid(const SimConfig& cfg) {
    LatticeGrid g;
    g.horizon = cfg.horizon;
    const std::size_t nb = cfg.base_steps();
    const std::uint64_t chi = static_cast<std::uint64_t>(cfg.effective_substeps());
    g.cells_per_base = chi;
    g.cells = static_cast<std::uint64_t>(nb) * chi;
    const std::size_t stride = cfg.effective_stride();
    for (std::size_t b = 0; b < nb; b += stride) g.record_cells.push_back(static_cast<std::uint64_t>(b) * chi);
    if (g.record_cells.back() != g.cells) g.record_cells.push_back(g.cells);
    return g;
}

std::vector<LatticeGrid> make_family_grid(const SimConfig& base, std::span<const SimConfig> members) {
    // Shared lattice: LCM of the base and member lattices; records from `base`.
    const LatticeGrid base_grid = make_grid(base);
    std::uint64_t family_cells = base_grid.cells;
    for (const auto& m : members) {
        const std::uint64_t mc =
            static_cast<std::uint64_t>(m.base_steps()) * static_cast<std::uint64_t>(m.effective_substeps());
        family_cells = std::lcm(family_cells, mc);
        if (family_cells > (1ull << 40)) throw std::invalid_argument("coupled_runs: incompatible step lattices");
    }
    const std::uint64_t scale = family_cells / base_grid.cells;

    std::vector<LatticeGrid> grids;
    for (const auto& m : members) {
        LatticeGrid g;
        g.horizon = base.horizon;
        g.cells = family_cells;
        g.cells_per_base = family_cells / static_cast<std::uint64_t>(m.base_steps());
        for (std::uint64_t rc : base_grid.record_cells) g.record_cells.push_back(rc * scale);
        grids.push_back(std::move(g));
    }
    return grids;
}

SystemState SystemState::initial(const SimConfig& cfg) {
    SystemState s;
    s.time = 0.0;
    s.n = cfg.n_particles;
    s.dim = cfg.dim();
    s.positions.resize(s.n * static_cast<std::size_t>(s.dim));
    for (std::size_t i = 0; i < s.n; ++i)
        for (int c = 0; c < s.dim; ++c)
            s.positions[i * static_cast<std::size_t>(s.dim) + static_cast<std::size_t>(c)] =
                cfg.x0[static_cast<std::size_t>(c)];
    s.scratch.resize(s.positions.size());
    s.refresh_summary();
    return s;
}

// ---------------------------------------------------------------------------
// Taming and step control
// ---------------------------------------------------------------------------

void tame_diffusion(std::span<double> sig, std::span<const double> x, double delta) {
    const double denom = 1.0 + std::sqrt(delta) * frobenius_norm(sig) * (1.0 + norm(x));
    for (double& v : sig) v /= denom;
}

void tame_jump_coef(std::span<double> c, std::span<const double> x, std::span<const double> drift, double delta) {
    const double denom = 1.0 + std::sqrt(delta) * frobenius_norm(c) * (1.0 + norm(x) + norm(drift));
    for (double& v : c) v /= denom;
}

namespace {

// h(x, mu) for one particle given evaluated raw coefficients.
inline double time_control(double h0, double bn, double sn, double cn, double xn, double ell, int p0) {
    const double base = 1.0 + bn + sn + std::pow(xn, ell);
    return h0 / (base * base + std::pow(cn, static_cast<double>(p0)));
}

struct Workspace {
    std::vector<double> b, sig, sig0, cmat, dw, jump, xnew;
    void resize(int dim) {
        const auto d = static_cast<std::size_t>(dim);
        b.resize(d);
        sig.resize(d * d);
        sig0.resize(d * d);
        cmat.resize(d * d);
        dw.resize(d);
        jump.resize(d);
        xnew.resize(d);
    }
};

double min_time_control(const SystemState& state, const CoefficientModel& model, const SimConfig& cfg,
                        const MeasureView& mu) {
    const int d = state.dim;
    const auto& k = model.constants;
    double hmin = std::numeric_limits<double>::infinity();
    Workspace ws;
    ws.resize(d);
    for (std::size_t i = 0; i < state.n; ++i) {
        const std::span<const double> x(state.positions.data() + i * static_cast<std::size_t>(d),
                                        static_cast<std::size_t>(d));
        model.drift(state.time, x, mu, ws.b);
        model.diffusion(state.time, x, mu, ws.sig);
        model.jump_coef(state.time, x, mu, ws.cmat);
        hmin = std::min(hmin, time_control(cfg.h0, norm(ws.b), frobenius_norm(ws.sig), frobenius_norm(ws.cmat),
                                           norm(x), k.ell, k.p0));
    }
    return hmin;
}

}  // namespace

double adaptive_step_size(const SystemState& state, const CoefficientModel& model, const SimConfig& cfg,
                          double next_record_time) {
    const MeasureView mu = state.measure();
    double dt = std::min(cfg.base_step, min_time_control(state, model, cfg, mu));
    if (std::isfinite(next_record_time)) dt = std::min(dt, next_record_time - state.time);
    return dt;
}

// ---------------------------------------------------------------------------
// Euler step: serial reference and OpenMP kernel share one particle routine.
// ---------------------------------------------------------------------------

namespace {

struct StepContext {
    const CoefficientModel* model;
    const MeasureView* mu;
    double t, dt, taming_delta;
    SchemeKind mode;
    std::span<const double> dw0;
    const ParticleNoiseFn* noise;
    const double* pos_in;
    double* pos_out;
};

// Returns false on explosion.
inline bool update_particle(std::size_t i, const StepContext& ctx, Workspace& ws) {
    const auto& model = *ctx.model;
    const int d = model.dim;
    const auto dd = static_cast<std::size_t>(d);
    const std::span<const double> x(ctx.pos_in + i * dd, dd);

    model.drift(ctx.t, x, *ctx.mu, ws.b);
    model.diffusion(ctx.t, x, *ctx.mu, ws.sig);
    model.common_diffusion(ctx.t, x, *ctx.mu, ws.sig0);
    model.jump_coef(ctx.t, x, *ctx.mu, ws.cmat);
    if (ctx.mode == SchemeKind::tamed_adaptive) {
        tame_diffusion(ws.sig, x, ctx.taming_delta);
        tame_diffusion(ws.sig0, x, ctx.taming_delta);
        tame_jump_coef(ws.cmat, x, ws.b, ctx.taming_delta);
    }
    (*ctx.noise)(i, ws.dw, ws.jump);

    for (int c = 0; c < d; ++c) ws.xnew[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)];
    for (int r = 0; r < d; ++r) {
        double acc = ws.b[static_cast<std::size_t>(r)] * ctx.dt;
        for (int c = 0; c < d; ++c) {
            acc += ws.sig[static_cast<std::size_t>(r) * dd + static_cast<std::size_t>(c)] *
                   ws.dw[static_cast<std::size_t>(c)];
            acc += ws.sig0[static_cast<std::size_t>(r) * dd + static_cast<std::size_t>(c)] *
                   ctx.dw0[static_cast<std::size_t>(c)];
            acc += ws.cmat[static_cast<std::size_t>(r) * dd + static_cast<std::size_t>(c)] *
                   ws.jump[static_cast<std::size_t>(c)];
        }
        ws.xnew[static_cast<std::size_t>(r)] += acc;
    }

    double nrm_sq = 0.0;
    for (int c = 0; c < d; ++c) {
        const double v = ws.xnew[static_cast<std::size_t>(c)];
        if (!std::isfinite(v)) return false;
        nrm_sq += v * v;
        ctx.pos_out[i * dd + static_cast<std::size_t>(c)] = v;
    }
    return nrm_sq <= kExplosionThreshold * kExplosionThreshold;
}

}  // namespace

void em_step(SystemState& state, double dt, const CoefficientModel& model, std::span<const double> dw0,
             const ParticleNoiseFn& noise, SchemeKind mode, double taming_delta, int workers,
             const MeasureView* frozen_mu) {
    if (!(dt > 0.0)) throw std::invalid_argument("em_step: dt must be > 0");
    const MeasureView live = state.measure();
    const MeasureView& mu = frozen_mu ? *frozen_mu : live;

    StepContext ctx;
    ctx.model = &model;
    ctx.mu = &mu;
    ctx.t = state.time;
    ctx.dt = dt;
    ctx.taming_delta = taming_delta;
    ctx.mode = mode;
    ctx.dw0 = dw0;
    ctx.noise = &noise;
    ctx.pos_in = state.positions.data();
    ctx.pos_out = state.scratch.data();

    const std::size_t n = state.n;
    std::size_t exploded = n;  // n = none
    if (workers <= 1) {
        // Serial reference path.
        Workspace ws;
        ws.resize(state.dim);
        for (std::size_t i = 0; i < n; ++i)
            if (!update_particle(i, ctx, ws) && exploded == n) exploded = i;
    } else {
        std::vector<Workspace> ws(static_cast<std::size_t>(workers));
        for (auto& w : ws) w.resize(state.dim);
#pragma omp parallel for num_threads(workers) schedule(static) reduction(min : exploded)
        for (std::size_t i = 0; i < n; ++i) {
            auto& w = ws[static_cast<std::size_t>(omp_get_thread_num())];
            if (!update_particle(i, ctx, w)) exploded = std::min(exploded, i);
        }
    }
    if (exploded < n) throw ExplosionError(exploded, state.time + dt);

    state.positions.swap(state.scratch);
    state.time += dt;
    state.refresh_summary();
}

// ---------------------------------------------------------------------------
// Frozen flow
// ---------------------------------------------------------------------------

FrozenFlow FrozenFlow::dirac(std::vector<double> x0) {
    FrozenFlow f;
    f.push(0.0, EmpiricalMeasure(static_cast<int>(x0.size()), std::move(x0)));
    return f;
}

void FrozenFlow::push(double t, EmpiricalMeasure m) {
    if (!times.empty() && !(t > times.back())) throw std::invalid_argument("FrozenFlow: times must increase");
    MeasureSummary s;
    s.compute(m.dim, m.atoms);
    times.push_back(t);
    summaries.push_back(std::move(s));
    measures.push_back(std::move(m));
}

std::size_t FrozenFlow::index_at(double t) const {
    // Left lookup with a small guard against lattice-arithmetic jitter.
    auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
    if (it == times.begin()) throw std::invalid_argument("FrozenFlow: query before flow start");
    return static_cast<std::size_t>(it - times.begin()) - 1;
}

MeasureView FrozenFlow::view_at(double t) const {
    const std::size_t i = index_at(t);
    return summaries[i].view(measures[i].dim, measures[i].atoms);
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

Trajectory run_engine(const CoefficientModel& model, const SimConfig& cfg, const NoisePlan& plan,
                      const EngineOptions& opts) {
    cfg.validate();
    if (model.dim != cfg.dim()) throw std::invalid_argument("engine: model/x0 dimension mismatch");
    if (opts.flow && !opts.flow->covers()) throw std::invalid_argument("engine: flow does not cover [0,T]");

    const LatticeGrid grid = opts.grid ? *opts.grid : make_grid(cfg);
    const double dt_cell = grid.cell_dt();
    const int d = model.dim;
    const auto dd = static_cast<std::size_t>(d);
    const bool has_jumps = model.jump_law.intensity > 0.0;
    if (has_jumps) model.jump_law.validate();

    SystemState state = SystemState::initial(cfg);
    Trajectory traj;
    traj.dim = d;
    traj.n_particles = state.n;

    std::vector<double> cum_w0(dd, 0.0);
    auto record = [&](std::uint64_t cell) {
        traj.times.push_back(grid.time_at(cell));
        if (opts.record_positions) traj.positions.push_back(state.positions);
        traj.summaries.push_back(state.summary);
        traj.common_path.insert(traj.common_path.end(), cum_w0.begin(), cum_w0.end());
    };
    auto capture = [&](double t) {
        if (opts.flow_out) opts.flow_out->push(t, EmpiricalMeasure(d, state.positions));
    };

    std::uint64_t cur = 0;
    std::size_t next_rec = 0;
    record(0);
    ++next_rec;
    // t=0 cloud seeds the captured flow through the Dirac start instead; the
    // flow consumer only ever queries strictly positive left endpoints.

    std::vector<double> dw0(dd);
    std::vector<double> mean_jump_step(dd);

    while (cur < grid.cells) {
        const std::uint64_t rec_cell = grid.record_cells[next_rec];
        // Step extent in cells.
        std::uint64_t jcells;
        if (cfg.scheme == SchemeKind::plain) {
            jcells = std::min(grid.cells_per_base, rec_cell - cur);
        } else {
            const MeasureView mu_for_h = opts.flow ? opts.flow->view_at(state.time) : state.measure();
            const double dt_cont = std::min(cfg.base_step, min_time_control(state, model, cfg, mu_for_h));
            const auto cells = static_cast<std::uint64_t>(std::floor(dt_cont / dt_cell + 1e-12));
            jcells = std::clamp<std::uint64_t>(cells, 1, grid.cells_per_base);
            jcells = std::min(jcells, rec_cell - cur);
        }
        const double dt = dt_cell * static_cast<double>(jcells);
        const std::uint64_t cell_end = cur + jcells;

        brownian_over_cells(plan.master_seed, NoisePlan::kCommonSubstream, d, dt_cell, cur, cell_end, dw0);
        const MeasureView frozen = opts.flow ? opts.flow->view_at(state.time) : MeasureView{};

        ParticleNoiseFn noise = [&](std::size_t i, std::span<double> dw, std::span<double> jump) {
            brownian_over_cells(plan.master_seed, plan.brownian_substream(i), d, dt_cell, cur, cell_end, dw);
            if (has_jumps) {
                jumps_over_cells(plan.master_seed, plan.jump_substream(i), model.jump_law, dt_cell, cur,
                                 cell_end, jump);
                for (int c = 0; c < d; ++c)
                    jump[static_cast<std::size_t>(c)] -=
                        dt * model.jump_law.mean_jump()[static_cast<std::size_t>(c)];
            } else {
                std::fill(jump.begin(), jump.end(), 0.0);
            }
        };

        em_step(state, dt, model, dw0, noise, cfg.scheme, cfg.base_step, cfg.workers,
                opts.flow ? &frozen : nullptr);
        // Keep recorded times exactly on the lattice.
        state.time = grid.time_at(cell_end);
        for (std::size_t c = 0; c < dd; ++c) cum_w0[c] += dw0[c];

        cur = cell_end;
        capture(state.time);
        if (cur == rec_cell) {
            record(cur);
            ++next_rec;
        }
    }
    return traj;
}

Trajectory simulate_interacting(const CoefficientModel& model, const SimConfig& cfg, const NoisePlan& plan) {
    EngineOptions opts;
    return run_engine(model, cfg, plan, opts);
}

Trajectory simulate_frozen(const CoefficientModel& model, const SimConfig& cfg, const FrozenFlow& flow,
                           const NoisePlan& plan) {
    EngineOptions opts;
    opts.flow = &flow;
    return run_engine(model, cfg, plan, opts);
}

PicardResult picard_iterate(const CoefficientModel& model, const SimConfig& cfg, const NoisePlan& plan,
                            std::size_t max_iter, double tol) {
    if (max_iter < 1) throw std::invalid_argument("picard_iterate: max_iter must be >= 1");
    cfg.validate();
    PicardResult result;
    FrozenFlow flow = FrozenFlow::dirac(cfg.x0);
    const LatticeGrid grid = make_grid(cfg);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        FrozenFlow next = FrozenFlow::dirac(cfg.x0);  // every flow starts from the initial cloud
        EngineOptions opts;
        opts.flow = &flow;
        opts.flow_out = &next;
        opts.record_positions = false;
        opts.grid = &grid;
        (void)run_engine(model, cfg, plan, opts);

        // Distance between successive flows: paired-coupling bound on the
        // shared-noise clouds over the record grid.
        double dist = 0.0;
        for (std::uint64_t rc : grid.record_cells) {
            const double t = grid.time_at(rc);
            const EmpiricalMeasure& a = flow.measures[flow.index_at(t)];
            const EmpiricalMeasure& b = next.measures[next.index_at(t)];
            double w;
            if (a.size() == b.size()) {
                w = w2_paired_bound(a, b);
            } else {
                // Dirac start: broadcast the single atom across the cloud.
                const EmpiricalMeasure& small = a.size() == 1 ? a : b;
                const EmpiricalMeasure& big = a.size() == 1 ? b : a;
                std::vector<double> sq(big.size());
                for (std::size_t i = 0; i < big.size(); ++i) {
                    double s = 0.0;
                    for (int c = 0; c < big.dim; ++c) {
                        const double dxc = big.atom(i)[static_cast<std::size_t>(c)] -
                                           small.atom(0)[static_cast<std::size_t>(c)];
                        s += dxc * dxc;
                    }
                    sq[i] = s;
                }
                w = std::sqrt(pairwise_sum(sq) / static_cast<double>(big.size()));
            }
            dist = std::max(dist, w);
        }
        result.distances.push_back(dist);
        flow = std::move(next);
        if (dist < tol) {
            result.converged = true;
            break;
        }
    }
    result.flow = std::move(flow);
    return result;
}

std::vector<Trajectory> coupled_runs(const CoefficientModel& model, const SimConfig& base,
                                     const NoisePlan& plan, std::span<const SimConfig> variants) {
    if (variants.empty()) throw std::invalid_argument("coupled_runs: no variants");
    for (const auto& v : variants) {
        if (v.n_particles != base.n_particles || v.x0 != base.x0 || v.horizon != base.horizon)
            throw std::invalid_argument("coupled_runs: variants must share n, x0 and horizon");
    }
    const std::vector<LatticeGrid> grids = make_family_grid(base, variants);
    std::vector<Trajectory> out;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        EngineOptions opts;
        opts.grid = &grids[v];
        out.push_back(run_engine(model, variants[v], plan, opts));
    }
    return out;
}

}  // namespace mkv

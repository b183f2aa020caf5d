#include "mkv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mkv/numeric.hpp"

namespace mkv {

RateFit fit_loglog(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw std::invalid_argument("fit_loglog: need at least 2 points");
    RateFit fit;
    fit.points.assign(points.begin(), points.end());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [px, py] : points) {
        if (!(px > 0.0) || !(py > 0.0)) throw std::invalid_argument("fit_loglog: log of nonpositive value");
        const double x = std::log(px), y = std::log(py);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double n = static_cast<double>(points.size());
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw std::invalid_argument("fit_loglog: degenerate abscissae");
    fit.slope = (n * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (const auto& [px, py] : points) {
        const double r = std::log(py) - (fit.intercept + fit.slope * std::log(px));
        ss_res += r * r;
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

double chaos_phi(std::size_t n, int dim) {
    if (n < 2 || dim < 1) throw std::invalid_argument("chaos_phi: need n >= 2, dim >= 1");
    const double nd = static_cast<double>(n);
    if (dim < 4) return 1.0 / std::sqrt(nd);
    if (dim == 4) return std::log(nd) / std::sqrt(nd);
    return std::pow(nd, -2.0 / static_cast<double>(dim));
}

// ---------------------------------------------------------------------------
// Model-1 oracle
// ---------------------------------------------------------------------------

double Model1Params::drift_at(double t) const {
    double v = u_schedule.front().second;
    for (const auto& [s, u] : u_schedule) {
        if (s <= t) v = u;
        else break;
    }
    return v;
}

double Model1Params::drift_integral(double t) const {
    double total = 0.0;
    for (std::size_t k = 0; k < u_schedule.size(); ++k) {
        const double start = u_schedule[k].first;
        if (start >= t) break;
        const double end = (k + 1 < u_schedule.size()) ? std::min(u_schedule[k + 1].first, t) : t;
        if (end > start) total += u_schedule[k].second * (end - start);
    }
    return total;
}

Model1Params model1_params_from(const CoefficientModel& model) {
    if (model.name != "model1_lq")
        throw std::invalid_argument("model1_params_from: oracle applies to model1_lq only");
    const auto& p = model.resolved_params;
    Model1Params out;
    out.x0 = p.at("x0");
    out.theta = p.at("theta");
    out.sigma = p.at("sigma");
    out.gamma0_scale = p.at("gamma0_scale");
    const double intensity = p.at("jump_intensity");
    const double z_sq = model.jump_law.size_abs_moment(2);
    out.jump_sq_moment = out.gamma0_scale * out.gamma0_scale * intensity * z_sq;
    out.u_schedule = model.drift_schedule.empty()
                         ? std::vector<std::pair<double, double>>{{0.0, 0.0}}
                         : model.drift_schedule;
    return out;
}

OracleSeries model1_oracle(const Model1Params& params, std::span<const double> times,
                           std::span<const double> common_path) {
    if (times.size() != common_path.size() || times.empty())
        throw std::invalid_argument("model1_oracle: grid/path size mismatch");
    OracleSeries s;
    s.times.assign(times.begin(), times.end());
    s.common_path.assign(common_path.begin(), common_path.end());
    s.mean.resize(times.size());
    s.variance.resize(times.size());
    const double rate = params.sigma * params.sigma + params.jump_sq_moment;
    for (std::size_t k = 0; k < times.size(); ++k)
        s.mean[k] = params.x0 + params.drift_integral(times[k]) + params.theta * common_path[k];
    s.variance[0] = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double dt = times[k] - times[k - 1];
        const double trap = 0.5 * (s.mean[k - 1] * s.mean[k - 1] + s.mean[k] * s.mean[k]);
        s.variance[k] = s.variance[k - 1] + rate * trap * dt;
    }
    return s;
}

FrozenFlow oracle_flow(const OracleSeries& series) {
    FrozenFlow flow;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        const double sd = std::sqrt(std::max(0.0, series.variance[k]));
        EmpiricalMeasure m(1, {series.mean[k] - sd, series.mean[k] + sd});
        if (k == 0 && series.times[0] == 0.0 && sd == 0.0)
            m = EmpiricalMeasure(1, {series.mean[0]});
        flow.push(series.times[k], std::move(m));
    }
    return flow;
}

// ---------------------------------------------------------------------------
// Moment curve
// ---------------------------------------------------------------------------

namespace {

double bound_shape(double t, double p, const ModelConstants& k) {
    const double gamma = k.gamma();
    if (gamma != 0.0) return 1.0 + std::exp(gamma * p * t);
    if (p == 2.0 || k.gamma2 > 0.0) return std::pow(1.0 + t, p / 2.0);
    return std::pow(1.0 + t, p);
}

double cross_particle_abs_moment(const Trajectory& traj, std::size_t rec, double p) {
    const auto& pos = traj.positions.at(rec);
    const std::size_t n = traj.n_particles;
    const auto dd = static_cast<std::size_t>(traj.dim);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::pow(norm(std::span<const double>(pos).subspan(i * dd, dd)), p);
    return pairwise_sum(v) / static_cast<double>(n);
}

}  // namespace

std::vector<MomentPoint> moment_curve(const Trajectory& traj, double p, const ModelConstants& constants) {
    if (traj.positions.size() != traj.record_count())
        throw std::invalid_argument("moment_curve: trajectory was recorded without positions");
    std::vector<MomentPoint> out;
    out.reserve(traj.record_count());
    for (std::size_t r = 0; r < traj.record_count(); ++r)
        out.push_back({traj.times[r], cross_particle_abs_moment(traj, r, p), bound_shape(traj.times[r], p, constants)});
    return out;
}

// ---------------------------------------------------------------------------
// Propagation-of-chaos experiment
// ---------------------------------------------------------------------------

namespace {

// Max over the record grid of the mean squared paired difference.
double max_paired_mse(const Trajectory& a, const Trajectory& b) {
    if (a.record_count() != b.record_count()) throw std::invalid_argument("paired mse: record grids differ");
    double worst = 0.0;
    const std::size_t n = a.n_particles;
    std::vector<double> sq(n);
    for (std::size_t r = 0; r < a.record_count(); ++r) {
        const auto& pa = a.positions[r];
        const auto& pb = b.positions[r];
        const auto dd = static_cast<std::size_t>(a.dim);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < dd; ++c) {
                const double diff = pa[i * dd + c] - pb[i * dd + c];
                s += diff * diff;
            }
            sq[i] = s;
        }
        worst = std::max(worst, pairwise_sum(sq) / static_cast<double>(n));
    }
    return worst;
}

struct MeanStderr {
    double mean = 0.0, std_error = 0.0;
};

MeanStderr summarize(std::span<const double> samples) {
    MeanStderr out;
    const double n = static_cast<double>(samples.size());
    for (double v : samples) out.mean += v;
    out.mean /= n;
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double v : samples) ss += (v - out.mean) * (v - out.mean);
        out.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

}  // namespace

ChaosResult chaos_experiment(const CoefficientModel& model, std::span<const std::size_t> n_list,
                             std::size_t n_ref, const SimConfig& cfg, const NoisePlan& plan,
                             std::size_t reps) {
    if (n_list.empty()) throw std::invalid_argument("chaos_experiment: empty N list");
    const std::size_t n_max = *std::max_element(n_list.begin(), n_list.end());
    if (n_ref < 10 * n_max)
        throw std::invalid_argument("chaos_experiment: n_ref must be at least 10x the largest N");
    reps = std::max<std::size_t>(1, reps);
    const bool use_oracle = model.name == "model1_lq";

    ChaosResult result;
    std::vector<std::vector<double>> mse_samples(n_list.size());

    for (std::size_t rep = 0; rep < reps; ++rep) {
        NoisePlan rep_plan = plan;
        rep_plan.master_seed = plan.master_seed + 0x9e3779b97f4a7c15ULL * rep;

        // Reference flow for this common path: dense in step time.
        FrozenFlow reference;
        if (use_oracle) {
            SimConfig probe = cfg;
            probe.n_particles = 1;
            const LatticeGrid grid = make_grid(probe);
            std::vector<double> times, w0;
            times.push_back(0.0);
            w0.push_back(0.0);
            double acc = 0.0;
            std::vector<double> incr(1);
            for (std::uint64_t cell = 0; cell < grid.cells; ++cell) {
                brownian_over_cells(rep_plan.master_seed, NoisePlan::kCommonSubstream, 1, grid.cell_dt(), cell,
                                    cell + 1, incr);
                acc += incr[0];
                times.push_back(grid.time_at(cell + 1));
                w0.push_back(acc);
            }
            reference = oracle_flow(model1_oracle(model1_params_from(model), times, w0));
        } else {
            SimConfig ref_cfg = cfg;
            ref_cfg.n_particles = n_ref;
            NoisePlan ref_plan = rep_plan;
            ref_plan.substream_offset = 1ull << 33;  // disjoint particle streams
            reference = FrozenFlow::dirac(cfg.x0);
            EngineOptions opts;
            opts.flow_out = &reference;
            opts.record_positions = false;
            (void)run_engine(model, ref_cfg, ref_plan, opts);
        }

        for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
            SimConfig run_cfg = cfg;
            run_cfg.n_particles = n_list[idx];
            const Trajectory inter = simulate_interacting(model, run_cfg, rep_plan);
            const Trajectory frozen = simulate_frozen(model, run_cfg, reference, rep_plan);
            mse_samples[idx].push_back(max_paired_mse(inter, frozen));
        }
    }

    std::vector<std::pair<double, double>> fit_points;
    bool all_zero = true;
    for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
        const MeanStderr stats = summarize(mse_samples[idx]);
        const double rms = std::sqrt(stats.mean);
        const double rms_err = stats.mean > 0.0 ? stats.std_error / (2.0 * rms) : 0.0;
        result.points.push_back({static_cast<double>(n_list[idx]), rms, rms_err});
        result.mse.push_back(stats.mean);
        if (stats.mean > 0.0) all_zero = false;
        fit_points.emplace_back(chaos_phi(n_list[idx], model.dim), rms);
    }
    if (all_zero) {
        result.fit.degenerate = true;
        result.fit.points = fit_points;
    } else {
        result.fit = fit_loglog(fit_points);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Strong-order experiment
// ---------------------------------------------------------------------------

OrderResult strong_order_experiment(const CoefficientModel& model, std::span<const double> delta_list,
                                    const SimConfig& cfg, const NoisePlan& plan, std::size_t reps,
                                    unsigned ref_divisor) {
    if (delta_list.size() < 2) throw std::invalid_argument("strong_order_experiment: need >= 2 step sizes");
    for (std::size_t k = 1; k < delta_list.size(); ++k)
        if (!(delta_list[k] < delta_list[k - 1]))
            throw std::invalid_argument("strong_order_experiment: delta list must be decreasing");
    if (ref_divisor < 4) throw std::invalid_argument("strong_order_experiment: reference must be at least 4x finer");
    reps = std::max<std::size_t>(1, reps);

    OrderResult result;
    result.reference_step = delta_list.back() / static_cast<double>(ref_divisor);

    SimConfig base = cfg;
    base.base_step = delta_list.front();

    std::vector<SimConfig> members;
    for (double d : delta_list) {
        SimConfig m = cfg;
        m.base_step = d;
        members.push_back(m);
    }
    SimConfig ref = cfg;
    ref.base_step = result.reference_step;
    members.push_back(ref);

    std::vector<std::vector<double>> mse_samples(delta_list.size());
    for (std::size_t rep = 0; rep < reps; ++rep) {
        NoisePlan rep_plan = plan;
        rep_plan.master_seed = plan.master_seed + 0x9e3779b97f4a7c15ULL * rep;
        const std::vector<Trajectory> trajs = coupled_runs(model, base, rep_plan, members);
        const Trajectory& reference = trajs.back();
        for (std::size_t k = 0; k < delta_list.size(); ++k)
            mse_samples[k].push_back(max_paired_mse(trajs[k], reference));
    }

    std::vector<std::pair<double, double>> fit_points;
    bool all_zero = true;
    for (std::size_t k = 0; k < delta_list.size(); ++k) {
        const MeanStderr stats = summarize(mse_samples[k]);
        result.points.push_back({delta_list[k], stats.mean, stats.std_error});
        if (stats.mean > 0.0) all_zero = false;
        fit_points.emplace_back(delta_list[k], stats.mean);
    }
    if (all_zero) {
        result.fit.degenerate = true;
        result.fit.points = fit_points;
    } else {
        result.fit = fit_loglog(fit_points);
    }
    return result;
}

}  // namespace mkv

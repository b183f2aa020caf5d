#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mkv/model.hpp"
#include "mkv/scheme.hpp"

namespace mkv {

// Least-squares line through (log parameter, log error).
struct RateFit {
    std::vector<std::pair<double, double>> points;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool degenerate = false;  // errors were identically zero; no fit performed
};

RateFit fit_loglog(std::span<const std::pair<double, double>> points);

// Empirical-measure W2 convergence rate: N^(-1/2) below dimension 4,
// N^(-1/2) ln N at 4, N^(-2/d) above.
double chaos_phi(std::size_t n, int dim);

// ---------------------------------------------------------------------------
// Analytic conditional-moment oracle for the LQ mean-field model: given one
// common-Brownian path on a grid, the conditional mean is exact and the
// conditional variance solves dv/dt = (sigma^2 + integral gamma0^2 nu) m_t^2,
// integrated by trapezoid on the grid.
// ---------------------------------------------------------------------------

struct Model1Params {
    double x0 = 0.0;
    double theta = 0.0;
    double sigma = 0.0;
    double gamma0_scale = 0.0;
    double jump_sq_moment = 0.0;  // integral gamma0(z)^2 nu(dz)
    std::vector<std::pair<double, double>> u_schedule = {{0.0, 0.0}};

    double drift_at(double t) const;
    double drift_integral(double t) const;  // integral of u over [0,t], exact
};

Model1Params model1_params_from(const CoefficientModel& model);

struct OracleSeries {
    std::vector<double> times;
    std::vector<double> mean;      // conditional mean path
    std::vector<double> variance;  // conditional variance path
    std::vector<double> common_path;
};

OracleSeries model1_oracle(const Model1Params& params, std::span<const double> times,
                           std::span<const double> common_path);

// Frozen flow synthesized from the oracle: two atoms per time matching the
// conditional mean and second moment exactly.
FrozenFlow oracle_flow(const OracleSeries& series);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct MomentPoint {
    double t = 0.0;
    double estimate = 0.0;     // cross-particle average of |X|^p
    double bound_shape = 0.0;  // matching growth shape for constant fitting
};

std::vector<MomentPoint> moment_curve(const Trajectory& traj, double p, const ModelConstants& constants);

struct ExperimentPoint {
    double parameter = 0.0;
    double error = 0.0;
    double std_error = 0.0;
};

struct ChaosResult {
    std::vector<ExperimentPoint> points;  // (N, rms paired error, stderr)
    std::vector<double> mse;              // max-over-grid mean squared paired error per N
    RateFit fit;                          // log rms error vs log phi(N)
};

// Couples each N-particle interacting system to the frozen system driven by a
// reference flow (analytic oracle for model1_lq, an n_ref run otherwise),
// sharing substreams and the common path. The reported error is the RMS
// paired error, whose log-log slope against phi(N) is the measured rate.
ChaosResult chaos_experiment(const CoefficientModel& model, std::span<const std::size_t> n_list,
                             std::size_t n_ref, const SimConfig& cfg, const NoisePlan& plan,
                             std::size_t reps = 4);

struct OrderResult {
    std::vector<ExperimentPoint> points;  // (delta, max-over-grid MSE, stderr)
    RateFit fit;                          // log MSE vs log delta
    double reference_step = 0.0;
};

// Shared-noise refinement study: every step size in delta_list runs against
// the same lattice as a reference at min(delta)/ref_divisor.
OrderResult strong_order_experiment(const CoefficientModel& model, std::span<const double> delta_list,
                                    const SimConfig& cfg, const NoisePlan& plan, std::size_t reps = 2,
                                    unsigned ref_divisor = 32);

}  // namespace mkv

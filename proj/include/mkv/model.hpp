#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mkv/measure.hpp"
#include "mkv/noise.hpp"

namespace mkv {

// Structural constants declared alongside a model; the assumption checker
// evaluates the model against them.
struct ModelConstants {
    double L = 1.0;        // growth / polynomial-Lipschitz constant (> 0)
    double L1 = 0.0;       // one-sided Lipschitz, state part
    double L2 = 0.0;       // one-sided Lipschitz, measure part (>= 0)
    double L3 = 1.0;       // jump-coefficient growth (> 0)
    double Ltilde1 = 0.0;  // diffusion Lipschitz, state part
    double Ltilde2 = 0.0;  // diffusion Lipschitz, measure part (>= 0)
    double gamma1 = 0.0;   // dissipation, state part
    double gamma2 = 0.0;   // dissipation, measure part (>= 0)
    double eta = 0.0;      // dissipation offset (>= 0)
    double ell = 0.0;      // drift polynomial degree (>= 0)
    int p0 = 2;            // even moment order >= 2

    double gamma() const { return gamma1 + gamma2; }
    void validate() const;
};

// Finite-activity jump law: total intensity plus an i.i.d. jump-size
// distribution with analytic absolute moments where available.
struct LevyMeasureSpec {
    enum class JumpKind { none, gaussian, point_mass };

    double intensity = 0.0;  // total mass of the (truncated) Levy measure
    int dim = 1;
    JumpKind kind = JumpKind::none;
    double gaussian_sd = 1.0;           // per-coordinate sd, centered
    std::vector<double> point_value;    // point-mass location (dim entries)
    std::vector<double> mean_jump_vec;  // integral of z nu(dz), dim entries

    // Optional user sampler (fills one jump size) when no builtin kind fits.
    std::function<void(NoiseStream&, std::span<double>)> custom_sampler;
    // Optional analytic table for custom laws: k -> E|xi|^k.
    std::map<int, double> custom_abs_moments;

    static LevyMeasureSpec none_law(int dim = 1);
    static LevyMeasureSpec gaussian_law(double intensity, double sd, int dim = 1);
    static LevyMeasureSpec point_mass_law(double intensity, std::vector<double> value);

    bool has_analytic_moment(int k) const;
    // E|xi|^k of one jump size (not intensity-scaled).
    double size_abs_moment(int k) const;
    void sample_size(NoiseStream& stream, std::span<double> out) const;
    std::span<const double> mean_jump() const { return mean_jump_vec; }
    void validate() const;
};

struct LevyMomentEstimate {
    double value = 0.0;
    double std_error = 0.0;  // zero for analytic values
    bool analytic = true;
};

// integral |z|^k nu(dz) = intensity * E|xi|^k; analytic when the table knows
// k, otherwise a 1e6-draw Monte Carlo estimate with its standard error.
LevyMomentEstimate levy_abs_moment(const LevyMeasureSpec& spec, int k);

// integral |z| ((1 + L3|z|)^(p0-1) - 1) nu(dz), expanded binomially over the
// analytic moment table.
double levy_tail_functional(const LevyMeasureSpec& spec, double L3, int p0);

// Coefficient maps write into caller storage; x is dim-long, matrix outputs
// are dim x dim row-major. All maps may read the current time (autonomous
// models ignore it).
using DriftMap = std::function<void(double t, std::span<const double> x, const MeasureView&, std::span<double>)>;
using MatrixMap = std::function<void(double t, std::span<const double> x, const MeasureView&, std::span<double>)>;

struct CoefficientModel {
    int dim = 1;
    DriftMap drift;               // b
    MatrixMap diffusion;          // idiosyncratic, multiplies dW^i
    MatrixMap common_diffusion;   // multiplies the shared dW^0
    MatrixMap jump_coef;          // multiplies jump sizes z
    LevyMeasureSpec jump_law;
    ModelConstants constants;
    std::string name = "custom";
    std::map<std::string, double> resolved_params;          // builtin bookkeeping
    std::vector<std::pair<double, double>> drift_schedule;  // piecewise-constant u(t), optional
};

enum class BuiltinModel { model1_lq, ou_contractive, cubic_superlinear };

BuiltinModel builtin_model_from_name(const std::string& name);
std::string builtin_model_name(BuiltinModel m);

// Builds one of the shipped models from a flat parameter map. Unknown keys
// are rejected; missing required keys raise a configuration error naming the
// key. `u_schedule` (for model1_lq) is passed separately because it is the
// one non-scalar parameter.
CoefficientModel builtin_model(BuiltinModel which, const std::map<std::string, double>& params,
                               const std::vector<std::pair<double, double>>& u_schedule = {});

// ---------------------------------------------------------------------------
// Assumption checking: statistical falsification only. Samples states in a
// ball and small discrete measures, evaluates each declared inequality with
// the model's constants, and reports the first concrete witness found.
// ---------------------------------------------------------------------------

struct AssumptionWitness {
    std::vector<double> x, xbar;
    EmpiricalMeasure mu, mubar;
    double lhs = 0.0, rhs = 0.0;
};

struct AssumptionCheck {
    std::string id;  // "A1".."A7"
    bool holds = true;
    bool coefficient_nonfinite = false;
    std::optional<AssumptionWitness> witness;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_hold() const {
        for (const auto& c : checks)
            if (!c.holds) return false;
        return true;
    }
    const AssumptionCheck& operator[](const std::string& id) const;
};

AssumptionReport validate_assumptions(const CoefficientModel& model, std::size_t n_trials, double radius,
                                      double tol, std::uint64_t seed);

}  // namespace mkv

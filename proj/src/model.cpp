#include "mkv/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mkv/numeric.hpp"

namespace mkv {

void ModelConstants::validate() const {
    if (!(L > 0.0)) throw std::invalid_argument("ModelConstants: L must be > 0");
    if (!(L3 > 0.0)) throw std::invalid_argument("ModelConstants: L3 must be > 0");
    if (L2 < 0.0 || Ltilde2 < 0.0 || gamma2 < 0.0 || eta < 0.0 || ell < 0.0)
        throw std::invalid_argument("ModelConstants: L2, Ltilde2, gamma2, eta, ell must be >= 0");
    if (p0 < 2 || p0 % 2 != 0) throw std::invalid_argument("ModelConstants: p0 must be an even integer >= 2");
}

// ---------------------------------------------------------------------------
// Jump law
// ---------------------------------------------------------------------------

LevyMeasureSpec LevyMeasureSpec::none_law(int dim) {
    LevyMeasureSpec s;
    s.dim = dim;
    s.kind = JumpKind::none;
    s.intensity = 0.0;
    s.mean_jump_vec.assign(static_cast<std::size_t>(dim), 0.0);
    return s;
}

LevyMeasureSpec LevyMeasureSpec::gaussian_law(double intensity, double sd, int dim) {
    LevyMeasureSpec s;
    s.dim = dim;
    s.kind = JumpKind::gaussian;
    s.intensity = intensity;
    s.gaussian_sd = sd;
    s.mean_jump_vec.assign(static_cast<std::size_t>(dim), 0.0);  // centered
    return s;
}

LevyMeasureSpec LevyMeasureSpec::point_mass_law(double intensity, std::vector<double> value) {
    LevyMeasureSpec s;
    s.dim = static_cast<int>(value.size());
    s.kind = JumpKind::point_mass;
    s.intensity = intensity;
    s.point_value = value;
    s.mean_jump_vec.resize(value.size());
    for (std::size_t c = 0; c < value.size(); ++c) s.mean_jump_vec[c] = intensity * value[c];
    return s;
}

void LevyMeasureSpec::validate() const {
    if (intensity < 0.0 || !std::isfinite(intensity))
        throw std::invalid_argument("LevyMeasureSpec: intensity must be finite and >= 0");
    if (dim < 1) throw std::invalid_argument("LevyMeasureSpec: dim must be >= 1");
    if (mean_jump_vec.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("LevyMeasureSpec: mean_jump has wrong dimension");
}

bool LevyMeasureSpec::has_analytic_moment(int k) const {
    switch (kind) {
        case JumpKind::none:
        case JumpKind::gaussian:
        case JumpKind::point_mass:
            return true;
        default:
            return custom_abs_moments.count(k) > 0;
    }
}

double LevyMeasureSpec::size_abs_moment(int k) const {
    switch (kind) {
        case JumpKind::none:
            return 0.0;
        case JumpKind::gaussian: {
            // E|xi|^k for xi ~ N(0, sd^2 I_d): sd^k 2^(k/2) Gamma((d+k)/2)/Gamma(d/2).
            const double d = static_cast<double>(dim);
            const double lg = std::lgamma((d + k) / 2.0) - std::lgamma(d / 2.0);
            return std::pow(gaussian_sd, k) * std::exp(0.5 * k * std::log(2.0) + lg);
        }
        case JumpKind::point_mass:
            return std::pow(norm(point_value), k);
        default: {
            auto it = custom_abs_moments.find(k);
            if (it == custom_abs_moments.end())
                throw std::invalid_argument("LevyMeasureSpec: moment unavailable");
            return it->second;
        }
    }
}

void LevyMeasureSpec::sample_size(NoiseStream& stream, std::span<double> out) const {
    switch (kind) {
        case JumpKind::none:
            std::fill(out.begin(), out.end(), 0.0);
            return;
        case JumpKind::gaussian:
            for (double& v : out) v = gaussian_sd * stream.gauss();
            return;
        case JumpKind::point_mass:
            std::copy(point_value.begin(), point_value.end(), out.begin());
            return;
        default:
            if (!custom_sampler) throw std::invalid_argument("LevyMeasureSpec: no sampler available");
            custom_sampler(stream, out);
    }
}

LevyMomentEstimate levy_abs_moment(const LevyMeasureSpec& spec, int k) {
    if (k < 1) throw std::invalid_argument("levy_abs_moment: k must be >= 1");
    LevyMomentEstimate est;
    if (spec.intensity == 0.0) return est;  // zero measure
    if (spec.has_analytic_moment(k)) {
        est.value = spec.intensity * spec.size_abs_moment(k);
        return est;
    }
    if (!spec.custom_sampler) throw std::invalid_argument("levy_abs_moment: moment unavailable");
    // Monte Carlo fallback, 1e6 draws on a dedicated substream.
    constexpr std::size_t kDraws = 1000000;
    NoiseStream stream;
    stream.seed = 0x6d6f6d656e74ULL;  // fixed: estimates are reproducible
    stream.substream = static_cast<std::uint64_t>(k);
    std::vector<double> z(static_cast<std::size_t>(spec.dim));
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < kDraws; ++i) {
        spec.sample_size(stream, z);
        const double v = std::pow(norm(z), k);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / kDraws;
    const double var = std::max(0.0, sum_sq / kDraws - mean * mean);
    est.value = spec.intensity * mean;
    est.std_error = spec.intensity * std::sqrt(var / kDraws);
    est.analytic = false;
    return est;
}

double levy_tail_functional(const LevyMeasureSpec& spec, double L3, int p0) {
    // integral |z|((1+L3|z|)^(p0-1) - 1) nu(dz), expanded binomially.
    if (spec.intensity == 0.0) return 0.0;
    double total = 0.0;
    double binom = 1.0;  // C(p0-1, j)
    for (int j = 1; j <= p0 - 1; ++j) {
        binom = binom * static_cast<double>(p0 - j) / static_cast<double>(j);
        total += binom * std::pow(L3, j) * levy_abs_moment(spec, j + 1).value;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Builtin models
// ---------------------------------------------------------------------------

BuiltinModel builtin_model_from_name(const std::string& name) {
    if (name == "model1_lq") return BuiltinModel::model1_lq;
    if (name == "ou_contractive") return BuiltinModel::ou_contractive;
    if (name == "cubic_superlinear") return BuiltinModel::cubic_superlinear;
    throw std::invalid_argument("unknown model: " + name);
}

std::string builtin_model_name(BuiltinModel m) {
    switch (m) {
        case BuiltinModel::model1_lq: return "model1_lq";
        case BuiltinModel::ou_contractive: return "ou_contractive";
        case BuiltinModel::cubic_superlinear: return "cubic_superlinear";
    }
    return "?";
}

namespace {

class ParamReader {
  public:
    ParamReader(const std::map<std::string, double>& params, std::string model)
        : params_(params), model_(std::move(model)) {}

    double require(const std::string& key) {
        auto it = params_.find(key);
        if (it == params_.end())
            throw std::invalid_argument("model " + model_ + ": missing required parameter '" + key + "'");
        used_.push_back(key);
        return it->second;
    }
    double optional(const std::string& key, double fallback) {
        auto it = params_.find(key);
        used_.push_back(key);
        if (it == params_.end()) return fallback;
        return it->second;
    }
    void finish() const {
        for (const auto& [key, value] : params_) {
            (void)value;
            if (std::find(used_.begin(), used_.end(), key) == used_.end())
                throw std::invalid_argument("model " + model_ + ": unknown parameter '" + key + "'");
        }
    }

  private:
    const std::map<std::string, double>& params_;
    std::string model_;
    std::vector<std::string> used_;
};

double schedule_value(const std::vector<std::pair<double, double>>& schedule, double t) {
    double v = schedule.front().second;
    for (const auto& [s, u] : schedule) {
        if (s <= t) v = u;
        else break;
    }
    return v;
}

CoefficientModel make_model1_lq(ParamReader& read, const std::vector<std::pair<double, double>>& u_schedule) {
    CoefficientModel m;
    m.dim = 1;
    m.name = "model1_lq";

    std::vector<std::pair<double, double>> schedule = u_schedule;
    if (schedule.empty()) schedule = {{0.0, read.require("u")}};
    else read.optional("u", 0.0);
    const double theta = read.require("theta");
    const double sigma = read.require("sigma");
    const double g = read.require("gamma0_scale");
    const double intensity = read.require("jump_intensity");
    const double x0 = read.require("x0");
    const double jump_sd = read.optional("jump_sd", 1.0);
    read.finish();

    m.jump_law = LevyMeasureSpec::gaussian_law(intensity, jump_sd, 1);
    m.drift_schedule = schedule;
    m.drift = [schedule](double t, std::span<const double>, const MeasureView&, std::span<double> out) {
        out[0] = schedule_value(schedule, t);
    };
    m.diffusion = [sigma](double, std::span<const double>, const MeasureView& mu, std::span<double> out) {
        out[0] = sigma * mu.mean[0];
    };
    m.common_diffusion = [theta](double, std::span<const double>, const MeasureView&, std::span<double> out) {
        out[0] = theta;
    };
    m.jump_coef = [g](double, std::span<const double>, const MeasureView& mu, std::span<double> out) {
        out[0] = g * mu.mean[0];
    };

    double umax = 0.0;
    for (const auto& [s, u] : schedule) {
        (void)s;
        umax = std::max(umax, std::abs(u));
    }
    const double m2z = intensity * m.jump_law.size_abs_moment(2);  // integral z^2 nu(dz)
    auto& k = m.constants;
    k.p0 = 2;
    k.ell = 0.0;
    k.L = std::max({umax + theta * theta, sigma * sigma + g * g * m2z, 1e-6});
    k.L1 = 0.0;
    k.L2 = sigma * sigma + g * g * m2z;
    k.L3 = (g != 0.0) ? std::abs(g) : 1.0;
    k.Ltilde1 = 0.0;
    k.Ltilde2 = k.L2;
    k.gamma1 = umax / 2.0;
    k.gamma2 = (sigma * sigma + g * g * m2z) / 2.0;
    k.eta = umax / 2.0 + theta * theta / 2.0;

    m.resolved_params = {{"theta", theta},          {"sigma", sigma},   {"gamma0_scale", g},
                         {"jump_intensity", intensity}, {"jump_sd", jump_sd}, {"x0", x0},
                         {"u", schedule.front().second}};
    return m;
}

CoefficientModel make_ou_contractive(ParamReader& read) {
    CoefficientModel m;
    m.dim = 1;
    m.name = "ou_contractive";

    const double a = read.require("a");
    const double kappa = read.require("kappa");
    const double sigma = read.optional("sigma", 0.5);
    const double sigma0 = read.optional("sigma0", 0.0);
    const double x0 = read.optional("x0", 1.0);
    read.finish();
    if (!(a > kappa) || kappa < 0.0)
        throw std::invalid_argument("model ou_contractive: requires a > kappa >= 0");

    m.jump_law = LevyMeasureSpec::none_law(1);
    m.drift = [a, kappa](double, std::span<const double> x, const MeasureView& mu, std::span<double> out) {
        out[0] = -a * x[0] + kappa * mu.mean[0];
    };
    m.diffusion = [sigma](double, std::span<const double>, const MeasureView&, std::span<double> out) {
        out[0] = sigma;
    };
    m.common_diffusion = [sigma0](double, std::span<const double>, const MeasureView&, std::span<double> out) {
        out[0] = sigma0;
    };
    m.jump_coef = [](double, std::span<const double>, const MeasureView&, std::span<double> out) { out[0] = 0.0; };

    const double s2 = sigma * sigma + sigma0 * sigma0;
    auto& k = m.constants;
    k.p0 = 4;
    k.ell = 0.0;
    k.L = std::max({kappa, s2, a, 1e-6});
    k.L1 = -2.0 * a + kappa;
    k.L2 = kappa;
    k.L3 = 1.0;
    k.Ltilde1 = 0.0;
    k.Ltilde2 = 0.0;
    k.gamma1 = -a + kappa / 2.0;
    k.gamma2 = kappa / 2.0;
    k.eta = (k.p0 - 1) * s2 / 2.0;

    m.resolved_params = {{"a", a}, {"kappa", kappa}, {"sigma", sigma}, {"sigma0", sigma0}, {"x0", x0}};
    return m;
}

CoefficientModel make_cubic_superlinear(ParamReader& read) {
    CoefficientModel m;
    m.dim = 1;
    m.name = "cubic_superlinear";

    const double sigma = read.optional("sigma", 1.0);
    const double sigma0 = read.optional("sigma0", 0.5);
    const double x0 = read.optional("x0", 1.0);
    read.finish();

    m.jump_law = LevyMeasureSpec::none_law(1);
    m.drift = [](double, std::span<const double> x, const MeasureView&, std::span<double> out) {
        out[0] = -x[0] * x[0] * x[0] + x[0];
    };
    m.diffusion = [sigma](double, std::span<const double>, const MeasureView&, std::span<double> out) {
        out[0] = sigma;
    };
    m.common_diffusion = [sigma0](double, std::span<const double>, const MeasureView&, std::span<double> out) {
        out[0] = sigma0;
    };
    m.jump_coef = [](double, std::span<const double>, const MeasureView&, std::span<double> out) { out[0] = 0.0; };

    const double s2 = sigma * sigma + sigma0 * sigma0;
    auto& k = m.constants;
    k.p0 = 4;
    k.ell = 2.0;
    k.L = std::max(2.0, s2);
    k.L1 = 2.0;
    k.L2 = 0.0;
    k.L3 = 1.0;
    k.Ltilde1 = 0.0;
    k.Ltilde2 = 0.0;
    k.gamma1 = 1.0;
    k.gamma2 = 0.0;
    k.eta = (k.p0 - 1) * s2 / 2.0;

    m.resolved_params = {{"sigma", sigma}, {"sigma0", sigma0}, {"x0", x0}};
    return m;
}

}  // namespace

CoefficientModel builtin_model(BuiltinModel which, const std::map<std::string, double>& params,
                               const std::vector<std::pair<double, double>>& u_schedule) {
    ParamReader read(params, builtin_model_name(which));
    CoefficientModel m;
    switch (which) {
        case BuiltinModel::model1_lq: m = make_model1_lq(read, u_schedule); break;
        case BuiltinModel::ou_contractive: m = make_ou_contractive(read); break;
        case BuiltinModel::cubic_superlinear: m = make_cubic_superlinear(read); break;
    }
    m.constants.validate();
    m.jump_law.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Assumption checker
// ---------------------------------------------------------------------------

namespace {

struct CoefficientEval {
    std::vector<double> b, sigma, sigma0, c;
    bool finite = true;
};

CoefficientEval evaluate(const CoefficientModel& model, std::span<const double> x, const MeasureView& mu) {
    const int d = model.dim;
    CoefficientEval e;
    e.b.resize(static_cast<std::size_t>(d));
    e.sigma.resize(static_cast<std::size_t>(d) * d);
    e.sigma0.resize(static_cast<std::size_t>(d) * d);
    e.c.resize(static_cast<std::size_t>(d) * d);
    model.drift(0.0, x, mu, e.b);
    model.diffusion(0.0, x, mu, e.sigma);
    model.common_diffusion(0.0, x, mu, e.sigma0);
    model.jump_coef(0.0, x, mu, e.c);
    e.finite = all_finite(e.b) && all_finite(e.sigma) && all_finite(e.sigma0) && all_finite(e.c);
    return e;
}

// Uniform point in the centered ball: gaussian direction, radial inversion.
void sample_in_ball(NoiseStream& stream, double radius, std::span<double> out) {
    double nrm = 0.0;
    for (double& v : out) {
        v = stream.gauss();
        nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) nrm = 1.0;
    const double r = radius * std::pow(stream.uniform(), 1.0 / static_cast<double>(out.size()));
    for (double& v : out) v *= r / nrm;
}

EmpiricalMeasure sample_measure(NoiseStream& stream, int dim, double radius, std::size_t n_atoms) {
    std::vector<double> atoms(n_atoms * static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < n_atoms; ++i)
        sample_in_ball(stream, radius,
                       std::span<double>(atoms).subspan(i * static_cast<std::size_t>(dim),
                                                        static_cast<std::size_t>(dim)));
    return EmpiricalMeasure(dim, std::move(atoms));
}

}  // namespace

const AssumptionCheck& AssumptionReport::operator[](const std::string& id) const {
    for (const auto& c : checks)
        if (c.id == id) return c;
    throw std::out_of_range("AssumptionReport: no check " + id);
}

AssumptionReport validate_assumptions(const CoefficientModel& model, std::size_t n_trials, double radius,
                                      double tol, std::uint64_t seed) {
    if (n_trials < 1 || !(radius > 0.0)) throw std::invalid_argument("validate_assumptions: bad arguments");
    model.constants.validate();
    const auto& k = model.constants;
    const int d = model.dim;
    const double m2z = levy_abs_moment(model.jump_law, 2).value;      // integral |z|^2 nu
    const double jtail = levy_tail_functional(model.jump_law, k.L3, k.p0);

    AssumptionReport report;
    for (const char* id : {"A1", "A2", "A3", "A4", "A5", "A6", "A7"}) report.checks.push_back({id});
    auto& a1 = report.checks[0];
    auto& a2 = report.checks[1];
    auto& a3 = report.checks[2];
    auto& a4 = report.checks[3];
    auto& a5 = report.checks[4];
    auto& a6 = report.checks[5];
    auto& a7 = report.checks[6];

    // A4 is a property of the jump law alone.
    {
        const double m1 = levy_abs_moment(model.jump_law, 1).value;
        const double mhigh = levy_abs_moment(model.jump_law, 2 * k.p0).value;
        if (!std::isfinite(m1) || !std::isfinite(mhigh)) a4.holds = false;
    }

    NoiseStream stream;
    stream.seed = seed;
    stream.substream = 0x636865636bULL;  // checker substream

    std::vector<double> x(static_cast<std::size_t>(d)), xbar(static_cast<std::size_t>(d));
    MeasureSummary summary, summary_bar;

    auto fail = [&](AssumptionCheck& check, const EmpiricalMeasure& mu, const EmpiricalMeasure& mubar,
                    double lhs, double rhs, bool nonfinite = false) {
        if (!check.holds) return;
        check.holds = false;
        check.coefficient_nonfinite = nonfinite;
        check.witness = AssumptionWitness{x, xbar, mu, mubar, lhs, rhs};
    };

    for (std::size_t trial = 0; trial < n_trials; ++trial) {
        sample_in_ball(stream, radius, x);
        sample_in_ball(stream, radius, xbar);
        const std::size_t n_atoms = 1 + static_cast<std::size_t>(stream.uniform() * 5.0);
        EmpiricalMeasure mu = sample_measure(stream, d, radius, n_atoms);
        EmpiricalMeasure mubar = sample_measure(stream, d, radius, n_atoms);
        summary.compute(d, mu.atoms);
        summary_bar.compute(d, mubar.atoms);
        const MeasureView mv = summary.view(d, mu.atoms);
        const MeasureView mvbar = summary_bar.view(d, mubar.atoms);

        const CoefficientEval e = evaluate(model, x, mv);
        const CoefficientEval ebar = evaluate(model, xbar, mvbar);
        if (!e.finite || !ebar.finite) {
            for (auto* c : {&a1, &a2, &a3, &a5, &a6, &a7}) fail(*c, mu, mubar, 0.0, 0.0, true);
            continue;
        }

        const double w2_mu_d0 = mv.w2_to_dirac0;
        const double w2_pair = w2_small_exact(mu, mubar, 8);
        const double xsq = norm_sq(x);
        std::vector<double> dx(static_cast<std::size_t>(d));
        for (int c = 0; c < d; ++c)
            dx[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)] - xbar[static_cast<std::size_t>(c)];
        const double dxsq = norm_sq(dx);

        // A1
        {
            const double lhs = 2.0 * dot(x, e.b) + norm_sq(e.sigma) + norm_sq(e.sigma0) + norm_sq(e.c) * m2z;
            const double rhs = k.L * (1.0 + xsq + w2_mu_d0 * w2_mu_d0);
            if (lhs > rhs + tol) fail(a1, mu, mubar, lhs, rhs);
        }
        // A2
        {
            std::vector<double> db(static_cast<std::size_t>(d));
            for (int c = 0; c < d; ++c)
                db[static_cast<std::size_t>(c)] =
                    e.b[static_cast<std::size_t>(c)] - ebar.b[static_cast<std::size_t>(c)];
            double dsig = 0.0, dsig0 = 0.0, dc = 0.0;
            for (std::size_t i = 0; i < e.sigma.size(); ++i) {
                const double a = e.sigma[i] - ebar.sigma[i];
                const double b0 = e.sigma0[i] - ebar.sigma0[i];
                const double cc = e.c[i] - ebar.c[i];
                dsig += a * a;
                dsig0 += b0 * b0;
                dc += cc * cc;
            }
            const double lhs = 2.0 * dot(dx, db) + dsig + dsig0 + dc * m2z;
            const double rhs = k.L1 * dxsq + k.L2 * w2_pair * w2_pair;
            if (lhs > rhs + tol) fail(a2, mu, mubar, lhs, rhs);
            // A7 shares the difference norms.
            const double lhs7 = dsig + dsig0 + dc * m2z;
            const double rhs7 = k.Ltilde1 * dxsq + k.Ltilde2 * w2_pair * w2_pair;
            if (lhs7 > rhs7 + tol) fail(a7, mu, mubar, lhs7, rhs7);
            // A3
            const double lhs3 = norm(db);
            const double rhs3 = k.L * (1.0 + std::pow(norm(x), k.ell) + std::pow(norm(xbar), k.ell)) *
                                (std::sqrt(dxsq) + w2_pair);
            if (lhs3 > rhs3 + tol) fail(a3, mu, mubar, lhs3, rhs3);
        }
        // A5
        {
            const double lhs = frobenius_norm(e.c);
            const double rhs = k.L3 * (1.0 + norm(x) + w2_mu_d0);
            if (lhs > rhs + tol) fail(a5, mu, mubar, lhs, rhs);
        }
        // A6 (evaluated at p = p0; see Open Questions in the design notes)
        {
            const double lhs = dot(x, e.b) + 0.5 * (k.p0 - 1) * (norm_sq(e.sigma) + norm_sq(e.sigma0)) +
                               norm_sq(e.c) * jtail / (2.0 * k.L3);
            const double rhs = k.gamma1 * xsq + k.gamma2 * w2_mu_d0 * w2_mu_d0 + k.eta;
            if (lhs > rhs + tol) fail(a6, mu, mubar, lhs, rhs);
        }
    }
    return report;
}

}  // namespace mkv

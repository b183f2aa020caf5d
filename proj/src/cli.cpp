#include "mkv/cli.hpp"

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "mkv/experiments.hpp"

namespace mkv::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kCommands = {"simulate", "chaos", "order", "moments",
                                         "picard",   "check", "oracle-compare"};

NoisePlan make_plan(const RunConfig& cfg, int dim) {
    NoisePlan plan;
    plan.master_seed = cfg.seed;
    plan.n_particles = cfg.n;
    plan.dim = dim;
    return plan;
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MKV_SIM_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1, omp_get_max_threads());
}

// Numbers formatted with %.17g round-trip exactly, keeping reruns byte-stable.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::initializer_list<std::string> cells) { rows.emplace_back(cells); }
    void write_csv(std::ostream& os) const {
        for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
        os << "\n";
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
            os << "\n";
        }
    }
    void write_json(std::ostream& os) const {
        json arr = json::array();
        for (const auto& row : rows) {
            json obj = json::object();
            for (std::size_t c = 0; c < row.size(); ++c) obj[columns[c]] = row[c];
            arr.push_back(obj);
        }
        os << arr.dump(2) << "\n";
    }
};

template <typename T>
T get_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config key '" + key + "': expected a number");
    return v.get<T>();
}

std::vector<std::pair<double, double>> parse_schedule(const json& v, const std::string& key) {
    std::vector<std::pair<double, double>> out;
    if (!v.is_array()) throw ConfigError("config key '" + key + "': expected [[t, value], ...]");
    for (const auto& e : v) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ConfigError("config key '" + key + "': expected [[t, value], ...]");
        out.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    if (out.empty() || out.front().first != 0.0)
        throw ConfigError("config key '" + key + "': schedule must start at t=0");
    return out;
}

// Parses an override string as JSON when possible (numbers, arrays), else as
// a bare string.
json parse_override_value(const std::string& text) {
    const json parsed = json::parse(text, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    return json(text);
}

}  // namespace

SchemeKind RunConfig::scheme_kind() const {
    if (!scheme.empty()) return scheme_from_name(scheme);
    return command == "order" ? SchemeKind::tamed_adaptive : SchemeKind::plain;
}

SimConfig RunConfig::sim_config() const {
    SimConfig sim;
    sim.n_particles = n;
    sim.horizon = t;
    sim.base_step = delta;
    sim.h0 = h0;
    sim.scheme = scheme_kind();
    sim.record_stride = record_stride;
    sim.substeps = substeps;
    sim.workers = resolve_workers(workers);
    double x0 = 1.0;
    if (params.contains("x0")) x0 = params.at("x0").get<double>();
    sim.x0 = {x0};
    return sim;
}

CoefficientModel RunConfig::build_model() const {
    if (model.empty()) throw ConfigError("config: 'model' is required for this command");
    std::map<std::string, double> scalar_params;
    std::vector<std::pair<double, double>> schedule;
    for (const auto& [key, value] : params.items()) {
        if (key == "u_schedule") {
            schedule = parse_schedule(value, "params.u_schedule");
        } else if (value.is_number()) {
            scalar_params[key] = value.get<double>();
        } else {
            throw ConfigError("config key 'params." + key + "': expected a number");
        }
    }
    try {
        return builtin_model(builtin_model_from_name(model), scalar_params, schedule);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

json RunConfig::to_json() const {
    json j;
    j["command"] = command;
    j["model"] = model;
    j["params"] = params;
    j["n"] = n;
    j["t"] = t;
    j["delta"] = delta;
    j["h0"] = h0;
    j["scheme"] = scheme.empty() ? scheme_name(scheme_kind()) : scheme;
    j["record_stride"] = record_stride;
    j["substeps"] = substeps;
    j["seed"] = seed;
    j["workers"] = workers;
    j["out"] = out;
    j["format"] = format;
    j["n_list"] = n_list;
    j["n_ref"] = n_ref;
    j["delta_list"] = delta_list;
    j["ref_divisor"] = ref_divisor;
    j["reps"] = reps;
    j["p"] = p;
    j["max_iter"] = max_iter;
    j["tol"] = tol;
    j["n_trials"] = n_trials;
    j["radius"] = radius;
    j["check_tol"] = check_tol;
    return j;
}

RunConfig parse_config(const json& file, const std::vector<std::pair<std::string, std::string>>& overrides) {
    json merged = file.is_object() && file.contains("config") ? file.at("config") : file;
    if (!merged.is_object()) throw ConfigError("config: top level must be a JSON object");

    for (const auto& [key, text] : overrides) {
        if (key.rfind("params.", 0) == 0) {
            merged["params"][key.substr(7)] = parse_override_value(text);
        } else {
            merged[key] = parse_override_value(text);
        }
    }

    RunConfig cfg;
    for (const auto& [key, value] : merged.items()) {
        if (key == "command") cfg.command = value.get<std::string>();
        else if (key == "model") cfg.model = value.get<std::string>();
        else if (key == "params") {
            if (!value.is_object()) throw ConfigError("config key 'params': expected an object");
            cfg.params = value;
        } else if (key == "n") cfg.n = get_number<std::size_t>(value, key);
        else if (key == "t") cfg.t = get_number<double>(value, key);
        else if (key == "delta") cfg.delta = get_number<double>(value, key);
        else if (key == "h0") cfg.h0 = get_number<double>(value, key);
        else if (key == "scheme") cfg.scheme = value.get<std::string>();
        else if (key == "record_stride") cfg.record_stride = get_number<std::size_t>(value, key);
        else if (key == "substeps") cfg.substeps = get_number<int>(value, key);
        else if (key == "seed") cfg.seed = get_number<std::uint64_t>(value, key);
        else if (key == "workers") cfg.workers = get_number<int>(value, key);
        else if (key == "out") cfg.out = value.get<std::string>();
        else if (key == "format") cfg.format = value.get<std::string>();
        else if (key == "n_list") cfg.n_list = value.get<std::vector<std::size_t>>();
        else if (key == "n_ref") cfg.n_ref = get_number<std::size_t>(value, key);
        else if (key == "delta_list") cfg.delta_list = value.get<std::vector<double>>();
        else if (key == "ref_divisor") cfg.ref_divisor = get_number<unsigned>(value, key);
        else if (key == "reps") cfg.reps = get_number<std::size_t>(value, key);
        else if (key == "p") cfg.p = get_number<double>(value, key);
        else if (key == "max_iter") cfg.max_iter = get_number<std::size_t>(value, key);
        else if (key == "tol") cfg.tol = get_number<double>(value, key);
        else if (key == "n_trials") cfg.n_trials = get_number<std::size_t>(value, key);
        else if (key == "radius") cfg.radius = get_number<double>(value, key);
        else if (key == "check_tol") cfg.check_tol = get_number<double>(value, key);
        else throw ConfigError("config: unknown key '" + key + "'");
    }

    if (cfg.command.empty()) throw ConfigError("config: 'command' is required");
    if (!kCommands.count(cfg.command)) throw ConfigError("config: unknown command '" + cfg.command + "'");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
        throw ConfigError("config key 'delta': value must lie in (0,1)");
    if (!(cfg.t > 0.0)) throw ConfigError("config key 't': value must be > 0");
    if (cfg.n < 1) throw ConfigError("config key 'n': value must be >= 1");
    if (cfg.workers < 0) throw ConfigError("config key 'workers': value must be >= 0");
    if (cfg.format != "csv" && cfg.format != "json")
        throw ConfigError("config key 'format': expected 'csv' or 'json'");
    if (!cfg.scheme.empty()) scheme_from_name(cfg.scheme);  // validates
    return cfg;
}

namespace {

struct RecordStats {
    double mean0, second_moment, w2, min0, max0;
};

RecordStats record_stats(const Trajectory& traj, std::size_t r) {
    RecordStats s{};
    s.mean0 = traj.summaries[r].mean[0];
    s.second_moment = traj.summaries[r].second_moment;
    s.w2 = traj.summaries[r].w2_to_dirac0;
    const auto& pos = traj.positions[r];
    const auto dd = static_cast<std::size_t>(traj.dim);
    s.min0 = pos[0];
    s.max0 = pos[0];
    for (std::size_t i = 0; i < traj.n_particles; ++i) {
        s.min0 = std::min(s.min0, pos[i * dd]);
        s.max0 = std::max(s.max0, pos[i * dd]);
    }
    return s;
}

void write_outputs(const RunConfig& cfg, const Table& table, const json& results) {
    std::ofstream data(cfg.out, std::ios::binary);
    if (!data) throw std::ios_base::failure("cannot open output file: " + cfg.out);
    if (cfg.format == "csv") table.write_csv(data);
    else table.write_json(data);
    data.flush();
    if (!data) throw std::ios_base::failure("failed writing output file: " + cfg.out);

    json manifest;
    manifest["version"] = kVersion;
    manifest["config"] = cfg.to_json();
    manifest["results"] = results;
    const std::string manifest_path = cfg.out + ".manifest.json";
    std::ofstream mf(manifest_path, std::ios::binary);
    if (!mf) throw std::ios_base::failure("cannot open manifest file: " + manifest_path);
    mf << manifest.dump(2) << "\n";
    mf.flush();
    if (!mf) throw std::ios_base::failure("failed writing manifest: " + manifest_path);
}

json fit_to_json(const RateFit& fit) {
    json j;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["degenerate"] = fit.degenerate;
    return j;
}

int run_simulate(const RunConfig& cfg) {
    const CoefficientModel model = cfg.build_model();
    const Trajectory traj = simulate_interacting(model, cfg.sim_config(), make_plan(cfg, model.dim));
    Table table;
    table.columns = {"t", "mean", "second_moment", "w2_to_dirac0", "min", "max"};
    for (std::size_t r = 0; r < traj.record_count(); ++r) {
        const RecordStats s = record_stats(traj, r);
        table.add_row({fmt(traj.times[r]), fmt(s.mean0), fmt(s.second_moment), fmt(s.w2), fmt(s.min0), fmt(s.max0)});
    }
    write_outputs(cfg, table, json::object());
    return kOk;
}

int run_chaos(const RunConfig& cfg) {
    const CoefficientModel model = cfg.build_model();
    const ChaosResult res =
        chaos_experiment(model, cfg.n_list, cfg.n_ref, cfg.sim_config(), make_plan(cfg, model.dim),
                         cfg.reps);
    Table table;
    table.columns = {"parameter", "error", "stderr"};
    for (const auto& pt : res.points) table.add_row({fmt(pt.parameter), fmt(pt.error), fmt(pt.std_error)});
    json results;
    results["fit"] = fit_to_json(res.fit);
    results["mse"] = res.mse;
    write_outputs(cfg, table, results);
    return kOk;
}

int run_order(const RunConfig& cfg) {
    const CoefficientModel model = cfg.build_model();
    const OrderResult res = strong_order_experiment(model, cfg.delta_list, cfg.sim_config(),
                                                    make_plan(cfg, model.dim), cfg.reps,
                                                    cfg.ref_divisor);
    Table table;
    table.columns = {"parameter", "error", "stderr"};
    for (const auto& pt : res.points) table.add_row({fmt(pt.parameter), fmt(pt.error), fmt(pt.std_error)});
    json results;
    results["fit"] = fit_to_json(res.fit);
    results["reference_step"] = res.reference_step;
    write_outputs(cfg, table, results);
    return kOk;
}

int run_moments(const RunConfig& cfg) {
    const CoefficientModel model = cfg.build_model();
    const Trajectory traj = simulate_interacting(model, cfg.sim_config(), make_plan(cfg, model.dim));
    const auto curve = moment_curve(traj, cfg.p, model.constants);
    Table table;
    table.columns = {"t", "p", "estimate", "bound_shape_value"};
    for (const auto& pt : curve) table.add_row({fmt(pt.t), fmt(cfg.p), fmt(pt.estimate), fmt(pt.bound_shape)});
    write_outputs(cfg, table, json::object());
    return kOk;
}

int run_picard(const RunConfig& cfg) {
    const CoefficientModel model = cfg.build_model();
    const PicardResult res =
        picard_iterate(model, cfg.sim_config(), make_plan(cfg, model.dim), cfg.max_iter, cfg.tol);
    Table table;
    table.columns = {"iteration", "distance"};
    for (std::size_t k = 0; k < res.distances.size(); ++k)
        table.add_row({fmt(static_cast<double>(k + 1)), fmt(res.distances[k])});
    json results;
    results["converged"] = res.converged;
    results["iterations"] = res.distances.size();
    write_outputs(cfg, table, results);
    return res.converged ? kOk : kNotConverged;
}

int run_check(const RunConfig& cfg) {
    const CoefficientModel model = cfg.build_model();
    const AssumptionReport report =
        validate_assumptions(model, cfg.n_trials, cfg.radius, cfg.check_tol, cfg.seed);
    Table table;
    table.columns = {"assumption", "status", "lhs", "rhs"};
    json witnesses = json::object();
    for (const auto& check : report.checks) {
        const std::string status = check.holds ? "holds-on-sample"
                                   : check.coefficient_nonfinite ? "coefficient-non-finite"
                                                                 : "violated";
        const double lhs = check.witness ? check.witness->lhs : 0.0;
        const double rhs = check.witness ? check.witness->rhs : 0.0;
        table.add_row({check.id, status, fmt(lhs), fmt(rhs)});
        if (check.witness) {
            json w;
            w["x"] = check.witness->x;
            w["xbar"] = check.witness->xbar;
            w["mu_atoms"] = check.witness->mu.atoms;
            w["mubar_atoms"] = check.witness->mubar.atoms;
            w["lhs"] = check.witness->lhs;
            w["rhs"] = check.witness->rhs;
            witnesses[check.id] = w;
        }
    }
    json results;
    results["all_hold"] = report.all_hold();
    results["witnesses"] = witnesses;
    write_outputs(cfg, table, results);
    return kOk;
}

int run_oracle_compare(const RunConfig& cfg) {
    const CoefficientModel model = cfg.build_model();
    const Trajectory traj = simulate_interacting(model, cfg.sim_config(), make_plan(cfg, model.dim));
    const OracleSeries oracle = model1_oracle(model1_params_from(model), traj.times, traj.common_path);
    Table table;
    table.columns = {"t", "emp_mean", "oracle_mean", "emp_var", "oracle_var"};
    for (std::size_t r = 0; r < traj.record_count(); ++r) {
        const double m = traj.summaries[r].mean[0];
        const double var = traj.summaries[r].second_moment - m * m;
        table.add_row({fmt(traj.times[r]), fmt(m), fmt(oracle.mean[r]), fmt(var), fmt(oracle.variance[r])});
    }
    write_outputs(cfg, table, json::object());
    return kOk;
}

}  // namespace

int run(const RunConfig& cfg) {
    try {
        if (cfg.command == "simulate") return run_simulate(cfg);
        if (cfg.command == "chaos") return run_chaos(cfg);
        if (cfg.command == "order") return run_order(cfg);
        if (cfg.command == "moments") return run_moments(cfg);
        if (cfg.command == "picard") return run_picard(cfg);
        if (cfg.command == "check") return run_check(cfg);
        if (cfg.command == "oracle-compare") return run_oracle_compare(cfg);
        std::cerr << "unknown command: " << cfg.command << "\n";
        return kConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ExplosionError& e) {
        std::cerr << e.what() << "\n";
        return kExplosion;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
}

int main_entry(int argc, char** argv) {
    try {
        json file = json::object();
        std::vector<std::pair<std::string, std::string>> overrides;
        for (int i = 1; i < argc; ++i) {
            std::string arg = argv[i];
            if (arg.rfind("--", 0) != 0) {
                std::cerr << "config error: expected --key value pairs, got '" << arg << "'\n";
                return kConfigError;
            }
            if (i + 1 >= argc) {
                std::cerr << "config error: flag '" << arg << "' is missing a value\n";
                return kConfigError;
            }
            const std::string key = arg.substr(2);
            const std::string value = argv[++i];
            if (key == "config") {
                std::ifstream in(value);
                if (!in) {
                    std::cerr << "i/o error: cannot read config file " << value << "\n";
                    return kIoError;
                }
                file = json::parse(in, nullptr, false);
                if (file.is_discarded()) {
                    std::cerr << "config error: " << value << " is not valid JSON\n";
                    return kConfigError;
                }
            } else {
                overrides.emplace_back(key, value);
            }
        }
        return run(parse_config(file, overrides));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }
}

}  // namespace mkv::cli

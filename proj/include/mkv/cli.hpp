#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mkv/scheme.hpp"

namespace mkv::cli {

inline constexpr const char* kVersion = "mkv-sim 0.1.0";

// Exit codes: 0 ok, 2 bad config, 3 explosion detected, 4 picard did not
// converge, 5 I/O failure.
enum ExitCode : int { kOk = 0, kConfigError = 2, kExplosion = 3, kNotConverged = 4, kIoError = 5 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    std::string model;
    nlohmann::json params = nlohmann::json::object();

    std::size_t n = 1000;
    double t = 1.0;
    double delta = 0.01;
    double h0 = 1.0;
    std::string scheme;  // empty = command default
    std::size_t record_stride = 0;
    int substeps = 0;
    std::uint64_t seed = 42;
    int workers = 0;  // 0 = resolve from MKV_SIM_THREADS / hardware
    std::string out = "out.csv";
    std::string format = "csv";

    std::vector<std::size_t> n_list = {64, 256, 1024, 4096};
    std::size_t n_ref = 65536;
    std::vector<double> delta_list = {0.1, 0.05, 0.025, 0.0125};
    unsigned ref_divisor = 32;
    std::size_t reps = 4;
    double p = 2.0;
    std::size_t max_iter = 12;
    double tol = 1e-8;
    std::size_t n_trials = 10000;
    double radius = 10.0;
    double check_tol = 1e-9;

    // Resolved helpers
    SchemeKind scheme_kind() const;
    SimConfig sim_config() const;
    CoefficientModel build_model() const;
    nlohmann::json to_json() const;
};

// Parses a config object (or a manifest carrying one under "config"), then
// applies `--key value` overrides; dotted keys (params.x0) address model
// parameters. Unknown keys and out-of-range values raise ConfigError.
RunConfig parse_config(const nlohmann::json& file,
                       const std::vector<std::pair<std::string, std::string>>& overrides);

// Dispatches the command, writes the data file and its manifest. Returns an
// exit code rather than throwing.
int run(const RunConfig& cfg);

// argv helper: reads --config PATH plus overrides, then parse_config + run.
int main_entry(int argc, char** argv);

}  // namespace mkv::cli

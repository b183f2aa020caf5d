// Timing comparison of the serial reference particle loop against the OpenMP
// kernel, on the LQ mean-field model with jumps enabled.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "mkv/scheme.hpp"

using namespace mkv;
using clock_type = std::chrono::steady_clock;

namespace {

double run_once(std::size_t n, double horizon, double delta, int workers) {
    std::map<std::string, double> params = {{"u", 0.0},         {"theta", 1.0},          {"sigma", 0.5},
                                            {"gamma0_scale", 0.2}, {"jump_intensity", 1.0}, {"x0", 1.0}};
    const CoefficientModel model = builtin_model(BuiltinModel::model1_lq, params);
    SimConfig cfg;
    cfg.n_particles = n;
    cfg.horizon = horizon;
    cfg.base_step = delta;
    cfg.scheme = SchemeKind::plain;
    cfg.workers = workers;
    cfg.x0 = {1.0};
    NoisePlan plan;
    plan.master_seed = 12345;
    plan.n_particles = n;

    const auto start = clock_type::now();
    const Trajectory traj = simulate_interacting(model, cfg, plan);
    const auto stop = clock_type::now();
    (void)traj;
    return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20000;
    const double horizon = 1.0;
    const double delta = 0.002;  // 500 steps
    const int max_workers = std::max(1, omp_get_max_threads());

    std::printf("particles=%zu steps=%.0f\n", n, horizon / delta);
    std::printf("%-10s %-12s %-14s %-8s\n", "workers", "seconds", "Mpart-steps/s", "speedup");
    const double steps = horizon / delta;

    const double serial = run_once(n, horizon, delta, 1);
    std::printf("%-10d %-12.3f %-14.2f %-8.2f\n", 1, serial, n * steps / serial / 1e6, 1.0);
    for (int w = 2; w <= max_workers * 2; w *= 2) {
        const double t = run_once(n, horizon, delta, w);
        std::printf("%-10d %-12.3f %-14.2f %-8.2f\n", w, t, n * steps / t / 1e6, serial / t);
    }
    return 0;
}

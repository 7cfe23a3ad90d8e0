// Times the serial reference ensemble against the OpenMP one on the same
// config and checks that both produce identical bands.
//
//   ensemble_bench [paths] [years] [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "aspp/config.hpp"
#include "aspp/cycle.hpp"

namespace {

template <class F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    aspp::CycleConfig cfg = aspp::ExperimentConfig::default_cycle_config();
    cfg.n_paths = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 64;
    cfg.horizon = argc > 2 ? std::atof(argv[2]) : 12.0;
    const int threads = argc > 3 ? std::atoi(argv[3]) : omp_get_max_threads();

    aspp::EnsembleStats serial, parallel;
    const double ts = seconds([&] { serial = aspp::run_ensemble_serial(cfg); });
    const double tp = seconds([&] { parallel = aspp::run_ensemble(cfg, threads); });

    const bool same = serial.log_price.mean == parallel.log_price.mean &&
                      serial.hazard_aspp.mean == parallel.hazard_aspp.mean &&
                      serial.mean_external_value == parallel.mean_external_value;
    const double path_days = double(cfg.n_paths) * double(cfg.total_days());
    std::printf("paths=%zu days/path=%zu threads=%d\n", cfg.n_paths, cfg.total_days(), threads);
    std::printf("serial   %8.3f s  %10.0f path-days/s\n", ts, path_days / ts);
    std::printf("openmp   %8.3f s  %10.0f path-days/s  speedup %.2fx\n", tp, path_days / tp, ts / tp);
    std::printf("identical results: %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
}

#pragma once

#include <json.hpp>

#include "aspp/config.hpp"

namespace aspp {

/// Runs the experiment named by cfg.kind, writes its files under
/// cfg.output_dir and returns the summary that is also written to
/// summary.json.
///
///   aspp / stats       zero-investment ensemble
///   regimes            investment / zero / withdrawal ensembles
///   cycle              full investment cycle
///   ponzi-*            one ODE solve (plus optional critical exponent)
///   fit-c0             cycle ensemble, then c0 calibration against it
nlohmann::json run_experiment(const ExperimentConfig& cfg, int threads = 0);

}  // namespace aspp

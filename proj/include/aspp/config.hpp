#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "aspp/cycle.hpp"
#include "aspp/ponzi.hpp"

namespace aspp {

enum class ExperimentKind { aspp, regimes, cycle, ponzi_classical, ponzi_speculative, fit_c0, stats };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

struct PonziBlock {
    PonziParams classical;
    SpecPonziParams speculative;  // shares r_w, t_m and S0 with `classical`
    double horizon = 40.0;
    double dt = 1.0 / 360.0;
    double steady_window = 5.0;
    bool critical_exponent = false;
    CriticalExponentOptions critical;
};

struct StatsBlock {
    double c0_sigma = 1.0;
};

/// Everything one CLI run needs. Defaults reproduce the reference setup:
/// 500 agents, 125 active per day, 360 days a year, $10 cash, k = 1,
/// greed/fear log-means ln 1.12 / ln 1.11 with variance 12e-4 and
/// correlation 0.95, gamma1 = 70, gamma2 = 5, three-year phases.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::aspp;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    CycleConfig cycle = default_cycle_config();
    RegimeFlows regimes;
    PonziBlock ponzi;
    FitOptions fit;
    StatsBlock stats;

    static CycleConfig default_cycle_config();
    void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(std::string_view text);

nlohmann::json to_json(const ExperimentConfig& cfg);

// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace aspp

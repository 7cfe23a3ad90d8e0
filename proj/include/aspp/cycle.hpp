#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aspp/engine.hpp"
#include "aspp/market.hpp"
#include "aspp/ponzi.hpp"
#include "aspp/risk.hpp"

namespace aspp {

struct MarketConfig {
    PopulationSpec population;
    EngineParams engine;
    SignalSchedule signal;
    double days_per_year = 360.0;

    void validate() const;
    double day_length() const { return 1.0 / days_per_year; }
};

// How the daily external flow is chosen.
enum class FlowPolicy {
    cycle,     // zero, then scheduled investment, then investment minus withdrawals
    constant,  // constant_flow dollars per year from day one
};

struct CycleConfig {
    MarketConfig market;
    HazardParams hazard;
    ScheduleSpec schedule;
    FlowPolicy policy = FlowPolicy::cycle;
    double constant_flow = 0.0;  // dollars per year, constant policy only
    double pre_phase = 3.0;      // years without investment
    double t_m = 3.0;            // maturity, years
    std::optional<double> target_rate;  // r_w; defaults to the annualized r*
    double horizon = 20.0;
    std::size_t n_paths = 1000;
    std::uint64_t base_seed = 0;
    std::vector<double> checkpoints;  // empty: 0 and the ends of the phases
    std::size_t histogram_bins = 40;

    void validate() const;
    double resolved_target_rate() const;
    std::vector<double> resolved_checkpoints() const;
    std::size_t total_days() const;
};

/// Withdrawal-eligible value R on the agent side. Inflows mature after a
/// fixed number of days and are marked to market by the price ratio over
/// their holding period; matured value compounds at the realized rate.
class InvestorLedger {
public:
    InvestorLedger(std::size_t maturity_days, double day_length);

    // Advances one day. `gross_inflow` is the dollars invested today and
    // `price` today's closing price; returns the updated R.
    double advance(double price, double prev_price, double gross_inflow, bool withdrawing,
                   double r_w);

    double value() const noexcept { return value_; }
    bool warm() const noexcept { return filled_ >= maturity_days_; }
    std::size_t maturity_days() const noexcept { return maturity_days_; }

private:
    std::size_t maturity_days_;
    double day_length_;
    double value_ = 0.0;
    std::vector<double> price_history_;
    std::vector<double> inflow_history_;
    std::size_t head_ = 0;
    std::size_t filled_ = 0;
};

struct CashSnapshot {
    double t;
    std::vector<double> cash;
};

struct PathRecord {
    std::vector<double> t;
    std::vector<double> price;
    std::vector<double> log_price;
    std::vector<double> hazard_aspp;
    std::vector<double> hazard_investor;
    std::vector<double> total_risk;
    std::vector<double> flow_in;  // executed x_in
    std::vector<double> withdrawable;  // R
    std::vector<double> external_value;  // S_ext
    std::vector<double> total_cash;
    std::vector<double> realized_rate;  // annualized simple return per day
    std::vector<CashSnapshot> snapshots;
    std::size_t clamp_events = 0;

    std::size_t size() const { return t.size(); }
};

PathRecord run_path(const CycleConfig& cfg, std::size_t path_index);

struct SeriesBand {
    std::vector<double> mean, sd, p10, p50, p90;
};

struct CashHistogram {
    double t;
    std::vector<double> edges;  // bins + 1
    std::vector<std::uint64_t> counts;
};

struct PathFailure {
    std::size_t path_index;
    std::string message;
};

struct EnsembleStats {
    std::vector<double> t;
    SeriesBand log_price;
    SeriesBand hazard_aspp;
    SeriesBand hazard_investor;
    std::vector<double> mean_price;
    std::vector<double> mean_total_risk;
    std::vector<double> mean_flow_in;
    std::vector<double> mean_withdrawable;
    std::vector<double> mean_external_value;
    std::vector<double> mean_total_cash;
    ReturnStats pooled_returns;
    std::vector<CashHistogram> histograms;
    std::size_t n_paths = 0;
    std::size_t n_ok = 0;
    std::vector<PathFailure> failures;
    std::size_t clamp_events = 0;

    double cumulative_mean_flow() const;
};

/// Runs cfg.n_paths independent paths on `threads` OpenMP threads (0: the
/// runtime default). Aggregation happens in path order, so the result does
/// not depend on the thread count.
EnsembleStats run_ensemble(const CycleConfig& cfg, int threads = 0);

/// Single-threaded reference for run_ensemble.
EnsembleStats run_ensemble_serial(const CycleConfig& cfg);

struct RegimeFlows {
    double investment = 5000.0;  // dollars per year
    double withdrawal = 1000.0;  // dollars per year, taken out
    double horizon = 2.0;
};

struct RegimeComparison {
    RegimeFlows flows;
    EnsembleStats investment;
    EnsembleStats zero;
    EnsembleStats withdrawal;
};

RegimeComparison regime_comparison(const CycleConfig& cfg, const RegimeFlows& flows,
                                   int threads = 0);

struct FitTarget {
    std::vector<double> t;       // agent clock, years
    std::vector<double> values;  // mean external investment value
};

struct FitOptions {
    double low = 1e-5;
    double high = 1e-2;
    double pre_phase = 3.0;  // agent time at which the ODE clock starts
    double S0 = 0.0;
    double dt = 1.0 / 360.0;
    double tol = 1e-5;  // on ln c0
};

struct FitResult {
    double c0;
    double rmse;
    std::size_t evaluations;
};

/// RMSE between the speculative-scheme S(t - pre_phase) and the target on the
/// target's nodes at or after pre_phase. Divergent solves score +inf.
double fit_objective(double c0, const FitTarget& target, const ScheduleSpec& schedule,
                     double r_w, double t_m, const FitOptions& opts);

/// Golden-section search on ln c0. Throws BracketError when the minimum sits
/// on a bracket endpoint.
FitResult fit_c0(const FitTarget& target, const ScheduleSpec& schedule, double r_w, double t_m,
                 const FitOptions& opts = {});

/// Time of the first bubble peak: the running maximum at the first moment the
/// series falls `drawdown` below it, or the global maximum if it never does.
/// Only nodes with t >= t_start are considered.
double bubble_peak_time(const std::vector<double>& t, const std::vector<double>& values,
                        double t_start = 0.0, double drawdown = 0.3);

}  // namespace aspp

#include "aspp/run.hpp"

#include <cmath>
#include <filesystem>

#include "aspp/errors.hpp"
#include "aspp/io.hpp"

namespace aspp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json band_summary(const EnsembleStats& s) {
    const std::size_t last = s.t.size() - 1;
    const double n = double(std::max<std::size_t>(s.n_ok, 1));
    return {{"paths_ok", s.n_ok},
            {"path_failures", s.failures.size()},
            {"clamp_events", s.clamp_events},
            {"final_log_price_mean", s.log_price.mean[last]},
            {"final_Ha_mean", s.hazard_aspp.mean[last]},
            {"final_Ha_stderr", s.hazard_aspp.sd[last] / std::sqrt(n)},
            {"final_Hp_mean", s.hazard_investor.mean[last]},
            {"cumulative_flow_in", s.cumulative_mean_flow()},
            {"pooled_returns", to_json(s.pooled_returns)}};
}

void write_ensemble_outputs(const fs::path& dir, const CycleConfig& cfg,
                            const EnsembleStats& stats) {
    write_ensemble_csv(dir / "ensemble.csv", stats);
    write_histogram_csv(dir / "cash_histograms.csv", stats.histograms);
    write_path_csv(dir / "path_0000.csv", run_path(cfg, 0));
}

CycleConfig zero_investment(const CycleConfig& cfg) {
    CycleConfig c = cfg;
    c.policy = FlowPolicy::constant;
    c.constant_flow = 0.0;
    return c;
}

json run_zero_investment(const ExperimentConfig& cfg, const fs::path& dir, int threads,
                         RunCounters& counters) {
    const CycleConfig c = zero_investment(cfg.cycle);
    const EnsembleStats stats = run_ensemble(c, threads);
    counters = {stats.clamp_events, stats.failures.size()};

    const auto& gf = c.market.population.greed_fear;
    const auto theory = theoretical_return(std::exp(gf.mean_log_greed), std::exp(gf.mean_log_fear),
                                           c.market.population.n_agents,
                                           c.market.engine.active_count, cfg.stats.c0_sigma);
    json summary = band_summary(stats);
    summary["theory"] = {{"gamma", theory.gamma},
                         {"r_star_daily", theory.r_star_daily},
                         {"ln_r_star_daily", std::log(theory.r_star_daily)},
                         {"r_star_annualized", theory.annualized(c.market.days_per_year)},
                         {"sigma_star", theory.sigma_star}};
    summary["measured_over_theory"] =
        stats.pooled_returns.mean_log_return / std::log(theory.r_star_daily);

    if (cfg.kind == ExperimentKind::aspp) write_ensemble_outputs(dir, c, stats);
    return summary;
}

json run_regimes(const ExperimentConfig& cfg, const fs::path& dir, int threads,
                 RunCounters& counters) {
    const auto cmp = regime_comparison(cfg.cycle, cfg.regimes, threads);
    json summary;
    const std::pair<const char*, const EnsembleStats*> parts[] = {
        {"investment", &cmp.investment}, {"zero", &cmp.zero}, {"withdrawal", &cmp.withdrawal}};
    for (const auto& [name, stats] : parts) {
        write_ensemble_csv(dir / (std::string("regime_") + name + ".csv"), *stats);
        write_histogram_csv(dir / (std::string("cash_histograms_") + name + ".csv"),
                            stats->histograms);
        summary[name] = band_summary(*stats);
        counters.clamp_events += stats->clamp_events;
        counters.failures += stats->failures.size();
    }
    summary["flows"] = {{"investment", cfg.regimes.investment},
                        {"withdrawal", cfg.regimes.withdrawal},
                        {"horizon", cfg.regimes.horizon}};
    return summary;
}

json run_cycle(const ExperimentConfig& cfg, const fs::path& dir, int threads,
               RunCounters& counters, EnsembleStats* keep = nullptr) {
    EnsembleStats stats = run_ensemble(cfg.cycle, threads);
    counters = {stats.clamp_events, stats.failures.size()};
    write_ensemble_outputs(dir, cfg.cycle, stats);
    json summary = band_summary(stats);
    summary["target_rate"] = cfg.cycle.resolved_target_rate();
    summary["investment_start"] = cfg.cycle.pre_phase;
    summary["withdrawal_start"] = cfg.cycle.pre_phase + cfg.cycle.t_m;
    if (keep) *keep = std::move(stats);
    return summary;
}

json run_ponzi(const ExperimentConfig& cfg, const fs::path& dir) {
    const auto& pz = cfg.ponzi;
    const auto& sched = cfg.cycle.schedule;
    json summary;
    if (cfg.kind == ExperimentKind::ponzi_classical) {
        const auto sol = classical_ponzi_solve(pz.classical, sched, pz.horizon, pz.dt);
        write_ode_csv(dir / "ode.csv", sol);
        const auto collapse = collapse_time(sol);
        summary["collapse_time"] = collapse ? json(*collapse) : json(nullptr);
        summary["final_S"] = sol.S.back();
        summary["final_R"] = sol.R.back();
        if (pz.critical_exponent)
            summary["critical_exponent"] = critical_exponent(pz.classical, pz.critical);
    } else {
        const auto sol = speculative_ponzi_solve(pz.speculative, sched, pz.horizon, pz.dt);
        write_ode_csv(dir / "ode.csv", sol);
        const auto steady = steady_state_rate(sol, pz.steady_window);
        summary["steady_rate"] = steady.rate;
        summary["steady_spread"] = steady.spread;
        summary["stationary_payoff"] = stationary_payoff(pz.speculative.r_w, steady.rate);
        summary["bubble_peak_time"] = bubble_peak_time(sol.t, sol.S);
        summary["final_S"] = sol.S.back();
        summary["final_R"] = sol.R.back();
    }
    return summary;
}

json run_fit(const ExperimentConfig& cfg, const fs::path& dir, int threads,
             RunCounters& counters) {
    EnsembleStats stats;
    json summary = run_cycle(cfg, dir, threads, counters, &stats);
    const FitTarget target{stats.t, stats.mean_external_value};
    const double r_w = cfg.cycle.resolved_target_rate();
    const auto fit = fit_c0(target, cfg.cycle.schedule, r_w, cfg.cycle.t_m, cfg.fit);

    SpecPonziParams p;
    p.c0 = fit.c0;
    p.r_w = r_w;
    p.t_m = cfg.cycle.t_m;
    p.S0 = cfg.fit.S0;
    const double horizon =
        std::floor((cfg.cycle.horizon - cfg.fit.pre_phase) / cfg.fit.dt + 1e-9) * cfg.fit.dt;
    const auto sol = speculative_ponzi_solve(p, cfg.cycle.schedule, horizon, cfg.fit.dt);

    OdeSolution shifted = sol;
    for (double& t : shifted.t) t += cfg.fit.pre_phase;
    write_ode_csv(dir / "fit_ode.csv", shifted);

    const double agent_peak = bubble_peak_time(stats.t, stats.mean_external_value, cfg.fit.pre_phase);
    const double ode_peak = bubble_peak_time(shifted.t, shifted.S);
    summary["fit"] = {{"c0", fit.c0},
                      {"rmse", fit.rmse},
                      {"evaluations", fit.evaluations},
                      {"target_rate", r_w},
                      {"agent_peak_time", agent_peak},
                      {"ode_peak_time", ode_peak}};
    return summary;
}

}  // namespace

json run_experiment(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": " + ec.message());

    RunCounters counters;
    json summary;
    switch (cfg.kind) {
        case ExperimentKind::aspp:
        case ExperimentKind::stats:
            summary = run_zero_investment(cfg, dir, threads, counters);
            break;
        case ExperimentKind::regimes: summary = run_regimes(cfg, dir, threads, counters); break;
        case ExperimentKind::cycle: summary = run_cycle(cfg, dir, threads, counters); break;
        case ExperimentKind::ponzi_classical:
        case ExperimentKind::ponzi_speculative: summary = run_ponzi(cfg, dir); break;
        case ExperimentKind::fit_c0: summary = run_fit(cfg, dir, threads, counters); break;
    }
    summary["kind"] = std::string(to_string(cfg.kind));
    write_json(dir / (cfg.kind == ExperimentKind::stats ? "stats.json" : "summary.json"), summary);
    write_json(dir / "manifest.json", make_manifest(cfg, counters));
    return summary;
}

}  // namespace aspp

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "aspp/config.hpp"
#include "aspp/cycle.hpp"
#include "aspp/errors.hpp"

using namespace aspp;

namespace {

CycleConfig small_cycle(std::size_t paths = 6) {
    CycleConfig c = ExperimentConfig::default_cycle_config();
    c.market.population.n_agents = 100;
    c.market.engine.active_count = 25;
    c.schedule.first_year_total = 1000.0;
    c.pre_phase = 1.0;
    c.t_m = 1.0;
    c.horizon = 4.0;
    c.n_paths = paths;
    c.base_seed = 12345;
    return c;
}

void check_same(const SeriesBand& a, const SeriesBand& b) {
    CHECK(a.mean == b.mean);
    CHECK(a.sd == b.sd);
    CHECK(a.p10 == b.p10);
    CHECK(a.p50 == b.p50);
    CHECK(a.p90 == b.p90);
}

void check_same(const EnsembleStats& a, const EnsembleStats& b) {
    check_same(a.log_price, b.log_price);
    check_same(a.hazard_aspp, b.hazard_aspp);
    check_same(a.hazard_investor, b.hazard_investor);
    CHECK(a.mean_external_value == b.mean_external_value);
    CHECK(a.mean_flow_in == b.mean_flow_in);
    CHECK(a.pooled_returns.mean_log_return == b.pooled_returns.mean_log_return);
    CHECK(a.pooled_returns.excess_kurtosis == b.pooled_returns.excess_kurtosis);
    REQUIRE(a.histograms.size() == b.histograms.size());
    for (std::size_t i = 0; i < a.histograms.size(); ++i) {
        CHECK(a.histograms[i].edges == b.histograms[i].edges);
        CHECK(a.histograms[i].counts == b.histograms[i].counts);
    }
}

}  // namespace

TEST_CASE("ledger at a constant price accumulates matured inflow") {
    const double dt = 1.0 / 360.0;
    ScheduleSpec s;
    s.first_year_total = 5000.0;
    InvestorLedger ledger(360, dt);
    for (std::size_t day = 1; day <= 900; ++day) {
        const double tau = double(day - 1) * dt;
        const double gross = s.cumulative(tau + dt) - s.cumulative(tau);
        ledger.advance(1.0, 1.0, gross, false, 0.41);
        const double expected = day > 360 ? s.cumulative(double(day - 360) * dt) : 0.0;
        if (expected > 0.0)
            CHECK(std::abs(ledger.value() / expected - 1.0) < 1e-9);
        else
            CHECK(ledger.value() == 0.0);
    }
    CHECK(ledger.warm());
}

TEST_CASE("ledger marks matured money to the price change over its holding period") {
    InvestorLedger ledger(2, 0.5);
    ledger.advance(1.0, 1.0, 10.0, false, 0.0);
    ledger.advance(1.0, 1.0, 0.0, false, 0.0);
    ledger.advance(3.0, 1.0, 0.0, false, 0.0);
    CHECK(ledger.value() == doctest::Approx(30.0));
}

TEST_CASE("path records are deterministic and consistently shaped") {
    const auto cfg = small_cycle();
    const auto a = run_path(cfg, 2);
    const auto b = run_path(cfg, 2);
    const auto c = run_path(cfg, 3);
    CHECK(a.size() == cfg.total_days() + 1);
    for (auto* v : {&a.price, &a.log_price, &a.hazard_aspp, &a.hazard_investor, &a.total_risk,
                    &a.flow_in, &a.withdrawable, &a.external_value, &a.total_cash})
        CHECK(v->size() == a.size());
    CHECK(a.price == b.price);
    CHECK(a.hazard_investor == b.hazard_investor);
    CHECK(a.price != c.price);
    for (std::size_t i = 1; i < a.snapshots.size(); ++i) CHECK(a.snapshots[i].t > a.snapshots[i - 1].t);
    CHECK(a.snapshots.size() == 4);
}

TEST_CASE("investor hazard stays off until withdrawals start and never decreases") {
    const auto cfg = small_cycle();
    const auto rec = run_path(cfg, 0);
    const double start = cfg.pre_phase + cfg.t_m;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        if (rec.t[i] <= start + 1e-12) CHECK(rec.hazard_investor[i] == 0.0);
        if (i) CHECK(rec.hazard_investor[i] >= rec.hazard_investor[i - 1]);
        CHECK(rec.total_risk[i] == rec.hazard_aspp[i] + rec.hazard_investor[i]);
        CHECK(rec.withdrawable[i] >= 0.0);
    }
    CHECK(rec.hazard_investor.back() > 0.0);
}

TEST_CASE("a cycle with no investment is the zero-investment market") {
    auto cycle = small_cycle();
    cycle.schedule.first_year_total = 0.0;
    auto zero = cycle;
    zero.policy = FlowPolicy::constant;
    zero.constant_flow = 0.0;
    zero.checkpoints = cycle.resolved_checkpoints();
    const auto a = run_path(cycle, 1);
    const auto b = run_path(zero, 1);
    CHECK(a.price == b.price);
    CHECK(a.hazard_aspp == b.hazard_aspp);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.flow_in[i] == 0.0);
        CHECK(a.withdrawable[i] == 0.0);
        CHECK(a.hazard_investor[i] == 0.0);
    }
}

TEST_CASE("inflow follows the schedule during the investment phase") {
    auto cfg = small_cycle();
    cfg.market.population.greed_fear.log_variance = 0.0;
    const auto rec = run_path(cfg, 0);
    const std::size_t pre = 360, lag = 360;
    double invested = 0.0;
    for (std::size_t d = pre + 1; d <= pre + lag; ++d) invested += rec.flow_in[d];
    CHECK(invested == doctest::Approx(cfg.schedule.cumulative(1.0)).epsilon(1e-9));
    for (std::size_t d = 0; d <= pre; ++d) CHECK(rec.flow_in[d] == 0.0);
}

TEST_CASE("ensemble of one path reproduces the path") {
    auto cfg = small_cycle(1);
    const auto stats = run_ensemble(cfg, 1);
    const auto rec = run_path(cfg, 0);
    CHECK(stats.log_price.mean == rec.log_price);
    CHECK(stats.hazard_aspp.mean == rec.hazard_aspp);
    CHECK(stats.hazard_aspp.p50 == rec.hazard_aspp);
    CHECK(stats.mean_external_value == rec.external_value);
    CHECK(stats.n_ok == 1);
    CHECK(stats.failures.empty());
}

TEST_CASE("ensemble aggregates ignore thread count and scheduling") {
    auto cfg = small_cycle(70);  // more than one block of paths
    cfg.horizon = 3.0;
    const auto serial = run_ensemble_serial(cfg);
    for (int threads : {1, 4, 8}) {
        CAPTURE(threads);
        check_same(serial, run_ensemble(cfg, threads));
    }
    check_same(run_ensemble(cfg, 2), run_ensemble(cfg, 2));
}

TEST_CASE("ensemble percentiles bracket the mean and histograms count every agent") {
    const auto cfg = small_cycle(20);
    const auto s = run_ensemble(cfg, 2);
    for (std::size_t d = 0; d < s.t.size(); d += 30) {
        CHECK(s.log_price.p10[d] <= s.log_price.p50[d]);
        CHECK(s.log_price.p50[d] <= s.log_price.p90[d]);
        CHECK(s.hazard_aspp.sd[d] >= 0.0);
    }
    for (const auto& h : s.histograms) {
        std::uint64_t total = 0;
        for (auto c : h.counts) total += c;
        CHECK(total == 20 * 100);
        CHECK(h.edges.size() == h.counts.size() + 1);
        CHECK(h.edges.front() == 0.0);
    }
}

TEST_CASE("failing paths are reported and the ensemble keeps the survivors") {
    auto cfg = small_cycle(4);
    cfg.policy = FlowPolicy::constant;
    cfg.constant_flow = -1e7;
    cfg.horizon = 2.0;
    const auto s = run_ensemble(cfg, 1);
    CHECK(s.n_paths == 4);
    CHECK(s.failures.size() + s.n_ok == 4);
    CHECK_FALSE(s.failures.empty());
}

TEST_CASE("zero-investment hazard grows as cash concentrates") {
    auto cfg = small_cycle(30);
    cfg.policy = FlowPolicy::constant;
    cfg.horizon = 3.0;
    const auto s = run_ensemble(cfg, 2);
    for (std::size_t d = 30; d < s.t.size(); d += 30)
        CHECK(s.hazard_aspp.mean[d] >= s.hazard_aspp.mean[d - 30]);
}

TEST_CASE("regimes differ only in their flow") {
    auto cfg = small_cycle(20);
    RegimeFlows flows{1000.0, 200.0, 1.0};
    const auto cmp = regime_comparison(cfg, flows, 2);
    const std::size_t last = cmp.zero.t.size() - 1;
    CHECK(cmp.investment.hazard_aspp.mean[last] < cmp.zero.hazard_aspp.mean[last]);
    CHECK(cmp.zero.hazard_aspp.mean[last] < cmp.withdrawal.hazard_aspp.mean[last]);
    CHECK(cmp.withdrawal.log_price.mean[last] < 0.0);
    CHECK(cmp.zero.log_price.mean[0] == cmp.investment.log_price.mean[0]);
}

TEST_CASE("c0 fit recovers the generating value on model output") {
    ScheduleSpec s;
    s.first_year_total = 1000.0;
    SpecPonziParams p;
    p.c0 = 0.001;
    const double dt = 1.0 / 360.0;
    const auto sol = speculative_ponzi_solve(p, s, 12.0, dt);
    FitTarget target;
    for (std::size_t i = 0; i <= 15 * 360; i += 5) {
        target.t.push_back(double(i) * dt);
        target.values.push_back(i < 3 * 360 ? 0.0 : sol.S[i - 3 * 360]);
    }
    const auto fit = fit_c0(target, s, p.r_w, p.t_m);
    CHECK(std::abs(fit.c0 / 0.001 - 1.0) < 0.05);
    CHECK(fit.rmse < 1e-3 * *std::max_element(sol.S.begin(), sol.S.end()));

    FitOptions narrow;
    narrow.low = 1e-5;
    narrow.high = 1e-4;
    CHECK_THROWS_AS(fit_c0(target, s, p.r_w, p.t_m, narrow), BracketError);
}

TEST_CASE("bubble peak time") {
    std::vector<double> t, v;
    for (int i = 0; i <= 100; ++i) {
        t.push_back(i * 0.1);
        v.push_back(i <= 40 ? double(i) : 40.0 - 2.0 * (i - 40));
    }
    CHECK(bubble_peak_time(t, v) == doctest::Approx(4.0));
    CHECK(bubble_peak_time(t, v, 5.0) == doctest::Approx(5.0));
    std::vector<double> rising(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) rising[i] = t[i];
    CHECK(bubble_peak_time(t, rising) == doctest::Approx(10.0));
}

TEST_CASE("cycle configuration checks") {
    auto cfg = small_cycle();
    cfg.horizon = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.policy = FlowPolicy::constant;
    CHECK_NOTHROW(cfg.validate());
    cfg.n_paths = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(small_cycle().resolved_target_rate() == doctest::Approx(0.4036).epsilon(1e-3));
}

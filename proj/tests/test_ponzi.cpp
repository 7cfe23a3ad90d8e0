#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "aspp/errors.hpp"
#include "aspp/ponzi.hpp"
#include "classical_oracle.hpp"

using namespace aspp;

namespace {

constexpr double kDay = 1.0 / 360.0;

ScheduleSpec schedule(ScheduleKind kind, double total = 5000.0, double a = 0.1) {
    ScheduleSpec s;
    s.kind = kind;
    s.first_year_total = total;
    s.rate_param = a;
    return s;
}

double max_rel_error_past(const OdeSolution& sol, double t_m, const oracle::Classical& o) {
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        if (sol.t[i] <= t_m) continue;
        const double exact = o.R(sol.t[i]);
        worst = std::max(worst, std::abs(sol.R[i] - exact) / std::abs(exact));
    }
    return worst;
}

}  // namespace

TEST_CASE("schedule normalization") {
    CHECK(schedule_eval(schedule(ScheduleKind::constant), 3.7) == 5000.0);
    CHECK(schedule_eval(schedule(ScheduleKind::constant), -0.1) == 0.0);
    const auto e = schedule(ScheduleKind::exponential);
    CHECK(e.coefficient() == doctest::Approx(0.1 * 5000.0 / (std::exp(0.1) - 1.0)).epsilon(1e-14));
    CHECK(e.coefficient() == doctest::Approx(4754.17).epsilon(1e-6));
    CHECK(schedule_eval(e, 0.0) == e.coefficient());
    CHECK(schedule_eval(schedule(ScheduleKind::linear), 1.0) == doctest::Approx(10000.0));
    for (auto kind : {ScheduleKind::constant, ScheduleKind::linear, ScheduleKind::exponential}) {
        const auto s = schedule(kind);
        CHECK(s.cumulative(1.0) == doctest::Approx(5000.0).epsilon(1e-13));
        double sum = 0.0;  // independent midpoint quadrature of the first year
        const int n = 20000;
        for (int i = 0; i < n; ++i) sum += s((i + 0.5) / n) / n;
        CHECK(sum == doctest::Approx(5000.0).epsilon(1e-8));
    }
    CHECK(schedule_kind_from_string("linear") == ScheduleKind::linear);
    CHECK_THROWS_AS(schedule_kind_from_string("quadratic"), ConfigError);
}

TEST_CASE("classical scheme without inflow is a plain exponential") {
    PonziParams p;
    p.r_n = 0.05;
    p.S0 = 100.0;
    const auto sol = classical_ponzi_solve(p, schedule(ScheduleKind::constant, 0.0), 10.0, kDay);
    CHECK(std::abs(sol.S.back() - 100.0 * std::exp(0.5)) < 1e-8);
    for (double r : sol.R) CHECK(r == 0.0);
}

TEST_CASE("classical scheme matches the closed form") {
    SUBCASE("constant schedule, promised above withdrawal rate") {
        PonziParams p{0.02, 0.41, 0.3, 3.0, 50.0};
        const auto s = schedule(ScheduleKind::constant);
        const auto sol = classical_ponzi_solve(p, s, 20.0, kDay);
        const oracle::Classical o{5000.0, 0.0, p.r_n, p.r_p, p.r_w, p.t_m, p.S0};
        CHECK(max_rel_error_past(sol, p.t_m, o) < 1e-6);
        const double scale = *std::max_element(sol.S.begin(), sol.S.end(),
                                               [](double x, double y) { return std::abs(x) < std::abs(y); });
        for (std::size_t i = 0; i < sol.size(); i += 97)
            CHECK(std::abs(sol.S[i] - o.S(sol.t[i])) < 1e-6 * std::abs(scale));
    }
    SUBCASE("exponential schedule, equal rates") {
        PonziParams p;
        const auto s = schedule(ScheduleKind::exponential);
        const auto sol = classical_ponzi_solve(p, s, 20.0, kDay);
        const oracle::Classical o{s.coefficient(), 0.1, p.r_n, p.r_p, p.r_w, p.t_m, p.S0};
        CHECK(max_rel_error_past(sol, p.t_m, o) < 1e-6);
        for (std::size_t i = 0; i <= std::size_t(3 * 360); ++i) CHECK(sol.R[i] == 0.0);
    }
}

TEST_CASE("constant and linear schemes run dry, collapse time agrees with the closed form") {
    PonziParams p;
    for (auto kind : {ScheduleKind::constant, ScheduleKind::linear}) {
        const auto sol = classical_ponzi_solve(p, schedule(kind), 30.0, kDay);
        const auto tc = collapse_time(sol);
        REQUIRE(tc.has_value());
        CHECK(*tc > p.t_m);
        if (kind == ScheduleKind::constant) {
            const oracle::Classical o{5000.0, 0.0, 0.0, p.r_p, p.r_w, p.t_m, 0.0};
            double lo = p.t_m + 1e-9, hi = 30.0;  // S > 0 just past maturity
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                (o.S(mid) > 0.0 ? lo : hi) = mid;
            }
            CHECK(std::abs(*tc - lo) < kDay);
        }
    }
}

TEST_CASE("collapse detection") {
    OdeSolution flat;
    OdeSolution line;
    for (int i = 0; i <= 100; ++i) {
        const double t = i * 0.02;
        flat.t.push_back(t);
        flat.S.push_back(3.0);
        line.t.push_back(t);
        line.S.push_back(1.0 - t);
    }
    CHECK_FALSE(collapse_time(flat).has_value());
    REQUIRE(collapse_time(line).has_value());
    CHECK(std::abs(*collapse_time(line) - 1.0) <= 0.02);
}

TEST_CASE("critical exponent sits at the promised rate") {
    PonziParams p;
    CHECK(std::abs(critical_exponent(p) - 0.41) < 0.02);
    p.r_p = p.r_w = 0.2;
    CHECK(std::abs(critical_exponent(p) - 0.2) < 0.02);
    PonziParams q;
    const auto sol = classical_ponzi_solve(q, ScheduleSpec::unit_exponential(0.51), 60.0, kDay);
    CHECK_FALSE(collapse_time(sol).has_value());
    CriticalExponentOptions narrow;
    narrow.low = 0.5;
    CHECK_THROWS_AS(critical_exponent(q, narrow), BracketError);
}

TEST_CASE("scaling the schedule mass scales the classical solution") {
    PonziParams p;
    const auto a = classical_ponzi_solve(p, schedule(ScheduleKind::linear, 1000.0), 10.0, kDay);
    const auto b = classical_ponzi_solve(p, schedule(ScheduleKind::linear, 3000.0), 10.0, kDay);
    for (std::size_t i = 0; i < a.size(); i += 50)
        CHECK(b.R[i] == doctest::Approx(3.0 * a.R[i]).epsilon(1e-12));
}

TEST_CASE("grid must align with maturity") {
    PonziParams p;
    p.t_m = 1.0 / 7.0;
    CHECK_THROWS_AS(classical_ponzi_solve(p, schedule(ScheduleKind::constant), 1.0, 0.1),
                    ConfigError);
}

TEST_CASE("speculative scheme without inflow stays put") {
    SpecPonziParams p;
    p.S0 = 7.0;
    const auto sol = speculative_ponzi_solve(p, schedule(ScheduleKind::constant, 0.0), 10.0, kDay);
    for (std::size_t i = 0; i < sol.size(); ++i) {
        CHECK(sol.S[i] == 7.0);
        CHECK(sol.R[i] == 0.0);
        CHECK(sol.r_n[i] == 0.0);
    }
}

TEST_CASE("speculative delay term agrees with direct quadrature of the rate") {
    // The trapezoid reference runs on a 32x finer solve so its own error stays
    // well below the tolerance through the sharp drop in r_n after maturity.
    SpecPonziParams p;
    const auto s = schedule(ScheduleKind::exponential);
    const auto sol = speculative_ponzi_solve(p, s, 20.0, kDay);
    const std::size_t fine_factor = 32;
    const double fine_dt = kDay / double(fine_factor);
    const auto fine = speculative_ponzi_solve(p, s, 20.0, fine_dt);
    const std::size_t lag = 3 * 360;
    double worst = 0.0;
    for (std::size_t i = lag; i < sol.size(); i += 37) {
        double integral = 0.0;
        for (std::size_t j = (i - lag) * fine_factor; j < i * fine_factor; ++j)
            integral += 0.5 * fine_dt * (fine.r_n[j] + fine.r_n[j + 1]);
        const double stored = std::exp(sol.J[i] - sol.J[i - lag]);
        worst = std::max(worst, std::abs(stored / std::exp(integral) - 1.0));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("speculative bubble shape with exponential inflow") {
    SpecPonziParams p;
    const auto sol = speculative_ponzi_solve(p, schedule(ScheduleKind::exponential), 40.0, kDay);
    const auto peak = std::max_element(sol.S.begin(), sol.S.begin() + 8 * 360);
    const double t_peak = sol.t[std::size_t(peak - sol.S.begin())];
    CHECK(t_peak > p.t_m);
    CHECK(t_peak < p.t_m + 5.0);
    const double trough = *std::min_element(peak, sol.S.end());
    CHECK(trough <= 0.7 * *peak);
    bool negative = false;
    for (std::size_t i = 0; i < sol.size(); ++i) negative |= sol.t[i] > p.t_m && sol.r_n[i] < 0.0;
    CHECK(negative);
    const auto ss = steady_state_rate(sol, 5.0);
    CHECK(ss.rate > 0.0);
    CHECK(ss.rate < p.r_w);
    const double payoff = stationary_payoff(p.r_w, ss.rate);
    CHECK(std::isfinite(payoff));
    CHECK(payoff > 0.0);
}

TEST_CASE("steady state of a flat rate") {
    OdeSolution sol;
    sol.dt = 0.1;
    for (int i = 0; i <= 200; ++i) {
        sol.t.push_back(i * 0.1);
        sol.r_n.push_back(0.05);
    }
    const auto ss = steady_state_rate(sol, 5.0);
    CHECK(ss.rate == doctest::Approx(0.05));
    CHECK(ss.spread == 0.0);
    CHECK_THROWS_AS(steady_state_rate(sol, 15.0), DomainError);
}

TEST_CASE("runaway speculative growth reports divergence") {
    SpecPonziParams p;
    p.c0 = 0.01;
    p.r_w = 0.01;
    try {
        speculative_ponzi_solve(p, schedule(ScheduleKind::exponential, 1e5, 1.0), 40.0, kDay);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.last_finite_time() > 0.0);
        CHECK(e.last_finite_time() < 40.0);
    }
}

TEST_CASE("step halving barely moves the horizon values") {
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); };
    PonziParams p;
    for (auto kind : {ScheduleKind::constant, ScheduleKind::linear, ScheduleKind::exponential}) {
        const auto s = schedule(kind);
        const auto c1 = classical_ponzi_solve(p, s, 20.0, kDay);
        const auto c2 = classical_ponzi_solve(p, s, 20.0, kDay / 2);
        CHECK(rel(c1.S.back(), c2.S.back()) < 1e-4);
        CHECK(rel(c1.R.back(), c2.R.back()) < 1e-4);
        SpecPonziParams q;
        const auto s1 = speculative_ponzi_solve(q, s, 40.0, kDay);
        const auto s2 = speculative_ponzi_solve(q, s, 40.0, kDay / 2);
        CHECK(rel(s1.S.back(), s2.S.back()) < 1e-4);
        CHECK(rel(s1.R.back(), s2.R.back()) < 1e-4);
    }
}

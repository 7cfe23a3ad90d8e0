#include "aspp/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aspp/errors.hpp"

namespace aspp {

namespace {

std::size_t to_days(double years, double days_per_year) {
    return static_cast<std::size_t>(std::llround(years * days_per_year));
}

}  // namespace

void MarketConfig::validate() const {
    population.greed_fear.validate();
    if (population.n_agents < 1) throw ConfigError("market.n_agents >= 1 violated");
    engine.validate(population.n_agents);
    if (!(days_per_year > 0.0)) throw ConfigError("market.days_per_year > 0 violated");
}

void CycleConfig::validate() const {
    market.validate();
    hazard.validate();
    schedule.validate();
    if (!(pre_phase >= 0.0)) throw ConfigError("cycle.pre_phase >= 0 violated");
    if (!(t_m >= 0.0)) throw ConfigError("cycle.t_m >= 0 violated");
    if (!(horizon > 0.0)) throw ConfigError("cycle.horizon > 0 violated");
    if (policy == FlowPolicy::cycle && !(horizon > pre_phase + t_m))
        throw ConfigError("cycle.horizon > pre_phase + t_m violated");
    if (n_paths < 1) throw ConfigError("cycle.n_paths >= 1 violated");
    if (histogram_bins < 1) throw ConfigError("cycle.histogram_bins >= 1 violated");
    if (target_rate && !std::isfinite(*target_rate))
        throw ConfigError("cycle.target_rate must be finite");
}

double CycleConfig::resolved_target_rate() const {
    if (target_rate) return *target_rate;
    const auto& gf = market.population.greed_fear;
    const auto theory = theoretical_return(std::exp(gf.mean_log_greed), std::exp(gf.mean_log_fear),
                                           market.population.n_agents, market.engine.active_count);
    return theory.annualized(market.days_per_year);
}

std::vector<double> CycleConfig::resolved_checkpoints() const {
    std::vector<double> out = checkpoints;
    if (out.empty()) {
        out = {0.0, horizon};
        if (policy == FlowPolicy::cycle) {
            out.push_back(pre_phase);
            out.push_back(pre_phase + t_m);
        }
    }
    std::erase_if(out, [&](double t) { return t < 0.0 || t > horizon; });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t CycleConfig::total_days() const { return to_days(horizon, market.days_per_year); }

InvestorLedger::InvestorLedger(std::size_t maturity_days, double day_length)
    : maturity_days_(maturity_days),
      day_length_(day_length),
      price_history_(maturity_days),
      inflow_history_(maturity_days) {}

double InvestorLedger::advance(double price, double prev_price, double gross_inflow,
                               bool withdrawing, double r_w) {
    const double realized = (price / prev_price - 1.0) / day_length_;
    double matured = 0.0;
    if (maturity_days_ == 0) {
        matured = gross_inflow;
    } else if (filled_ >= maturity_days_) {
        matured = inflow_history_[head_] * price / price_history_[head_];
    }
    const double drift = realized - (withdrawing ? r_w : 0.0);
    value_ += day_length_ * drift * value_ + matured;

    if (maturity_days_ > 0) {
        price_history_[head_] = price;
        inflow_history_[head_] = gross_inflow;
        head_ = (head_ + 1) % maturity_days_;
    }
    ++filled_;
    return value_;
}

PathRecord run_path(const CycleConfig& cfg, std::size_t path_index) {
    cfg.validate();
    const auto& mk = cfg.market;
    const double dt = mk.day_length();
    const std::size_t days = cfg.total_days();
    const std::size_t pre_days = to_days(cfg.pre_phase, mk.days_per_year);
    const std::size_t lag = to_days(cfg.t_m, mk.days_per_year);
    const std::size_t withdraw_day = pre_days + lag;
    const double r_w = cfg.resolved_target_rate();
    const bool cycle = cfg.policy == FlowPolicy::cycle;
    const bool has_investors = cycle && cfg.schedule.first_year_total > 0.0;

    MarketState state =
        init_population(mk.population, Rng::for_stream(cfg.base_seed, path_index));
    InvestorLedger ledger(lag, dt);

    PathRecord rec;
    for (auto* v : {&rec.t, &rec.price, &rec.log_price, &rec.hazard_aspp, &rec.hazard_investor,
                    &rec.total_risk, &rec.flow_in, &rec.withdrawable, &rec.external_value,
                    &rec.total_cash, &rec.realized_rate})
        v->reserve(days + 1);

    const auto checkpoints = cfg.resolved_checkpoints();
    std::vector<std::size_t> checkpoint_days;
    for (double c : checkpoints) checkpoint_days.push_back(to_days(c, mk.days_per_year));
    std::size_t next_checkpoint = 0;

    std::vector<double> cash(state.agents.size());
    double Hp = 0.0;
    double prev_integrand = 0.0;

    auto record = [&](std::size_t day, double flow, double realized) {
        for (std::size_t i = 0; i < state.agents.size(); ++i) cash[i] = state.agents[i].cash;
        const double h = cash_concentration(cash, cfg.hazard.gamma1);
        const double Ha = hazard_aspp(h, cfg.hazard);
        rec.t.push_back(double(day) * dt);
        rec.price.push_back(state.price);
        rec.log_price.push_back(std::log(state.price));
        rec.hazard_aspp.push_back(Ha);
        rec.hazard_investor.push_back(Hp);
        rec.total_risk.push_back(total_risk(Ha, Hp));
        rec.flow_in.push_back(flow);
        rec.withdrawable.push_back(ledger.value());
        rec.external_value.push_back(state.external_shares * state.price);
        rec.total_cash.push_back(state.total_cash());
        rec.realized_rate.push_back(realized);
        while (next_checkpoint < checkpoint_days.size() && checkpoint_days[next_checkpoint] == day) {
            rec.snapshots.push_back({checkpoints[next_checkpoint], cash});
            ++next_checkpoint;
        }
    };

    record(0, 0.0, 0.0);
    for (std::size_t day = 1; day <= days; ++day) {
        const std::size_t elapsed = day - 1;  // whole days before this session
        const double t = double(elapsed) * dt;
        const bool investing = cycle && elapsed >= pre_days;
        const bool withdrawing = cycle && elapsed >= withdraw_day;

        double gross = 0.0;
        if (investing) {
            // Exact schedule mass over the day, so cumulative inflow telescopes.
            const double tau = double(elapsed - pre_days) * dt;
            gross = cfg.schedule.cumulative(tau + dt) - cfg.schedule.cumulative(tau);
        }
        double flow = cycle ? gross : cfg.constant_flow * dt;
        if (withdrawing) flow -= r_w * ledger.value() * dt;

        const auto outcome = trading_session(state, mk.engine, flow, mk.signal, t);
        if (outcome.clamped) ++rec.clamp_events;

        ledger.advance(state.price, state.prev_price, gross, withdrawing, r_w);
        const double realized = (state.price / state.prev_price - 1.0) / dt;

        // Unrealized-profit risk accrues on the investor clock from maturity.
        const double integrand = std::exp(r_w - realized);
        if (has_investors && day > withdraw_day)
            Hp += cfg.hazard.gamma3 * 0.5 * dt * (prev_integrand + integrand);
        prev_integrand = integrand;

        record(day, outcome.cash_flow_in, realized);
    }
    return rec;
}

double EnsembleStats::cumulative_mean_flow() const {
    double total = 0.0;
    for (double x : mean_flow_in) total += x;
    return total;
}

RegimeComparison regime_comparison(const CycleConfig& cfg, const RegimeFlows& flows,
                                   int threads) {
    auto variant = [&](double flow_per_year) {
        CycleConfig c = cfg;
        c.policy = FlowPolicy::constant;
        c.constant_flow = flow_per_year;
        c.horizon = flows.horizon;
        c.checkpoints.clear();
        return c;
    };
    RegimeComparison out;
    out.flows = flows;
    out.investment = run_ensemble(variant(flows.investment), threads);
    out.zero = run_ensemble(variant(0.0), threads);
    out.withdrawal = run_ensemble(variant(-flows.withdrawal), threads);
    return out;
}

double fit_objective(double c0, const FitTarget& target, const ScheduleSpec& schedule,
                     double r_w, double t_m, const FitOptions& opts) {
    if (target.t.size() != target.values.size() || target.t.empty())
        throw DomainError("fit target: time and value series must be nonempty and equal length");
    const double horizon = target.t.back() - opts.pre_phase;
    if (!(horizon > 0.0)) throw DomainError("fit target ends before the ODE clock starts");
    const double steps = std::floor(horizon / opts.dt + 1e-9);

    SpecPonziParams p;
    p.c0 = c0;
    p.r_w = r_w;
    p.t_m = t_m;
    p.S0 = opts.S0;
    OdeSolution sol;
    try {
        sol = speculative_ponzi_solve(p, schedule, steps * opts.dt, opts.dt);
    } catch (const DivergenceError&) {
        return std::numeric_limits<double>::infinity();
    }

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < target.t.size(); ++i) {
        const double s = target.t[i] - opts.pre_phase;
        if (s < -1e-9) continue;
        const auto node = static_cast<std::size_t>(std::llround(s / opts.dt));
        if (node >= sol.size()) break;
        const double d = sol.S[node] - target.values[i];
        sum += d * d;
        ++count;
    }
    if (count == 0) throw DomainError("fit target has no nodes on the ODE clock");
    return std::sqrt(sum / double(count));
}

FitResult fit_c0(const FitTarget& target, const ScheduleSpec& schedule, double r_w, double t_m,
                 const FitOptions& opts) {
    if (!(opts.low > 0.0 && opts.low < opts.high))
        throw ConfigError("fit bracket must satisfy 0 < low < high");
    const double a0 = std::log(opts.low), b0 = std::log(opts.high);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

    std::size_t evaluations = 0;
    auto f = [&](double x) {
        ++evaluations;
        return fit_objective(std::exp(x), target, schedule, r_w, t_m, opts);
    };

    double a = a0, b = b0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > opts.tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    const double edge = 1e-3 * (b0 - a0);
    if (x - a0 < edge || b0 - x < edge)
        throw BracketError("fit_c0: bracket too narrow, minimum at endpoint", opts.low, opts.high);
    const double c0 = std::exp(x);
    return {c0, fit_objective(c0, target, schedule, r_w, t_m, opts), evaluations + 1};
}

double bubble_peak_time(const std::vector<double>& t, const std::vector<double>& values,
                        double t_start, double drawdown) {
    if (t.size() != values.size() || t.empty())
        throw DomainError("bubble_peak_time: series must be nonempty and equal length");
    std::size_t best = t.size();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_start) continue;
        if (best == t.size() || values[i] > values[best]) best = i;
        if (values[i] < (1.0 - drawdown) * values[best]) return t[best];
    }
    if (best == t.size()) throw DomainError("bubble_peak_time: no nodes after t_start");
    return t[best];
}

}  // namespace aspp

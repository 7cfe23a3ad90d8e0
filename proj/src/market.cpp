#include "aspp/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aspp/errors.hpp"

namespace aspp {

void GreedFearSpec::validate() const {
    if (!(log_variance >= 0.0) || !std::isfinite(log_variance))
        throw ConfigError("log_variance >= 0 violated: " + std::to_string(log_variance));
    if (!(std::abs(correlation) <= 1.0))
        throw ConfigError("correlation ∈ [-1,1] violated: " + std::to_string(correlation));
    const double three_sigma = 3.0 * std::sqrt(log_variance);
    if (mean_log_greed - three_sigma < 0.0)
        throw ConfigError("mean_log_greed - 3*sqrt(log_variance) >= 0 violated");
    if (mean_log_fear - three_sigma < 0.0)
        throw ConfigError("mean_log_fear - 3*sqrt(log_variance) >= 0 violated");
}

SignalSchedule::SignalSchedule(std::vector<Knot> knots, double base_greed_amplitude,
                               double base_fear_amplitude)
    : knots_(std::move(knots)),
      base_greed_amplitude_(base_greed_amplitude),
      base_fear_amplitude_(base_fear_amplitude) {
    if (base_greed_amplitude_ < 0.0 || base_fear_amplitude_ < 0.0)
        throw ConfigError("signal amplitudes must be >= 0");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        if (knots_[i].value < 0.0 || knots_[i].value > 1.0)
            throw ConfigError("signal knot value must lie in [0,1]");
        if (i > 0 && knots_[i].time < knots_[i - 1].time)
            throw ConfigError("signal knots must be sorted by time");
    }
}

SignalSchedule SignalSchedule::constant(double value) {
    return SignalSchedule({{0.0, value}});
}

double SignalSchedule::operator()(double t) const {
    if (knots_.empty()) return 1.0;
    if (t <= knots_.front().time) return knots_.front().value;
    if (t >= knots_.back().time) return knots_.back().value;
    auto hi = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](double x, const Knot& k) { return x < k.time; });
    auto lo = hi - 1;
    const double span = hi->time - lo->time;
    if (span <= 0.0) return hi->value;
    const double w = (t - lo->time) / span;
    return lo->value + w * (hi->value - lo->value);
}

GreedFearPair SignalSchedule::homogeneous_factors(double t) const {
    const double s = (*this)(t);
    return {1.0 + base_greed_amplitude_ * s, 1.0 + base_fear_amplitude_ * s};
}

double MarketState::total_cash() const {
    return std::accumulate(agents.begin(), agents.end(), 0.0,
                           [](double acc, const AgentPortfolio& a) { return acc + a.cash; });
}

double MarketState::total_agent_shares() const {
    double total = 0.0;
    for (const auto& a : agents) total += a.stock_value;
    return total / price;
}

std::vector<std::pair<double, double>> sample_log_greed_fear(const GreedFearSpec& gf,
                                                             std::size_t n, Rng& rng) {
    gf.validate();
    const double sigma = std::sqrt(gf.log_variance);
    const double rho = gf.correlation;
    const double orth = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    std::vector<std::pair<double, double>> out;
    out.reserve(n);
    while (out.size() < n) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        const double lg = gf.mean_log_greed + sigma * z1;
        const double lf = gf.mean_log_fear + sigma * (rho * z1 + orth * z2);
        // Rejection keeps the joint shape on the admissible quadrant.
        if (lg < 0.0 || lf < 0.0) continue;
        out.emplace_back(lg, lf);
    }
    return out;
}

std::vector<GreedFearPair> sample_greed_fear(const GreedFearSpec& gf, std::size_t n, Rng& rng) {
    auto logs = sample_log_greed_fear(gf, n, rng);
    std::vector<GreedFearPair> out;
    out.reserve(n);
    for (const auto& [lg, lf] : logs) out.push_back({std::exp(lg), std::exp(lf)});
    return out;
}

MarketState init_population(const PopulationSpec& spec, Rng rng) {
    if (spec.n_agents < 1) throw ConfigError("n_agents >= 1 violated");
    if (!(spec.initial_cash > 0.0)) throw ConfigError("initial_cash > 0 violated");
    if (!(spec.initial_k > 0.0)) throw ConfigError("initial_k > 0 violated");
    if (!(spec.stock_noise_range >= 0.0)) throw ConfigError("stock_noise_range >= 0 violated");
    if (!(spec.initial_price > 0.0)) throw ConfigError("initial_price > 0 violated");
    spec.greed_fear.validate();

    MarketState state;
    state.agents.resize(spec.n_agents);
    const auto factors = sample_greed_fear(spec.greed_fear, spec.n_agents, rng);
    for (std::size_t i = 0; i < spec.n_agents; ++i) {
        auto& a = state.agents[i];
        const double eta =
            spec.stock_noise_range > 0.0 ? rng.uniform(0.0, spec.stock_noise_range) : 0.0;
        a.cash = spec.initial_cash;
        a.target_ratio = spec.initial_k;
        a.stock_value = spec.initial_cash * spec.initial_k + eta;
        a.greed = factors[i].greed;
        a.fear = factors[i].fear;
    }
    state.price = spec.initial_price;
    state.prev_price = spec.initial_price;
    state.draw_order.resize(spec.n_agents);
    std::iota(state.draw_order.begin(), state.draw_order.end(), 0U);
    state.rng = std::move(rng);
    return state;
}

MarketState init_population(const PopulationSpec& spec, std::uint64_t seed) {
    return init_population(spec, Rng(seed));
}

GreedFearPair effective_factors(const AgentPortfolio& agent, const SignalSchedule& signal,
                                double t) {
    const double s = signal(t);
    return {1.0 + (agent.greed - 1.0) * s, 1.0 + (agent.fear - 1.0) * s};
}

}  // namespace aspp

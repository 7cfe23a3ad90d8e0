#include "aspp/engine.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "aspp/errors.hpp"

namespace aspp {

void EngineParams::validate(std::size_t n_agents) const {
    if (active_count < 1 || active_count > n_agents)
        throw ConfigError("1 <= m_active <= n_agents violated");
    if (clearance_sign != 1.0 && clearance_sign != -1.0)
        throw ConfigError("clearance_sign must be +1 or -1");
    if (!(min_price_ratio > 0.0)) throw ConfigError("min_price_ratio > 0 violated");
}

double clear_price(std::span<const AgentPortfolio> active, double flow_in) {
    ClearingSums sums;
    for (const auto& a : active) sums.add(a);
    if (!(sums.supply > 0.0)) throw NoSupplyError("no supply: active stock values are all zero");
    const double ratio = sums.price_ratio(flow_in);
    if (!(ratio > 0.0))
        throw LiquidityError("liquidity exhausted at flow_in=" + std::to_string(flow_in), flow_in);
    return ratio;
}

RebalanceResult rebalance(const AgentPortfolio& agent, double price_ratio) {
    const double k = agent.target_ratio;
    const double x = (k * agent.cash - price_ratio * agent.stock_value) / (1.0 + k);
    AgentPortfolio out = agent;
    out.cash = agent.cash - x;
    out.stock_value = k * out.cash;
    return {out, x};
}

TradeSide classify(const AgentPortfolio& agent, double price_ratio) {
    const double k = agent.target_ratio;
    if (agent.cash <= 0.0) return TradeSide::sold;
    const double held = price_ratio * agent.stock_value / agent.cash;
    if (std::abs(held - k) <= kTieTolerance * k) return TradeSide::neutral;
    return held > k ? TradeSide::sold : TradeSide::bought;
}

double update_ratio(const AgentPortfolio& agent, double price_ratio, double effective_greed,
                    double effective_fear) {
    switch (classify(agent, price_ratio)) {
        case TradeSide::sold: return effective_greed * agent.target_ratio;
        case TradeSide::bought: return agent.target_ratio / effective_fear;
        case TradeSide::neutral: break;
    }
    return agent.target_ratio;
}

SessionOutcome trading_session(MarketState& state, const EngineParams& params, double flow_in,
                               const SignalSchedule& signal, double t) {
    const std::size_t n = state.agents.size();
    const std::size_t m = params.active_count;
    if (m < 1 || m > n) throw ConfigError("1 <= m_active <= n_agents violated");
    if (state.draw_order.size() != n) {
        state.draw_order.resize(n);
        for (std::size_t i = 0; i < n; ++i) state.draw_order[i] = static_cast<std::uint32_t>(i);
    }

    // Partial Fisher-Yates: the first m slots are a uniform m-subset.
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + state.rng.index(n - i);
        std::swap(state.draw_order[i], state.draw_order[j]);
    }

    ClearingSums sums;
    for (std::size_t i = 0; i < m; ++i) sums.add(state.agents[state.draw_order[i]]);
    if (!(sums.supply > 0.0)) throw NoSupplyError("no supply: active stock values are all zero");

    SessionOutcome out;
    out.requested_flow = flow_in;
    double flow = params.clearance_sign * flow_in;
    double ratio = sums.price_ratio(flow);
    if (!(ratio > 0.0)) {
        flow = params.min_price_ratio * sums.supply - sums.demand;
        ratio = params.min_price_ratio;
        out.clamped = true;
    }

    if (!std::isnormal(state.price * ratio))
        throw DomainError("price left the representable range at day " + std::to_string(state.day));

    out.trades.reserve(m);
    std::vector<AgentPortfolio> updated(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t idx = state.draw_order[i];
        const auto& before = state.agents[idx];
        const auto factors = effective_factors(before, signal, t);
        auto [after, x] = rebalance(before, ratio);
        after.target_ratio = update_ratio(before, ratio, factors.greed, factors.fear);
        out.trades.push_back({idx, x, classify(before, ratio)});
        updated[i] = after;
    }
    for (auto& a : state.agents) a.stock_value *= ratio;
    for (std::size_t i = 0; i < m; ++i) state.agents[state.draw_order[i]] = updated[i];

    state.prev_price = state.price;
    state.price *= ratio;
    state.external_shares += flow / state.price;
    ++state.day;

    out.new_price = state.price;
    out.cash_flow_in = flow;
    out.external_share_delta = flow / state.price;
    return out;
}

}  // namespace aspp

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aspp/market.hpp"

namespace aspp {

enum class TradeSide { bought, sold, neutral };

struct Trade {
    std::size_t agent;
    double amount;  // dollars moved from cash into stock; negative means sold
    TradeSide side;
};

struct SessionOutcome {
    double new_price = 0.0;
    std::vector<Trade> trades;
    double external_share_delta = 0.0;
    double cash_flow_in = 0.0;   // flow actually executed
    double requested_flow = 0.0; // flow asked for, before any clamp
    bool clamped = false;
};

struct EngineParams {
    std::size_t active_count = 125;
    // +1: positive flow is external buying (agents net-sell, cash rises).
    // -1: reproduces the literal clearance text, flipping the sign of the flow.
    double clearance_sign = 1.0;
    // Floor applied to the price ratio when a withdrawal would annihilate the price.
    double min_price_ratio = 0.01;

    void validate(std::size_t n_agents) const;
};

// Relative tolerance used for the "ratio already on target" branch.
inline constexpr double kTieTolerance = 1e-12;

/// Aggregates of the clearing equation over an active set.
struct ClearingSums {
    double supply = 0.0;  // sum s / (1 + k)
    double demand = 0.0;  // sum k b / (1 + k)

    void add(const AgentPortfolio& a) {
        const double w = 1.0 / (1.0 + a.target_ratio);
        supply += a.stock_value * w;
        demand += a.target_ratio * a.cash * w;
    }
    double price_ratio(double flow_in) const { return (flow_in + demand) / supply; }
};

/// Price ratio P/P0 that clears the active set against an external flow.
/// Throws NoSupplyError when no active agent holds stock and LiquidityError
/// when the ratio would be non-positive.
double clear_price(std::span<const AgentPortfolio> active, double flow_in);

struct RebalanceResult {
    AgentPortfolio portfolio;
    double amount;  // x: dollars moved into stock
};

/// Moves the agent onto its target ratio at the new price.
RebalanceResult rebalance(const AgentPortfolio& agent, double price_ratio);

TradeSide classify(const AgentPortfolio& agent, double price_ratio);

/// Target ratio after a session, judged on pre-trade holdings at the new price.
double update_ratio(const AgentPortfolio& agent, double price_ratio, double effective_greed,
                    double effective_fear);

/// Runs one session in place: draw the active set, clear, rebalance, revalue,
/// update ratios and advance the day.
SessionOutcome trading_session(MarketState& state, const EngineParams& params, double flow_in,
                               const SignalSchedule& signal, double t);

}  // namespace aspp

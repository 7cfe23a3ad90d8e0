#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "aspp/rng.hpp"

namespace aspp {

/// One trader. Stock is held as its dollar value at the current price.
struct AgentPortfolio {
    double stock_value = 0.0;
    double cash = 0.0;
    double target_ratio = 1.0;  // k
    double greed = 1.0;         // alpha >= 1
    double fear = 1.0;          // beta >= 1

    double shares(double price) const { return stock_value / price; }
};

/// Joint normal law of (ln greed, ln fear) with a shared variance.
struct GreedFearSpec {
    double mean_log_greed = 0.0;
    double mean_log_fear = 0.0;
    double log_variance = 0.0;
    double correlation = 0.0;

    // Throws ConfigError naming the violated constraint.
    void validate() const;
};

struct GreedFearPair {
    double greed;
    double fear;
};

/// Time-varying switch that scales every agent's deviation from unit
/// greed/fear. With no knots the signal is identically 1.
class SignalSchedule {
public:
    struct Knot {
        double time;   // years
        double value;  // in [0, 1]
    };

    SignalSchedule() = default;
    // Knots must be sorted by time; values are linearly interpolated and held
    // constant outside the knot range.
    explicit SignalSchedule(std::vector<Knot> knots, double base_greed_amplitude = 0.0,
                            double base_fear_amplitude = 0.0);

    static SignalSchedule constant(double value);

    double operator()(double t) const;

    // Homogeneous factors 1 + amplitude * signal(t).
    GreedFearPair homogeneous_factors(double t) const;

    const std::vector<Knot>& knots() const noexcept { return knots_; }
    double base_greed_amplitude() const noexcept { return base_greed_amplitude_; }
    double base_fear_amplitude() const noexcept { return base_fear_amplitude_; }

private:
    std::vector<Knot> knots_;
    double base_greed_amplitude_ = 0.0;
    double base_fear_amplitude_ = 0.0;
};

struct PopulationSpec {
    std::size_t n_agents = 500;
    GreedFearSpec greed_fear;
    double initial_cash = 10.0;
    double initial_k = 1.0;
    double stock_noise_range = 0.1;
    double initial_price = 1.0;
};

struct MarketState {
    std::vector<AgentPortfolio> agents;
    double price = 1.0;
    double prev_price = 1.0;
    std::int64_t day = 0;
    double external_shares = 0.0;
    Rng rng;
    // Scratch permutation for drawing active sets without replacement.
    std::vector<std::uint32_t> draw_order;

    double total_cash() const;
    double total_agent_shares() const;
};

std::vector<std::pair<double, double>> sample_log_greed_fear(const GreedFearSpec& gf,
                                                             std::size_t n, Rng& rng);
std::vector<GreedFearPair> sample_greed_fear(const GreedFearSpec& gf, std::size_t n,
                                             Rng& rng);

MarketState init_population(const PopulationSpec& spec, Rng rng);
MarketState init_population(const PopulationSpec& spec, std::uint64_t seed);

GreedFearPair effective_factors(const AgentPortfolio& agent, const SignalSchedule& signal,
                                double t);

}  // namespace aspp

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace aspp {

struct HazardParams {
    double gamma1 = 70.0;     // dollars^2, cash-concentration scale
    double gamma2 = 5.0;      // hazard scale
    double gamma3 = 1.0;      // per year, unrealized-profit risk scale
    double hazard_cap = 1e6;  // ceiling for the concentration hazard

    void validate() const;
};

struct ReturnStats {
    std::size_t count = 0;
    double mean_log_return = 0.0;
    double std_log_return = 0.0;
    double geometric_mean_return = 1.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

struct TheoreticalReturn {
    double gamma;         // 2N/m
    double r_star_daily;  // (alpha/beta)^(1/gamma)
    double sigma_star;    // c0 (alpha beta - 1)

    // Continuously compounded yearly rate, days_per_year * ln r*.
    double annualized(double days_per_year) const;
};

/// Streaming central moments up to fourth order; merge() combines two
/// disjoint samples exactly (pairwise update formulas).
class MomentAccumulator {
public:
    void add(double x);
    void merge(const MomentAccumulator& other);
    std::size_t count() const noexcept { return n_; }
    ReturnStats stats() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

/// Uniform samples of a function of time: value i sits at t0 + i*dt.
struct SampledSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> values;

    double t_end() const { return values.empty() ? t0 : t0 + dt * double(values.size() - 1); }
    // Linear interpolation; throws DomainError outside [t0, t_end].
    double at(double t) const;
};

/// Share of agents concentrated at low cash: mean of exp(-b^2 / gamma1).
double cash_concentration(std::span<const double> cash_values, double gamma1);

/// gamma2 sqrt(h) / (1 - sqrt(h)), capped at params.hazard_cap.
double hazard_aspp(double h, const HazardParams& params);

/// gamma3 times the integral over [t_m, max(t, t_m)] of exp(r_w - r_n(s)),
/// trapezoid rule at step dt.
double hazard_investor(const SampledSeries& nominal_rate, double r_w, double t_m, double t,
                       double gamma3, double dt);

double total_risk(double hazard_aspp_value, double hazard_investor_value);

TheoreticalReturn theoretical_return(double alpha, double beta, std::size_t n_agents,
                                     std::size_t m_active, double c0_sigma = 1.0);

ReturnStats return_stats(std::span<const double> prices);
ReturnStats log_return_stats(std::span<const double> log_returns);

}  // namespace aspp

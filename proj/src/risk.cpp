#include "aspp/risk.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aspp/errors.hpp"

namespace aspp {

void HazardParams::validate() const {
    if (!(gamma1 > 0.0)) throw ConfigError("gamma1 > 0 violated");
    if (!(gamma2 > 0.0)) throw ConfigError("gamma2 > 0 violated");
    if (!(gamma3 > 0.0)) throw ConfigError("gamma3 > 0 violated");
    if (!(hazard_cap > 0.0)) throw ConfigError("hazard_cap > 0 violated");
}

double TheoreticalReturn::annualized(double days_per_year) const {
    return days_per_year * std::log(r_star_daily);
}

double SampledSeries::at(double t) const {
    if (values.empty()) throw DomainError("empty sampled series");
    const double span = t_end() - t0;
    const double slack = 1e-9 * std::max(1.0, std::abs(span));
    if (t < t0 - slack || t > t_end() + slack)
        throw DomainError("series gap: t=" + std::to_string(t) + " outside [" +
                          std::to_string(t0) + ", " + std::to_string(t_end()) + "]");
    if (values.size() == 1) return values.front();
    const double pos = std::clamp((t - t0) / dt, 0.0, double(values.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(pos), values.size() - 2);
    const double w = pos - double(i);
    return values[i] + w * (values[i + 1] - values[i]);
}

double cash_concentration(std::span<const double> cash_values, double gamma1) {
    if (cash_values.empty()) throw DomainError("cash_concentration: empty population");
    if (!(gamma1 > 0.0)) throw DomainError("cash_concentration: gamma1 must be > 0");
    double sum = 0.0;
    for (double b : cash_values) sum += std::exp(-b * b / gamma1);
    return sum / double(cash_values.size());
}

double hazard_aspp(double h, const HazardParams& params) {
    if (!(h >= 0.0 && h <= 1.0)) throw DomainError("hazard_aspp: h outside [0,1]");
    const double root = std::sqrt(h);
    if (root >= 1.0) return params.hazard_cap;
    return std::min(params.hazard_cap, params.gamma2 * root / (1.0 - root));
}

double hazard_investor(const SampledSeries& nominal_rate, double r_w, double t_m, double t,
                       double gamma3, double dt) {
    if (!(dt > 0.0)) throw DomainError("hazard_investor: dt must be > 0");
    if (t <= t_m) return 0.0;
    auto integrand = [&](double s) { return std::exp(r_w - nominal_rate.at(s)); };

    const double length = t - t_m;
    const auto steps = static_cast<std::size_t>(std::ceil(length / dt - 1e-9));
    const double h = length / double(steps);
    double sum = 0.5 * (integrand(t_m) + integrand(t));
    for (std::size_t i = 1; i < steps; ++i) sum += integrand(t_m + h * double(i));
    return gamma3 * h * sum;
}

double total_risk(double hazard_aspp_value, double hazard_investor_value) {
    return hazard_aspp_value + hazard_investor_value;
}

TheoreticalReturn theoretical_return(double alpha, double beta, std::size_t n_agents,
                                     std::size_t m_active, double c0_sigma) {
    if (!(alpha >= 1.0 && beta >= 1.0)) throw DomainError("theoretical_return: factors must be >= 1");
    if (m_active < 1 || m_active > n_agents)
        throw DomainError("theoretical_return: 1 <= m <= N violated");
    const double gamma = 2.0 * double(n_agents) / double(m_active);
    return {gamma, std::pow(alpha / beta, 1.0 / gamma), c0_sigma * (alpha * beta - 1.0)};
}

void MomentAccumulator::add(double x) {
    MomentAccumulator one;
    one.n_ = 1;
    one.mean_ = x;
    merge(one);
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = double(n_), nb = double(o.n_), n = na + nb;
    const double delta = o.mean_ - mean_;
    const double d2 = delta * delta, d3 = d2 * delta, d4 = d2 * d2;
    const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
    const double m3 = m3_ + o.m3_ + d3 * na * nb * (na - nb) / (n * n) +
                      3.0 * delta * (na * o.m2_ - nb * m2_) / n;
    const double m4 = m4_ + o.m4_ + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                      6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                      4.0 * delta * (na * o.m3_ - nb * m3_) / n;
    mean_ += delta * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += o.n_;
}

ReturnStats MomentAccumulator::stats() const {
    ReturnStats st;
    st.count = n_;
    if (n_ == 0) return st;
    const double n = double(n_);
    const double var = m2_ / n;
    st.mean_log_return = mean_;
    st.std_log_return = n_ > 1 ? std::sqrt(m2_ / (n - 1.0)) : 0.0;
    st.geometric_mean_return = std::exp(mean_);
    if (var > 0.0) {
        st.skewness = (m3_ / n) / std::pow(var, 1.5);
        st.excess_kurtosis = (m4_ / n) / (var * var) - 3.0;
    }
    return st;
}

ReturnStats log_return_stats(std::span<const double> log_returns) {
    ReturnStats st;
    st.count = log_returns.size();
    if (log_returns.empty()) return st;
    const double n = double(log_returns.size());
    double mean = 0.0;
    for (double r : log_returns) mean += r;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double r : log_returns) {
        const double d = r - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    st.mean_log_return = mean;
    st.std_log_return = n > 1.0 ? std::sqrt(m2 * n / (n - 1.0)) : 0.0;
    st.geometric_mean_return = std::exp(mean);
    if (m2 > 0.0) {
        st.skewness = m3 / std::pow(m2, 1.5);
        st.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return st;
}

ReturnStats return_stats(std::span<const double> prices) {
    if (prices.size() < 3) throw DomainError("return_stats: need at least 3 prices");
    std::vector<double> logs;
    logs.reserve(prices.size() - 1);
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0)) throw DomainError("return_stats: nonpositive price");
        if (i > 0) logs.push_back(std::log(prices[i] / prices[i - 1]));
    }
    return log_return_stats(logs);
}

}  // namespace aspp

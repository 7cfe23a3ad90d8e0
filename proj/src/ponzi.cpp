#include "aspp/ponzi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "aspp/errors.hpp"

namespace aspp {

namespace {

std::size_t grid_steps(double length, double dt, const char* what) {
    const double steps = length / dt;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-6 * std::max(1.0, steps))
        throw ConfigError(std::string(what) + " must be an integer multiple of dt");
    return static_cast<std::size_t>(rounded);
}

// r(t - t_m) inside one RK4 step. The schedule jumps at s = 0, and the
// delay is grid-aligned, so the side of the jump is decided by the step.
double delayed_schedule(const ScheduleSpec& spec, double s, double step_mid_s) {
    if (step_mid_s < 0.0) return 0.0;
    return spec(std::max(s, 0.0));
}

bool all_finite(std::initializer_list<double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::linear: return "linear";
        case ScheduleKind::exponential: return "exponential";
    }
    return "unknown";
}

ScheduleKind schedule_kind_from_string(std::string_view name) {
    if (name == "constant") return ScheduleKind::constant;
    if (name == "linear") return ScheduleKind::linear;
    if (name == "exponential") return ScheduleKind::exponential;
    throw ConfigError("schedule.kind must be one of constant|linear|exponential, got '" +
                      std::string(name) + "'");
}

void ScheduleSpec::validate() const {
    if (!(first_year_total >= 0.0) || !std::isfinite(first_year_total))
        throw ConfigError("schedule.first_year_total >= 0 violated");
    if (!std::isfinite(rate_param)) throw ConfigError("schedule.rate_param must be finite");
}

double ScheduleSpec::coefficient() const {
    switch (kind) {
        case ScheduleKind::constant: return first_year_total;
        case ScheduleKind::linear: return 2.0 * first_year_total;
        case ScheduleKind::exponential: {
            const double a = rate_param;
            if (std::abs(a) < 1e-12) return first_year_total;
            return a * first_year_total / std::expm1(a);
        }
    }
    return 0.0;
}

double ScheduleSpec::operator()(double t) const {
    if (t < 0.0) return 0.0;
    switch (kind) {
        case ScheduleKind::constant: return first_year_total;
        case ScheduleKind::linear: return 2.0 * first_year_total * t;
        case ScheduleKind::exponential: return coefficient() * std::exp(rate_param * t);
    }
    return 0.0;
}

double ScheduleSpec::cumulative(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind) {
        case ScheduleKind::constant: return first_year_total * t;
        case ScheduleKind::linear: return first_year_total * t * t;
        case ScheduleKind::exponential: {
            const double a = rate_param;
            if (std::abs(a) < 1e-12) return first_year_total * t;
            return coefficient() * std::expm1(a * t) / a;
        }
    }
    return 0.0;
}

ScheduleSpec ScheduleSpec::unit_exponential(double a) {
    ScheduleSpec s;
    s.kind = ScheduleKind::exponential;
    s.rate_param = a;
    s.first_year_total = std::abs(a) < 1e-12 ? 1.0 : std::expm1(a) / a;
    return s;
}

double schedule_eval(const ScheduleSpec& spec, double t) { return spec(t); }

void PonziParams::validate() const {
    if (!(t_m >= 0.0)) throw ConfigError("ponzi.t_m >= 0 violated");
    if (!(S0 >= 0.0)) throw ConfigError("ponzi.S0 >= 0 violated");
}

void SpecPonziParams::validate() const {
    if (!(c0 > 0.0)) throw ConfigError("ponzi.c0 > 0 violated");
    if (!(t_m >= 0.0)) throw ConfigError("ponzi.t_m >= 0 violated");
    if (!(S0 >= 0.0)) throw ConfigError("ponzi.S0 >= 0 violated");
}

OdeSolution classical_ponzi_solve(const PonziParams& p, const ScheduleSpec& spec, double horizon,
                                  double dt) {
    p.validate();
    spec.validate();
    if (!(dt > 0.0)) throw ConfigError("dt > 0 violated");
    const std::size_t n = grid_steps(horizon, dt, "horizon");
    grid_steps(p.t_m, dt, "t_m");

    const double maturity_growth = std::exp(p.r_p * p.t_m);
    auto rhs = [&](double t, double S, double R, double delayed) {
        return std::array<double, 2>{p.r_n * S + spec(t) - p.r_w * R,
                                     (p.r_p - p.r_w) * R + maturity_growth * delayed};
    };

    OdeSolution sol;
    sol.dt = dt;
    sol.t.resize(n + 1);
    sol.S.resize(n + 1);
    sol.R.resize(n + 1);
    sol.S[0] = p.S0;
    sol.R[0] = 0.0;
    sol.t[0] = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const double t = dt * double(i);
        const double s = t - p.t_m;
        const double mid_s = s + 0.5 * dt;
        const double S = sol.S[i], R = sol.R[i];
        const double d0 = delayed_schedule(spec, s, mid_s);
        const double dh = delayed_schedule(spec, mid_s, mid_s);
        const double d1 = delayed_schedule(spec, s + dt, mid_s);

        const auto k1 = rhs(t, S, R, d0);
        const auto k2 = rhs(t + 0.5 * dt, S + 0.5 * dt * k1[0], R + 0.5 * dt * k1[1], dh);
        const auto k3 = rhs(t + 0.5 * dt, S + 0.5 * dt * k2[0], R + 0.5 * dt * k2[1], dh);
        const auto k4 = rhs(t + dt, S + dt * k3[0], R + dt * k3[1], d1);

        sol.S[i + 1] = S + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        sol.R[i + 1] = R + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        sol.t[i + 1] = dt * double(i + 1);
        if (!all_finite({sol.S[i + 1], sol.R[i + 1]}))
            throw DivergenceError("classical ponzi: non-finite state", t);
    }
    return sol;
}

std::optional<double> collapse_time(const OdeSolution& sol) {
    for (std::size_t i = 1; i < sol.size(); ++i) {
        if (sol.S[i] <= 0.0) {
            const double s0 = sol.S[i - 1], s1 = sol.S[i];
            if (s0 <= 0.0) return sol.t[i - 1];
            const double w = s0 / (s0 - s1);
            return sol.t[i - 1] + w * (sol.t[i] - sol.t[i - 1]);
        }
    }
    return std::nullopt;
}

double critical_exponent(const PonziParams& p, const CriticalExponentOptions& opts) {
    if (!(opts.tol > 0.0)) throw ConfigError("tol > 0 violated");
    auto collapses = [&](double a) {
        return collapse_time(classical_ponzi_solve(p, ScheduleSpec::unit_exponential(a),
                                                   opts.horizon, opts.dt))
            .has_value();
    };
    double low = opts.low, high = opts.high;
    const bool low_collapses = collapses(low);
    const bool high_collapses = collapses(high);
    if (!low_collapses || high_collapses) {
        throw BracketError("critical_exponent: bracket [" + std::to_string(low) + ", " +
                               std::to_string(high) + "] does not straddle the transition (" +
                               (low_collapses ? "low collapses" : "low viable") + ", " +
                               (high_collapses ? "high collapses" : "high viable") + ")",
                           low, high);
    }
    while (high - low > opts.tol) {
        const double mid = 0.5 * (low + high);
        (collapses(mid) ? low : high) = mid;
    }
    return high;
}

OdeSolution speculative_ponzi_solve(const SpecPonziParams& p, const ScheduleSpec& spec,
                                    double horizon, double dt) {
    p.validate();
    spec.validate();
    if (!(dt > 0.0)) throw ConfigError("dt > 0 violated");
    const std::size_t n = grid_steps(horizon, dt, "horizon");
    const std::size_t lag = grid_steps(p.t_m, dt, "t_m");
    const double outflow_weight = p.literal_nominal_rate ? 1.0 : p.r_w;

    OdeSolution sol;
    sol.dt = dt;
    sol.t.resize(n + 1);
    sol.S.resize(n + 1);
    sol.R.resize(n + 1);
    sol.J.resize(n + 1);
    sol.r_n.resize(n + 1);

    auto nominal = [&](double t, double R) {
        return p.c0 * (spec(t) - outflow_weight * R) + p.r_star_external;
    };
    // S is carried as u = ln(1 + c0 S), so du/dt = c0 (r - r_w R). Same
    // dynamics, but the multi-decade crash after a large bubble is no longer
    // stiff for a fixed step.
    auto rhs = [&](double t, double R, double J, double J_lag, double r_lag) {
        const double flow = spec(t) - p.r_w * R;
        const double rn = nominal(t, R);
        const double matured = lag == 0 ? r_lag : r_lag * std::exp(J - J_lag);
        return std::array<double, 3>{p.c0 * flow, (rn - p.r_w) * R + matured, rn};
    };
    auto to_S = [&](double u) { return std::expm1(u) / p.c0; };
    // J at grid node j (j may be negative, where J = 0).
    auto J_node = [&](std::ptrdiff_t j) { return j <= 0 ? 0.0 : sol.J[std::size_t(j)]; };
    // J between nodes j and j+1 at the midpoint, cubic Hermite with J' = r_n.
    auto J_mid = [&](std::ptrdiff_t j) {
        if (j < 0) return 0.0;
        const auto a = std::size_t(j), b = a + 1;
        return 0.5 * (sol.J[a] + sol.J[b]) + dt / 8.0 * (sol.r_n[a] - sol.r_n[b]);
    };

    sol.t[0] = 0.0;
    sol.S[0] = p.S0;
    sol.R[0] = 0.0;
    sol.J[0] = 0.0;
    sol.r_n[0] = nominal(0.0, 0.0);
    double u = std::log1p(p.c0 * p.S0);

    for (std::size_t i = 0; i < n; ++i) {
        const double t = dt * double(i);
        const double s = t - p.t_m;
        const double mid_s = s + 0.5 * dt;
        const auto j = std::ptrdiff_t(i) - std::ptrdiff_t(lag);

        double Jl0 = 0.0, Jlh = 0.0, Jl1 = 0.0;
        if (lag > 0) {
            Jl0 = J_node(j);
            Jlh = J_mid(j);
            Jl1 = J_node(j + 1);
        }
        const double d0 = delayed_schedule(spec, s, mid_s);
        const double dh = delayed_schedule(spec, mid_s, mid_s);
        const double d1 = delayed_schedule(spec, s + dt, mid_s);

        const double R = sol.R[i], J = sol.J[i];
        const auto k1 = rhs(t, R, J, Jl0, d0);
        const auto k2 = rhs(t + 0.5 * dt, R + 0.5 * dt * k1[1], J + 0.5 * dt * k1[2], Jlh, dh);
        const auto k3 = rhs(t + 0.5 * dt, R + 0.5 * dt * k2[1], J + 0.5 * dt * k2[2], Jlh, dh);
        const auto k4 = rhs(t + dt, R + dt * k3[1], J + dt * k3[2], Jl1, d1);

        const double t1 = dt * double(i + 1);
        u += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        sol.S[i + 1] = to_S(u);
        sol.R[i + 1] = R + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        sol.J[i + 1] = J + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
        sol.r_n[i + 1] = nominal(t1, sol.R[i + 1]);
        sol.t[i + 1] = t1;
        if (!all_finite({sol.S[i + 1], sol.R[i + 1], sol.J[i + 1], sol.r_n[i + 1]}))
            throw DivergenceError("speculative ponzi diverged after t=" + std::to_string(t), t);
    }
    return sol;
}

SteadyState steady_state_rate(const OdeSolution& sol, double window) {
    if (sol.r_n.empty()) throw DomainError("steady_state_rate: solution carries no nominal rate");
    const double horizon = sol.t.back();
    if (horizon < 2.0 * window) throw DomainError("steady_state_rate: horizon < 2*window");
    const double start = horizon - window;
    double sum = 0.0, lo = INFINITY, hi = -INFINITY;
    std::size_t count = 0;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        if (sol.t[i] < start - 1e-12) continue;
        sum += sol.r_n[i];
        lo = std::min(lo, sol.r_n[i]);
        hi = std::max(hi, sol.r_n[i]);
        ++count;
    }
    return {sum / double(count), hi - lo};
}

double stationary_payoff(double r_w, double steady_rate) { return r_w / (r_w - steady_rate); }

}  // namespace aspp

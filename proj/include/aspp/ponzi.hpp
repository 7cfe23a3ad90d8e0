#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace aspp {

enum class ScheduleKind { constant, linear, exponential };

std::string_view to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(std::string_view name);

/// Investment schedule r(t) in dollars per year, normalized so that the
/// first year carries exactly `first_year_total` dollars.
///
///   constant     r(t) = C
///   linear       r(t) = 2 C t
///   exponential  r(t) = c1 exp(a t),  c1 = a C / (exp(a) - 1)
///
/// r(t) = 0 for t < 0.
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::exponential;
    double rate_param = 0.1;  // exponent a (exponential only)
    double first_year_total = 5000.0;

    void validate() const;
    double coefficient() const;  // c1, 2C or C depending on kind
    double operator()(double t) const;
    // Closed-form integral of r over [0, t].
    double cumulative(double t) const;

    // r(t) = exp(a t), i.e. unit coefficient.
    static ScheduleSpec unit_exponential(double a);
};

double schedule_eval(const ScheduleSpec& spec, double t);

struct PonziParams {
    double r_n = 0.0;   // nominal rate
    double r_p = 0.41;  // promised rate
    double r_w = 0.41;  // withdrawal (target) rate
    double t_m = 3.0;   // maturity, years
    double S0 = 0.0;

    void validate() const;
};

struct SpecPonziParams {
    double c0 = 4e-4;  // market impact per dollar
    double r_w = 0.41;
    double t_m = 3.0;
    double S0 = 0.0;
    double r_star_external = 0.0;
    // Use c0 (r - R) for the nominal rate instead of c0 (r - r_w R).
    bool literal_nominal_rate = false;

    void validate() const;
};

/// Fixed-step solution on a uniform grid t_i = i dt.
struct OdeSolution {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<double> S;
    std::vector<double> R;
    std::vector<double> r_n;  // speculative only
    std::vector<double> J;    // speculative only, running integral of r_n

    std::size_t size() const { return t.size(); }
};

/// RK4 integration of the classical scheme. dt must divide t_m.
OdeSolution classical_ponzi_solve(const PonziParams& p, const ScheduleSpec& spec, double horizon,
                                  double dt);

/// First time S(t) <= 0 after t = 0, linearly interpolated between nodes.
std::optional<double> collapse_time(const OdeSolution& sol);

struct CriticalExponentOptions {
    double horizon = 60.0;
    double tol = 1e-3;
    double dt = 1.0 / 360.0;
    double low = 0.01;
    double high = 1.0;
};

/// Smallest exponent a for which r(t) = exp(a t) keeps the classical scheme
/// solvent over the horizon, by bisection.
double critical_exponent(const PonziParams& p, const CriticalExponentOptions& opts = {});

/// RK4 on the augmented (S, R, J) state with the maturity delay read back
/// from the stored grid history.
OdeSolution speculative_ponzi_solve(const SpecPonziParams& p, const ScheduleSpec& spec,
                                    double horizon, double dt);

struct SteadyState {
    double rate;    // mean r_n over the final window
    double spread;  // max - min over the window
};

SteadyState steady_state_rate(const OdeSolution& sol, double window);

/// Payoff r_w / (r_w - r_s) of one dollar in the stationary regime.
double stationary_payoff(double r_w, double steady_rate);

}  // namespace aspp

#include "aspp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "aspp/errors.hpp"

namespace aspp {

using nlohmann::json;

namespace {

// Reads keys from one JSON object, remembering which were consumed so that
// leftovers can be rejected.
class Block {
public:
    Block(const json& parent, std::string name) : name_(std::move(name)) {
        if (!parent.contains(name_)) return;
        obj_ = &parent.at(name_);
        if (!obj_->is_object()) throw ConfigError(name_ + ": expected an object");
    }
    Block(const json& root, std::string name, bool /*root*/) : name_(std::move(name)), obj_(&root) {}

    void read(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(key, "expected a number");
            out = v->get<double>();
            if (!std::isfinite(out)) fail(key, "expected a finite number");
        }
    }
    void read(const char* key, std::uint64_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void read(const char* key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) fail(key, "expected true or false");
            out = v->get<bool>();
        }
    }
    void read(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(key, "expected a string");
            out = v->get<std::string>();
        }
    }
    void read(const char* key, std::optional<double>& out) {
        if (const json* v = find(key)) {
            if (v->is_null()) {
                out.reset();
                return;
            }
            if (!v->is_number()) fail(key, "expected a number or null");
            out = v->get<double>();
        }
    }
    void read(const char* key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) fail(key, "expected an array of numbers");
            out.clear();
            for (const auto& x : *v) {
                if (!x.is_number()) fail(key, "expected an array of numbers");
                out.push_back(x.get<double>());
            }
        }
    }
    const json* find(const char* key) {
        if (!obj_) return nullptr;
        auto it = obj_->find(key);
        if (it == obj_->end()) return nullptr;
        used_.insert(key);
        return &*it;
    }
    // Rejects keys nobody asked for.
    void finish() const {
        if (!obj_) return;
        for (auto it = obj_->begin(); it != obj_->end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError(qualified(it.key().c_str()) + ": unknown key");
    }
    [[noreturn]] void fail(const char* key, const std::string& what) const {
        throw ConfigError(qualified(key) + ": " + what);
    }
    std::string qualified(const char* key) const {
        return name_.empty() ? std::string(key) : name_ + "." + key;
    }

private:
    std::string name_;
    const json* obj_ = nullptr;
    std::set<std::string> used_;
};

template <class F>
void with_prefix(const std::string& prefix, F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + ": " + e.what());
    }
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::aspp: return "aspp";
        case ExperimentKind::regimes: return "regimes";
        case ExperimentKind::cycle: return "cycle";
        case ExperimentKind::ponzi_classical: return "ponzi-classical";
        case ExperimentKind::ponzi_speculative: return "ponzi-speculative";
        case ExperimentKind::fit_c0: return "fit-c0";
        case ExperimentKind::stats: return "stats";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
    for (auto k : {ExperimentKind::aspp, ExperimentKind::regimes, ExperimentKind::cycle,
                   ExperimentKind::ponzi_classical, ExperimentKind::ponzi_speculative,
                   ExperimentKind::fit_c0, ExperimentKind::stats})
        if (to_string(k) == name) return k;
    throw ConfigError("kind: unknown experiment kind '" + std::string(name) + "'");
}

CycleConfig ExperimentConfig::default_cycle_config() {
    CycleConfig c;
    auto& pop = c.market.population;
    pop.n_agents = 500;
    pop.initial_cash = 10.0;
    pop.initial_k = 1.0;
    pop.stock_noise_range = 0.1;
    pop.initial_price = 1.0;
    pop.greed_fear.mean_log_greed = std::log(1.12);
    pop.greed_fear.mean_log_fear = std::log(1.11);
    pop.greed_fear.log_variance = 12e-4;
    pop.greed_fear.correlation = 0.95;
    c.market.engine.active_count = 125;
    c.market.days_per_year = 360.0;
    c.hazard = HazardParams{};
    c.schedule.kind = ScheduleKind::exponential;
    c.schedule.rate_param = 0.1;
    c.schedule.first_year_total = 5000.0;  // initial cash reserve, 500 x $10
    c.pre_phase = 3.0;
    c.t_m = 3.0;
    c.horizon = 20.0;
    c.n_paths = 1000;
    return c;
}

void ExperimentConfig::validate() const {
    with_prefix("market", [&] { cycle.market.validate(); });
    with_prefix("hazard", [&] { cycle.hazard.validate(); });
    with_prefix("schedule", [&] { cycle.schedule.validate(); });
    switch (kind) {
        case ExperimentKind::cycle:
        case ExperimentKind::fit_c0: with_prefix("cycle", [&] { cycle.validate(); }); break;
        case ExperimentKind::aspp:
        case ExperimentKind::stats:
        case ExperimentKind::regimes: {
            CycleConfig c = cycle;
            c.policy = FlowPolicy::constant;
            with_prefix("cycle", [&] { c.validate(); });
            if (kind == ExperimentKind::regimes) {
                if (!(regimes.horizon > 0.0)) throw ConfigError("regimes.horizon > 0 violated");
                if (!(regimes.investment >= 0.0 && regimes.withdrawal >= 0.0))
                    throw ConfigError("regimes: investment and withdrawal must be >= 0");
            }
            break;
        }
        case ExperimentKind::ponzi_classical:
            with_prefix("ponzi", [&] { ponzi.classical.validate(); });
            break;
        case ExperimentKind::ponzi_speculative:
            with_prefix("ponzi", [&] { ponzi.speculative.validate(); });
            break;
    }
    if (kind == ExperimentKind::ponzi_classical || kind == ExperimentKind::ponzi_speculative) {
        if (!(ponzi.dt > 0.0)) throw ConfigError("ponzi.dt > 0 violated");
        if (!(ponzi.horizon > 0.0)) throw ConfigError("ponzi.horizon > 0 violated");
    }
    if (kind == ExperimentKind::fit_c0 && !(fit.low > 0.0 && fit.low < fit.high))
        throw ConfigError("fit: 0 < low < high violated");
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
    ExperimentConfig cfg;
    auto& cyc = cfg.cycle;
    auto& pop = cyc.market.population;
    auto& gf = pop.greed_fear;

    Block root(doc, "", true);
    std::string kind = std::string(to_string(cfg.kind));
    root.read("kind", kind);
    cfg.kind = experiment_kind_from_string(kind);
    root.read("seed", cfg.seed);
    root.read("output_dir", cfg.output_dir);
    for (const char* b : {"market", "signal", "hazard", "schedule", "cycle", "regimes", "ponzi",
                          "fit", "stats"})
        root.find(b);
    root.finish();
    cyc.base_seed = cfg.seed;

    Block market(doc, "market");
    market.read("n_agents", pop.n_agents);
    market.read("m_active", cyc.market.engine.active_count);
    market.read("initial_cash", pop.initial_cash);
    market.read("initial_k", pop.initial_k);
    market.read("stock_noise_range", pop.stock_noise_range);
    market.read("initial_price", pop.initial_price);
    market.read("days_per_year", cyc.market.days_per_year);
    market.read("mean_log_greed", gf.mean_log_greed);
    market.read("mean_log_fear", gf.mean_log_fear);
    market.read("log_variance", gf.log_variance);
    market.read("correlation", gf.correlation);
    market.read("clearance_sign", cyc.market.engine.clearance_sign);
    market.read("min_price_ratio", cyc.market.engine.min_price_ratio);
    market.finish();

    Block signal(doc, "signal");
    double greed_amp = 0.0, fear_amp = 0.0;
    std::vector<SignalSchedule::Knot> knots;
    signal.read("base_greed_amplitude", greed_amp);
    signal.read("base_fear_amplitude", fear_amp);
    if (const json* v = signal.find("knots")) {
        if (!v->is_array()) signal.fail("knots", "expected an array of [time, value] pairs");
        for (const auto& k : *v) {
            if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
                signal.fail("knots", "expected an array of [time, value] pairs");
            knots.push_back({k[0].get<double>(), k[1].get<double>()});
        }
    }
    signal.finish();
    with_prefix("signal", [&] { cyc.market.signal = SignalSchedule(knots, greed_amp, fear_amp); });

    Block hazard(doc, "hazard");
    hazard.read("gamma1", cyc.hazard.gamma1);
    hazard.read("gamma2", cyc.hazard.gamma2);
    hazard.read("gamma3", cyc.hazard.gamma3);
    hazard.read("hazard_cap", cyc.hazard.hazard_cap);
    hazard.finish();

    Block schedule(doc, "schedule");
    std::string sched_kind(to_string(cyc.schedule.kind));
    schedule.read("kind", sched_kind);
    cyc.schedule.kind = schedule_kind_from_string(sched_kind);
    schedule.read("rate_param", cyc.schedule.rate_param);
    schedule.read("first_year_total", cyc.schedule.first_year_total);
    schedule.finish();

    Block cycle(doc, "cycle");
    cycle.read("pre_phase", cyc.pre_phase);
    cycle.read("t_m", cyc.t_m);
    cycle.read("target_rate", cyc.target_rate);
    cycle.read("horizon", cyc.horizon);
    cycle.read("n_paths", cyc.n_paths);
    cycle.read("checkpoints", cyc.checkpoints);
    cycle.read("histogram_bins", cyc.histogram_bins);
    cycle.finish();

    Block regimes(doc, "regimes");
    regimes.read("investment", cfg.regimes.investment);
    regimes.read("withdrawal", cfg.regimes.withdrawal);
    regimes.read("horizon", cfg.regimes.horizon);
    regimes.finish();

    Block ponzi(doc, "ponzi");
    auto& pz = cfg.ponzi;
    ponzi.read("r_n", pz.classical.r_n);
    ponzi.read("r_p", pz.classical.r_p);
    ponzi.read("r_w", pz.classical.r_w);
    ponzi.read("t_m", pz.classical.t_m);
    ponzi.read("S0", pz.classical.S0);
    ponzi.read("c0", pz.speculative.c0);
    ponzi.read("r_star_external", pz.speculative.r_star_external);
    ponzi.read("literal_nominal_rate", pz.speculative.literal_nominal_rate);
    ponzi.read("horizon", pz.horizon);
    ponzi.read("dt", pz.dt);
    ponzi.read("steady_window", pz.steady_window);
    ponzi.read("critical_exponent", pz.critical_exponent);
    ponzi.read("critical_horizon", pz.critical.horizon);
    ponzi.read("critical_tol", pz.critical.tol);
    ponzi.read("critical_low", pz.critical.low);
    ponzi.read("critical_high", pz.critical.high);
    ponzi.finish();
    pz.speculative.r_w = pz.classical.r_w;
    pz.speculative.t_m = pz.classical.t_m;
    pz.speculative.S0 = pz.classical.S0;
    pz.critical.dt = pz.dt;

    Block fit(doc, "fit");
    fit.read("low", cfg.fit.low);
    fit.read("high", cfg.fit.high);
    fit.read("S0", cfg.fit.S0);
    fit.read("tol", cfg.fit.tol);
    fit.finish();
    cfg.fit.pre_phase = cyc.pre_phase;
    cfg.fit.dt = cyc.market.day_length();

    Block stats(doc, "stats");
    stats.read("c0_sigma", cfg.stats.c0_sigma);
    stats.finish();

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config_text(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

json to_json(const ExperimentConfig& cfg) {
    const auto& cyc = cfg.cycle;
    const auto& pop = cyc.market.population;
    const auto& gf = pop.greed_fear;
    json knots = json::array();
    for (const auto& k : cyc.market.signal.knots()) knots.push_back({k.time, k.value});

    json doc;
    doc["kind"] = std::string(to_string(cfg.kind));
    doc["seed"] = cfg.seed;
    doc["output_dir"] = cfg.output_dir;
    doc["market"] = {{"n_agents", pop.n_agents},
                     {"m_active", cyc.market.engine.active_count},
                     {"initial_cash", pop.initial_cash},
                     {"initial_k", pop.initial_k},
                     {"stock_noise_range", pop.stock_noise_range},
                     {"initial_price", pop.initial_price},
                     {"days_per_year", cyc.market.days_per_year},
                     {"mean_log_greed", gf.mean_log_greed},
                     {"mean_log_fear", gf.mean_log_fear},
                     {"log_variance", gf.log_variance},
                     {"correlation", gf.correlation},
                     {"clearance_sign", cyc.market.engine.clearance_sign},
                     {"min_price_ratio", cyc.market.engine.min_price_ratio}};
    doc["signal"] = {{"knots", knots},
                     {"base_greed_amplitude", cyc.market.signal.base_greed_amplitude()},
                     {"base_fear_amplitude", cyc.market.signal.base_fear_amplitude()}};
    doc["hazard"] = {{"gamma1", cyc.hazard.gamma1},
                     {"gamma2", cyc.hazard.gamma2},
                     {"gamma3", cyc.hazard.gamma3},
                     {"hazard_cap", cyc.hazard.hazard_cap}};
    doc["schedule"] = {{"kind", std::string(to_string(cyc.schedule.kind))},
                       {"rate_param", cyc.schedule.rate_param},
                       {"first_year_total", cyc.schedule.first_year_total}};
    doc["cycle"] = {{"pre_phase", cyc.pre_phase},
                    {"t_m", cyc.t_m},
                    {"target_rate", cyc.target_rate ? json(*cyc.target_rate) : json(nullptr)},
                    {"horizon", cyc.horizon},
                    {"n_paths", cyc.n_paths},
                    {"checkpoints", cyc.checkpoints},
                    {"histogram_bins", cyc.histogram_bins}};
    doc["regimes"] = {{"investment", cfg.regimes.investment},
                      {"withdrawal", cfg.regimes.withdrawal},
                      {"horizon", cfg.regimes.horizon}};
    const auto& pz = cfg.ponzi;
    doc["ponzi"] = {{"r_n", pz.classical.r_n},
                    {"r_p", pz.classical.r_p},
                    {"r_w", pz.classical.r_w},
                    {"t_m", pz.classical.t_m},
                    {"S0", pz.classical.S0},
                    {"c0", pz.speculative.c0},
                    {"r_star_external", pz.speculative.r_star_external},
                    {"literal_nominal_rate", pz.speculative.literal_nominal_rate},
                    {"horizon", pz.horizon},
                    {"dt", pz.dt},
                    {"steady_window", pz.steady_window},
                    {"critical_exponent", pz.critical_exponent},
                    {"critical_horizon", pz.critical.horizon},
                    {"critical_tol", pz.critical.tol},
                    {"critical_low", pz.critical.low},
                    {"critical_high", pz.critical.high}};
    doc["fit"] = {{"low", cfg.fit.low},
                  {"high", cfg.fit.high},
                  {"S0", cfg.fit.S0},
                  {"tol", cfg.fit.tol}};
    doc["stats"] = {{"c0_sigma", cfg.stats.c0_sigma}};
    return doc;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string text = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace aspp

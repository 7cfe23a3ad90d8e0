#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "aspp/config.hpp"
#include "aspp/errors.hpp"
#include "aspp/io.hpp"
#include "aspp/run.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    int threads = 0;
    std::string model = "classical";
};

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const aspp::ConfigError*>(&e)) return "config";
    if (dynamic_cast<const aspp::IoError*>(&e)) return "io";
    if (dynamic_cast<const aspp::DivergenceError*>(&e)) return "divergence";
    if (dynamic_cast<const aspp::BracketError*>(&e)) return "bracket";
    if (dynamic_cast<const aspp::NoSupplyError*>(&e)) return "no_supply";
    if (dynamic_cast<const aspp::LiquidityError*>(&e)) return "liquidity";
    if (dynamic_cast<const aspp::DomainError*>(&e)) return "domain";
    return "internal";
}

int run(aspp::ExperimentKind kind, const Overrides& o) {
    aspp::ExperimentConfig cfg;
    if (!o.config.empty()) cfg = aspp::parse_config(std::filesystem::path(o.config));
    cfg.kind = kind;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.cycle.base_seed = *o.seed;
    }
    if (o.paths) cfg.cycle.n_paths = *o.paths;

    const auto summary = aspp::run_experiment(cfg, o.threads);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Agent-based stock market with Ponzi-style investment flows"};
    app.set_version_flag("--version", std::string(aspp::code_version()));
    app.require_subcommand(1);

    Overrides o;
    auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "base seed");
        sub->add_option("--paths", o.paths, "number of Monte-Carlo paths")->check(CLI::PositiveNumber);
        sub->add_option("--threads", o.threads, "OpenMP threads (0: runtime default)")
            ->check(CLI::NonNegativeNumber);
    };

    std::optional<aspp::ExperimentKind> kind;
    auto verb = [&](const char* name, const char* help, aspp::ExperimentKind k) {
        auto* sub = app.add_subcommand(name, help);
        common(sub);
        sub->callback([&kind, k] { kind = k; });
        return sub;
    };
    verb("simulate", "zero-investment ensemble", aspp::ExperimentKind::aspp);
    verb("regimes", "investment / zero / withdrawal comparison", aspp::ExperimentKind::regimes);
    verb("cycle", "full investment cycle", aspp::ExperimentKind::cycle);
    verb("fit-c0", "calibrate the speculative ODE against a cycle ensemble",
         aspp::ExperimentKind::fit_c0);
    verb("stats", "pooled return statistics against the theoretical rate",
         aspp::ExperimentKind::stats);
    auto* ponzi = app.add_subcommand("ponzi", "solve a Ponzi ODE");
    common(ponzi);
    ponzi->add_option("--model", o.model, "classical or speculative")
        ->check(CLI::IsMember({"classical", "speculative"}));
    ponzi->callback([&kind, &o] {
        kind = o.model == "classical" ? aspp::ExperimentKind::ponzi_classical
                                      : aspp::ExperimentKind::ponzi_speculative;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        return run(*kind, o);
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", error_kind(e)}, {"message", e.what()}};
        if (auto* d = dynamic_cast<const aspp::DivergenceError*>(&e))
            err["last_finite_time"] = d->last_finite_time();
        std::cerr << err.dump() << '\n';
        return std::string_view(error_kind(e)) == "config" ? 2 : 1;
    }
}

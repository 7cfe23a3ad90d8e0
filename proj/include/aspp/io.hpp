#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aspp/config.hpp"
#include "aspp/cycle.hpp"
#include "aspp/ponzi.hpp"

namespace aspp {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// 17 significant digits, so a double survives a write/read cycle bit for bit.
std::string format_double(double x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    const std::vector<double>& row(std::size_t i) const { return rows.at(i); }
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Columns: t, price, log_price, Ha, Hp, H, xin, R, S_ext, total_cash.
void write_path_csv(const std::filesystem::path& path, const PathRecord& rec);

// Per day: mean/sd/p10/p50/p90 for log_price, Ha and Hp, then the means of
// the remaining tracked series.
void write_ensemble_csv(const std::filesystem::path& path, const EnsembleStats& stats);

// One row per bin: t, bin_lo, bin_hi, count.
void write_histogram_csv(const std::filesystem::path& path,
                         const std::vector<CashHistogram>& histograms);

// Columns t, S, R and, when present, r_n and J.
void write_ode_csv(const std::filesystem::path& path, const OdeSolution& sol);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

struct RunCounters {
    std::size_t clamp_events = 0;
    std::size_t failures = 0;
};

nlohmann::json make_manifest(const ExperimentConfig& cfg, const RunCounters& counters);

nlohmann::json to_json(const ReturnStats& stats);

const char* code_version();

}  // namespace aspp

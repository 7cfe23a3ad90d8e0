#include "aspp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace aspp {

using nlohmann::json;

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing: " + std::strerror(errno));
    return out;
}

void close_checked(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError(path.string() + ": write failed");
}

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : path_(path), out_(open_for_write(path)) {}

    void header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
        out_ << '\n';
    }
    template <class... Xs>
    void row(const Xs&... xs) {
        bool first = true;
        ((out_ << (first ? "" : ",") << format_double(double(xs)), first = false), ...);
        out_ << '\n';
    }
    void row(const std::vector<double>& xs) {
        for (std::size_t i = 0; i < xs.size(); ++i) out_ << (i ? "," : "") << format_double(xs[i]);
        out_ << '\n';
    }
    void close() { close_checked(out_, path_); }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError("csv: no column named " + name);
    return std::size_t(it - header.begin());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            if (cell == "nan") v = NAN;
            else if (cell == "inf") v = INFINITY;
            else if (cell == "-inf") v = -INFINITY;
            else {
                auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                    throw IoError(path.string() + ":" + std::to_string(lineno) +
                                  ": bad number '" + cell + "'");
            }
            row.push_back(v);
        }
        if (row.size() != table.header.size())
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": column count mismatch");
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_path_csv(const std::filesystem::path& path, const PathRecord& rec) {
    CsvWriter csv(path);
    csv.header({"t", "price", "log_price", "Ha", "Hp", "H", "xin", "R", "S_ext", "total_cash"});
    for (std::size_t i = 0; i < rec.size(); ++i)
        csv.row(rec.t[i], rec.price[i], rec.log_price[i], rec.hazard_aspp[i],
                rec.hazard_investor[i], rec.total_risk[i], rec.flow_in[i], rec.withdrawable[i],
                rec.external_value[i], rec.total_cash[i]);
    csv.close();
}

void write_ensemble_csv(const std::filesystem::path& path, const EnsembleStats& stats) {
    CsvWriter csv(path);
    std::vector<std::string> names{"t"};
    const std::pair<const char*, const SeriesBand*> bands[] = {
        {"log_price", &stats.log_price}, {"Ha", &stats.hazard_aspp}, {"Hp", &stats.hazard_investor}};
    for (const auto& [name, band] : bands)
        for (const char* suffix : {"_mean", "_sd", "_p10", "_p50", "_p90"})
            names.push_back(std::string(name) + suffix);
    for (const char* name : {"price_mean", "H_mean", "xin_mean", "R_mean", "S_ext_mean",
                             "total_cash_mean"})
        names.emplace_back(name);
    csv.header(names);

    std::vector<double> row;
    for (std::size_t d = 0; d < stats.t.size(); ++d) {
        row.clear();
        row.push_back(stats.t[d]);
        for (const auto& [name, band] : bands)
            for (const auto* v : {&band->mean, &band->sd, &band->p10, &band->p50, &band->p90})
                row.push_back((*v)[d]);
        for (const auto* v : {&stats.mean_price, &stats.mean_total_risk, &stats.mean_flow_in,
                              &stats.mean_withdrawable, &stats.mean_external_value,
                              &stats.mean_total_cash})
            row.push_back((*v)[d]);
        csv.row(row);
    }
    csv.close();
}

void write_histogram_csv(const std::filesystem::path& path,
                         const std::vector<CashHistogram>& histograms) {
    CsvWriter csv(path);
    csv.header({"t", "bin_lo", "bin_hi", "count"});
    for (const auto& h : histograms)
        for (std::size_t b = 0; b < h.counts.size(); ++b)
            csv.row(h.t, h.edges[b], h.edges[b + 1], h.counts[b]);
    csv.close();
}

void write_ode_csv(const std::filesystem::path& path, const OdeSolution& sol) {
    CsvWriter csv(path);
    const bool speculative = !sol.r_n.empty();
    if (speculative) {
        csv.header({"t", "S", "R", "r_n", "J"});
        for (std::size_t i = 0; i < sol.size(); ++i)
            csv.row(sol.t[i], sol.S[i], sol.R[i], sol.r_n[i], sol.J[i]);
    } else {
        csv.header({"t", "S", "R"});
        for (std::size_t i = 0; i < sol.size(); ++i) csv.row(sol.t[i], sol.S[i], sol.R[i]);
    }
    csv.close();
}

void write_json(const std::filesystem::path& path, const json& doc) {
    auto out = open_for_write(path);
    out << doc.dump(2) << '\n';
    close_checked(out, path);
}

const char* code_version() {
#ifdef ASPP_VERSION
    return ASPP_VERSION;
#else
    return "unknown";
#endif
}

json make_manifest(const ExperimentConfig& cfg, const RunCounters& counters) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return {{"kind", std::string(to_string(cfg.kind))},
            {"config_hash", hash},
            {"seed", cfg.seed},
            {"code_version", code_version()},
            {"clamp_events", counters.clamp_events},
            {"path_failures", counters.failures},
            {"realized_rate", "simple daily return annualized by days_per_year"},
            {"config", to_json(cfg)}};
}

json to_json(const ReturnStats& s) {
    return {{"count", s.count},
            {"mean_log_return", s.mean_log_return},
            {"std_log_return", s.std_log_return},
            {"geometric_mean_return", s.geometric_mean_return},
            {"skewness", s.skewness},
            {"excess_kurtosis", s.excess_kurtosis}};
}

}  // namespace aspp

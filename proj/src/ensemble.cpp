#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>

#include <omp.h>

#include "aspp/cycle.hpp"
#include "aspp/errors.hpp"

namespace aspp {

namespace {

// Paths simulated concurrently before folding; bounds peak memory.
constexpr std::size_t kBlockSize = 64;

struct PathDigest {
    std::optional<PathRecord> record;
    MomentAccumulator returns;
    std::string error;
};

PathDigest digest_path(const CycleConfig& cfg, std::size_t path_index) {
    PathDigest d;
    try {
        PathRecord rec = run_path(cfg, path_index);
        for (std::size_t i = 1; i < rec.log_price.size(); ++i)
            d.returns.add(rec.log_price[i] - rec.log_price[i - 1]);
        d.record = std::move(rec);
    } catch (const std::exception& e) {
        d.error = e.what();
    }
    return d;
}

double percentile(std::vector<double>& xs, double q) {
    std::sort(xs.begin(), xs.end());
    const double pos = q * double(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - double(lo)) * (xs[hi] - xs[lo]);
}

// Welford accumulator over paths for one per-day series, plus raw storage
// for the percentile bands.
class BandFolder {
public:
    explicit BandFolder(std::size_t days) : mean_(days, 0.0), m2_(days, 0.0) {}

    void fold(const std::vector<double>& series, std::size_t n_after) {
        const double n = double(n_after);
        for (std::size_t d = 0; d < mean_.size(); ++d) {
            const double delta = series[d] - mean_[d];
            mean_[d] += delta / n;
            m2_[d] += delta * (series[d] - mean_[d]);
        }
        samples_.insert(samples_.end(), series.begin(), series.end());
    }

    SeriesBand finish(std::size_t n) const {
        const std::size_t days = mean_.size();
        SeriesBand band;
        band.mean = mean_;
        band.sd.resize(days);
        band.p10.resize(days);
        band.p50.resize(days);
        band.p90.resize(days);
        std::vector<double> column(n);
        for (std::size_t d = 0; d < days; ++d) {
            band.sd[d] = n > 1 ? std::sqrt(m2_[d] / double(n - 1)) : 0.0;
            if (n == 0) continue;
            for (std::size_t p = 0; p < n; ++p) column[p] = samples_[p * days + d];
            band.p10[d] = percentile(column, 0.10);
            band.p50[d] = percentile(column, 0.50);
            band.p90[d] = percentile(column, 0.90);
        }
        return band;
    }

private:
    std::vector<double> mean_, m2_;
    std::vector<double> samples_;  // path-major
};

// Folds path results strictly in path-index order.
class EnsembleFolder {
public:
    explicit EnsembleFolder(const CycleConfig& cfg)
        : cfg_(cfg),
          days_(cfg.total_days() + 1),
          checkpoints_(cfg.resolved_checkpoints()),
          log_price_(days_),
          hazard_aspp_(days_),
          hazard_investor_(days_),
          pooled_cash_(checkpoints_.size()) {
        for (auto* v : {&price_, &total_risk_, &flow_in_, &withdrawable_, &external_value_,
                        &total_cash_})
            v->assign(days_, 0.0);
        stats_.n_paths = cfg.n_paths;
    }

    void fold(std::size_t path_index, PathDigest&& d) {
        if (!d.record) {
            stats_.failures.push_back({path_index, std::move(d.error)});
            return;
        }
        const PathRecord& rec = *d.record;
        if (stats_.t.empty()) stats_.t = rec.t;
        ++stats_.n_ok;
        stats_.clamp_events += rec.clamp_events;
        log_price_.fold(rec.log_price, stats_.n_ok);
        hazard_aspp_.fold(rec.hazard_aspp, stats_.n_ok);
        hazard_investor_.fold(rec.hazard_investor, stats_.n_ok);
        add(price_, rec.price);
        add(total_risk_, rec.total_risk);
        add(flow_in_, rec.flow_in);
        add(withdrawable_, rec.withdrawable);
        add(external_value_, rec.external_value);
        add(total_cash_, rec.total_cash);
        returns_.merge(d.returns);
        for (std::size_t c = 0; c < rec.snapshots.size() && c < pooled_cash_.size(); ++c) {
            const auto& cash = rec.snapshots[c].cash;
            pooled_cash_[c].insert(pooled_cash_[c].end(), cash.begin(), cash.end());
        }
    }

    EnsembleStats finish() && {
        const std::size_t n = stats_.n_ok;
        stats_.log_price = log_price_.finish(n);
        stats_.hazard_aspp = hazard_aspp_.finish(n);
        stats_.hazard_investor = hazard_investor_.finish(n);
        stats_.mean_price = scaled(price_, n);
        stats_.mean_total_risk = scaled(total_risk_, n);
        stats_.mean_flow_in = scaled(flow_in_, n);
        stats_.mean_withdrawable = scaled(withdrawable_, n);
        stats_.mean_external_value = scaled(external_value_, n);
        stats_.mean_total_cash = scaled(total_cash_, n);
        stats_.pooled_returns = returns_.stats();
        for (std::size_t c = 0; c < checkpoints_.size(); ++c)
            stats_.histograms.push_back(histogram(checkpoints_[c], pooled_cash_[c]));
        return std::move(stats_);
    }

private:
    static void add(std::vector<double>& acc, const std::vector<double>& xs) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += xs[i];
    }
    static std::vector<double> scaled(std::vector<double> xs, std::size_t n) {
        if (n > 0)
            for (double& x : xs) x /= double(n);
        return xs;
    }

    CashHistogram histogram(double t, const std::vector<double>& cash) const {
        CashHistogram h;
        h.t = t;
        const std::size_t bins = cfg_.histogram_bins;
        const double top = cash.empty() ? 1.0 : *std::max_element(cash.begin(), cash.end());
        const double width = (top > 0.0 ? top : 1.0) / double(bins);
        h.edges.resize(bins + 1);
        for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = width * double(b);
        h.counts.assign(bins, 0);
        for (double x : cash) {
            auto b = static_cast<std::size_t>(std::max(0.0, x) / width);
            ++h.counts[std::min(b, bins - 1)];
        }
        return h;
    }

    const CycleConfig& cfg_;
    std::size_t days_;
    std::vector<double> checkpoints_;
    BandFolder log_price_, hazard_aspp_, hazard_investor_;
    std::vector<double> price_, total_risk_, flow_in_, withdrawable_, external_value_, total_cash_;
    MomentAccumulator returns_;
    std::vector<std::vector<double>> pooled_cash_;
    EnsembleStats stats_;
};

}  // namespace

EnsembleStats run_ensemble(const CycleConfig& cfg, int threads) {
    cfg.validate();
    const int team = threads > 0 ? threads : omp_get_max_threads();
    EnsembleFolder folder(cfg);
    std::vector<PathDigest> block;
    for (std::size_t start = 0; start < cfg.n_paths; start += kBlockSize) {
        const std::size_t count = std::min(kBlockSize, cfg.n_paths - start);
        block.assign(count, PathDigest{});
        const auto signed_count = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
        for (std::ptrdiff_t i = 0; i < signed_count; ++i)
            block[std::size_t(i)] = digest_path(cfg, start + std::size_t(i));
        for (std::size_t i = 0; i < count; ++i) folder.fold(start + i, std::move(block[i]));
    }
    return std::move(folder).finish();
}

EnsembleStats run_ensemble_serial(const CycleConfig& cfg) {
    cfg.validate();
    EnsembleFolder folder(cfg);
    for (std::size_t i = 0; i < cfg.n_paths; ++i) folder.fold(i, digest_path(cfg, i));
    return std::move(folder).finish();
}

}  // namespace aspp

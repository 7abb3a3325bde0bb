#include "newsfolio/portfolio.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "newsfolio/errors.hpp"

namespace newsfolio {

std::vector<int> decile_assign(const DailyForecastSet& day, int min_names) {
    const std::size_t n = day.entries.size();
    if (n < static_cast<std::size_t>(min_names))
        throw DataError("day " + day.trading_day.to_string() + " has " + std::to_string(n) +
                        " names, minimum " + std::to_string(min_names));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = day.entries[a];
        const auto& eb = day.entries[b];
        if (ea.prediction != eb.prediction) return ea.prediction < eb.prediction;
        return ea.firm_id < eb.firm_id;
    });

    // Sizes: base everywhere, remainder to extremes outward-in.
    std::array<std::size_t, 10> sizes;
    sizes.fill(n / 10);
    static constexpr int extreme_order[10] = {0, 9, 1, 8, 2, 7, 3, 6, 4, 5};
    for (std::size_t r = 0; r < n % 10; ++r) ++sizes[extreme_order[r]];

    std::vector<int> labels(n, 0);
    std::size_t pos = 0;
    for (int k = 0; k < 10; ++k)
        for (std::size_t i = 0; i < sizes[static_cast<std::size_t>(k)]; ++i)
            labels[order[pos++]] = k + 1;
    return labels;
}

DayReturns daily_decile_returns(const std::vector<int>& labels,
                                const std::vector<ForecastEntry>& entries) {
    if (labels.size() != entries.size())
        throw DataError("decile labels and entries differ in length");
    DayReturns out;
    out.decile.fill(0);
    out.counts.fill(0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        int k = labels[i] - 1;
        out.decile[static_cast<std::size_t>(k)] += entries[i].next_day_return;
        ++out.counts[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < 10; ++k) {
        assert(out.counts[static_cast<std::size_t>(k)] > 0);  // decile_assign never leaves one empty
        out.decile[static_cast<std::size_t>(k)] /= out.counts[static_cast<std::size_t>(k)];
    }
    out.hl = out.decile[9] - out.decile[0];
    return out;
}

PerfStats annualize(const std::vector<double>& daily_returns) {
    const std::size_t n = daily_returns.size();
    if (n < 2) throw NumericError("annualize requires at least 2 days");
    double mean = std::accumulate(daily_returns.begin(), daily_returns.end(), 0.0) /
                  static_cast<double>(n);
    double ss = 0;
    for (double r : daily_returns) ss += (r - mean) * (r - mean);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0) throw NumericError("zero variance: Sharpe ratio undefined");
    PerfStats stats;
    stats.n_days = n;
    stats.mean_annual_pct = kTradingDaysPerYear * mean * 100.0;
    stats.sd_annual_pct = std::sqrt(static_cast<double>(kTradingDaysPerYear)) * sd * 100.0;
    stats.sharpe = stats.mean_annual_pct / stats.sd_annual_pct;
    return stats;
}

std::vector<double> DecileSeries::hl_series() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.hl);
    return out;
}

std::vector<double> DecileSeries::decile_series(int decile_1based) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.decile[static_cast<std::size_t>(decile_1based - 1)]);
    return out;
}

DecileSeries build_decile_series(const std::vector<DailyForecastSet>& days, int min_names) {
    DecileSeries series;
    for (const auto& day : days) {
        std::vector<int> labels;
        try {
            labels = decile_assign(day, min_names);
        } catch (const DataError& e) {
            series.skipped.emplace_back(day.trading_day, e.what());
            continue;
        }
        series.dates.push_back(day.trading_day);
        series.rows.push_back(daily_decile_returns(labels, day.entries));
    }
    return series;
}

std::vector<DecayPoint> decay_curve(const std::vector<DailyForecastSet>& days, int min_names) {
    std::array<std::vector<double>, kDecayHorizons> hl_by_horizon;
    for (const auto& day : days) {
        std::vector<int> labels;
        try {
            labels = decile_assign(day, min_names);
        } catch (const DataError&) {
            continue;
        }
        for (int tau = 0; tau < kDecayHorizons; ++tau) {
            double lo_sum = 0, hi_sum = 0;
            int lo_n = 0, hi_n = 0;
            for (std::size_t i = 0; i < day.entries.size(); ++i) {
                const auto& ret = day.entries[i].horizon_returns[static_cast<std::size_t>(tau)];
                if (!ret) continue;  // missing horizon drops the firm-day for this horizon only
                if (labels[i] == 1) { lo_sum += *ret; ++lo_n; }
                else if (labels[i] == 10) { hi_sum += *ret; ++hi_n; }
            }
            if (lo_n == 0 || hi_n == 0) continue;
            hl_by_horizon[static_cast<std::size_t>(tau)].push_back(hi_sum / hi_n - lo_sum / lo_n);
        }
    }

    std::vector<DecayPoint> curve;
    for (int tau = 0; tau < kDecayHorizons; ++tau) {
        const auto& series = hl_by_horizon[static_cast<std::size_t>(tau)];
        DecayPoint pt;
        pt.horizon = tau;
        pt.n_days = series.size();
        if (series.size() < 2) {
            pt.omitted = true;
        } else {
            double mean = std::accumulate(series.begin(), series.end(), 0.0) /
                          static_cast<double>(series.size());
            double ss = 0;
            for (double r : series) ss += (r - mean) * (r - mean);
            double sd = std::sqrt(ss / static_cast<double>(series.size() - 1));
            pt.mean_annual_pct = kTradingDaysPerYear * mean * 100.0;
            // CI for the annualized mean: the 252 factor must match the mean's.
            pt.ci_half_width = 1.96 * kTradingDaysPerYear * sd /
                               std::sqrt(static_cast<double>(series.size())) * 100.0;
        }
        curve.push_back(pt);
    }
    return curve;
}

}  // namespace newsfolio

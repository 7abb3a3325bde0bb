#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "newsfolio/dates.hpp"

namespace newsfolio {

constexpr int kTradingDaysPerYear = 252;
constexpr int kDecayHorizons = 7;   // 0..6
constexpr int kMinNamesPerDay = 20;

struct ForecastEntry {
    std::string firm_id;
    double prediction = 0;
    double next_day_return = 0;  // realized r_{t+1}
    // Realized returns at t+0 .. t+6 (horizon 1 duplicates next_day_return).
    std::array<std::optional<double>, kDecayHorizons> horizon_returns;
};

struct DailyForecastSet {
    Date trading_day;
    std::vector<ForecastEntry> entries;
};

// Decile labels 1..10, ranked ascending by prediction (ties by firm_id).
// Remainder names go to the extreme deciles first: 1, 10, 2, 9, ...
// Throws DataError when fewer than min_names entries are present.
std::vector<int> decile_assign(const DailyForecastSet& day, int min_names = kMinNamesPerDay);

struct DayReturns {
    std::array<double, 10> decile;
    double hl = 0;                  // decile[9] - decile[0], exact
    std::array<int, 10> counts;
};

DayReturns daily_decile_returns(const std::vector<int>& labels,
                                const std::vector<ForecastEntry>& entries);

struct PerfStats {
    double mean_annual_pct = 0;   // 252 * daily mean * 100
    double sd_annual_pct = 0;     // sqrt(252) * daily sd (n-1) * 100
    double sharpe = 0;            // mean_annual_pct / sd_annual_pct
    std::size_t n_days = 0;
};

// Throws NumericError on n < 2 or zero variance.
PerfStats annualize(const std::vector<double>& daily_returns);

struct DecileSeries {
    std::vector<Date> dates;
    std::vector<DayReturns> rows;
    std::vector<std::pair<Date, std::string>> skipped;  // (day, reason)

    std::vector<double> hl_series() const;
    std::vector<double> decile_series(int decile_1based) const;
};

DecileSeries build_decile_series(const std::vector<DailyForecastSet>& days,
                                 int min_names = kMinNamesPerDay);

struct DecayPoint {
    int horizon = 0;
    double mean_annual_pct = 0;
    double ci_half_width = 0;     // 1.96 * sqrt(252) * sd_daily / sqrt(n_days) * 100
    std::size_t n_days = 0;
    bool omitted = false;         // fewer than 2 days of data at this horizon
};

// H-L series per horizon using day-t decile labels and returns at t+tau.
std::vector<DecayPoint> decay_curve(const std::vector<DailyForecastSet>& days,
                                    int min_names = kMinNamesPerDay);

}  // namespace newsfolio

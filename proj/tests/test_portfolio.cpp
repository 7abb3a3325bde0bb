#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "newsfolio/errors.hpp"
#include "newsfolio/portfolio.hpp"

using namespace newsfolio;

namespace {

DailyForecastSet random_day(int n, std::uint64_t seed) {
    DailyForecastSet day;
    day.trading_day = Date(2010, 5, 3);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i) {
        ForecastEntry e;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "F%04d", i);
        e.firm_id = buf;
        e.prediction = normal(rng);
        e.next_day_return = 0.01 * normal(rng);
        day.entries.push_back(std::move(e));
    }
    return day;
}

}  // namespace

TEST_CASE("decile assignment matches a sort-and-slice oracle") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        int n = 20 + static_cast<int>(seed * 7);
        DailyForecastSet day = random_day(n, seed);
        std::vector<int> labels = decile_assign(day);
        REQUIRE(labels.size() == day.entries.size());

        // Oracle: sort indices by (prediction, firm_id), hand out extras to
        // deciles 1, 10, 2, 9, 3, 8, 4, 7, 5, 6.
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const auto& ea = day.entries[static_cast<std::size_t>(a)];
            const auto& eb = day.entries[static_cast<std::size_t>(b)];
            if (ea.prediction != eb.prediction) return ea.prediction < eb.prediction;
            return ea.firm_id < eb.firm_id;
        });
        std::array<int, 10> size;
        size.fill(n / 10);
        const int extra_order[10] = {0, 9, 1, 8, 2, 7, 3, 6, 4, 5};
        for (int k = 0; k < n % 10; ++k) ++size[static_cast<std::size_t>(extra_order[k])];
        std::vector<int> want(static_cast<std::size_t>(n));
        int pos = 0;
        for (int dec = 0; dec < 10; ++dec)
            for (int k = 0; k < size[static_cast<std::size_t>(dec)]; ++k)
                want[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] = dec + 1;
        CHECK(labels == want);
    }
}

TEST_CASE("decile sizes for n = 23") {
    DailyForecastSet day = random_day(23, 4);
    std::vector<int> labels = decile_assign(day);
    std::array<int, 10> counts{};
    for (int l : labels) ++counts[static_cast<std::size_t>(l - 1)];
    CHECK(counts == std::array<int, 10>{3, 3, 2, 2, 2, 2, 2, 2, 2, 3});
}

TEST_CASE("prediction ties break by firm_id") {
    DailyForecastSet day = random_day(20, 5);
    for (auto& e : day.entries) e.prediction = 1.0;
    std::vector<int> labels = decile_assign(day);
    // Lexicographically smallest firms land in decile 1.
    for (std::size_t i = 0; i < 20; ++i)
        CHECK(labels[i] == static_cast<int>(i / 2) + 1);
}

TEST_CASE("too few names throws") {
    DailyForecastSet day = random_day(19, 6);
    CHECK_THROWS_AS(decile_assign(day), DataError);
    CHECK(kMinNamesPerDay == 20);
}

TEST_CASE("daily decile returns are grouped means and H-L is exact") {
    DailyForecastSet day = random_day(57, 8);
    std::vector<int> labels = decile_assign(day);
    DayReturns got = daily_decile_returns(labels, day.entries);
    for (int dec = 1; dec <= 10; ++dec) {
        double sum = 0;
        int cnt = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] != dec) continue;
            sum += day.entries[i].next_day_return;
            ++cnt;
        }
        CHECK(got.counts[static_cast<std::size_t>(dec - 1)] == cnt);
        CHECK(got.decile[static_cast<std::size_t>(dec - 1)] == doctest::Approx(sum / cnt).epsilon(1e-14));
    }
    CHECK(got.hl == got.decile[9] - got.decile[0]);  // bitwise identity
}

TEST_CASE("annualization against a hand-computed fixture") {
    std::vector<double> r = {0.01, -0.005, 0.02, 0.0};
    PerfStats s = annualize(r);
    double mean = 0.00625;
    double var = ((0.01 - mean) * (0.01 - mean) + (-0.005 - mean) * (-0.005 - mean) +
                  (0.02 - mean) * (0.02 - mean) + (0.0 - mean) * (0.0 - mean)) / 3.0;
    CHECK(s.mean_annual_pct == doctest::Approx(252 * mean * 100).epsilon(1e-12));
    CHECK(s.sd_annual_pct == doctest::Approx(std::sqrt(252 * var) * 100).epsilon(1e-12));
    CHECK(s.sharpe == doctest::Approx(s.mean_annual_pct / s.sd_annual_pct).epsilon(1e-12));
    CHECK(s.n_days == 4);
    CHECK(kTradingDaysPerYear == 252);
    CHECK_THROWS_AS(annualize({0.01}), NumericError);
    CHECK_THROWS_AS(annualize({0.01, 0.01, 0.01}), NumericError);
}

TEST_CASE("decile series skips bad days but keeps the rest") {
    std::vector<DailyForecastSet> days;
    days.push_back(random_day(40, 11));
    days.push_back(random_day(12, 12));  // too thin
    DailyForecastSet d3 = random_day(40, 13);
    d3.trading_day = Date(2010, 5, 4);
    days.push_back(d3);
    DecileSeries series = build_decile_series(days);
    CHECK(series.dates.size() == 2);
    REQUIRE(series.skipped.size() == 1);
    CHECK(series.skipped[0].first == Date(2010, 5, 3));
    CHECK(series.hl_series().size() == 2);
    CHECK(series.decile_series(10).size() == 2);
    CHECK(series.hl_series()[0] == series.rows[0].hl);
}

TEST_CASE("decay horizon 1 reproduces the standard H-L series") {
    std::vector<DailyForecastSet> days;
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal;
    for (int t = 0; t < 90; ++t) {
        DailyForecastSet day = random_day(35, 100 + static_cast<std::uint64_t>(t));
        day.trading_day = Date{Date(2010, 1, 4).serial + t};
        for (auto& e : day.entries) {
            for (int tau = 0; tau < kDecayHorizons; ++tau)
                e.horizon_returns[static_cast<std::size_t>(tau)] = 0.01 * normal(rng);
            e.horizon_returns[1] = e.next_day_return;
        }
        days.push_back(std::move(day));
    }
    std::vector<DecayPoint> curve = decay_curve(days);
    REQUIRE(curve.size() == kDecayHorizons);
    DecileSeries series = build_decile_series(days);
    PerfStats hl = annualize(series.hl_series());
    CHECK(curve[1].horizon == 1);
    CHECK(curve[1].mean_annual_pct == doctest::Approx(hl.mean_annual_pct).epsilon(1e-12));
    CHECK(curve[1].n_days == 90);
    // CI formula spot check.
    std::vector<double> hl_series = series.hl_series();
    double m = 0;
    for (double v : hl_series) m += v;
    m /= hl_series.size();
    double var = 0;
    for (double v : hl_series) var += (v - m) * (v - m);
    var /= (hl_series.size() - 1);
    double want_ci = 1.96 * 252.0 * std::sqrt(var / hl_series.size()) * 100;
    CHECK(curve[1].ci_half_width == doctest::Approx(want_ci).epsilon(1e-9));
}

TEST_CASE("decay drops a firm-day only from horizons with missing returns") {
    std::vector<DailyForecastSet> days;
    for (int t = 0; t < 5; ++t) {
        DailyForecastSet day = random_day(25, 200 + static_cast<std::uint64_t>(t));
        day.trading_day = Date{Date(2011, 3, 1).serial + t};
        for (auto& e : day.entries)
            for (int tau = 0; tau < kDecayHorizons; ++tau)
                e.horizon_returns[static_cast<std::size_t>(tau)] = e.next_day_return;
        // Horizon 6 is unobservable for everyone on the last two days.
        if (t >= 3)
            for (auto& e : day.entries) e.horizon_returns[6].reset();
        days.push_back(std::move(day));
    }
    std::vector<DecayPoint> curve = decay_curve(days);
    CHECK(curve[0].n_days == 5);
    CHECK(curve[6].n_days == 3);
    CHECK_FALSE(curve[6].omitted);
}

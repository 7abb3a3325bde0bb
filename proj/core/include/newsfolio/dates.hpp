#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace newsfolio {

// Calendar date, stored as a serial day count (days since 1970-01-01).
struct Date {
    std::int32_t serial = 0;

    Date() = default;
    explicit Date(std::int32_t s) : serial(s) {}
    Date(int y, unsigned m, unsigned d);

    auto operator<=>(const Date&) const = default;

    int year() const;
    unsigned month() const;
    unsigned day() const;
    // 0 = Sunday .. 6 = Saturday
    int weekday() const { return (((serial % 7) + 11) % 7); }
    bool is_weekend() const { int w = weekday(); return w == 0 || w == 6; }

    Date next() const { return Date{serial + 1}; }

    // Months since year 0, used as a month key (yyyy*12 + mm-1).
    int month_key() const { return year() * 12 + static_cast<int>(month()) - 1; }

    std::string to_string() const;          // YYYY-MM-DD
    std::string month_string() const;       // YYYY-MM
    static Date parse(const std::string& s);
};

std::string month_key_to_string(int month_key);
int parse_month_key(const std::string& yyyy_mm);

// Instant in UTC, microseconds since the Unix epoch.
struct Timestamp {
    std::int64_t micros_utc = 0;
    auto operator<=>(const Timestamp&) const = default;

    // Parses "YYYY-MM-DDTHH:MM:SS[.ffffff]±HH:MM" (explicit offset required).
    static Timestamp parse(const std::string& s);
};

// UTC offset (seconds) of US Eastern wall-clock at the given UTC instant.
// Handles the 1987-2006 and post-2007 DST rule changes.
int eastern_offset_seconds(std::int64_t micros_utc);

// UTC instant of 16:00 US Eastern wall-clock on the given date.
Timestamp market_close(Date d);

// Strictly increasing sequence of trading days.
class TradingCalendar {
public:
    TradingCalendar() = default;
    explicit TradingCalendar(std::vector<Date> days);

    const std::vector<Date>& days() const { return days_; }
    bool empty() const { return days_.empty(); }
    std::size_t size() const { return days_.size(); }
    Date front() const { return days_.front(); }
    Date back() const { return days_.back(); }

    bool contains(Date d) const;
    // Index of d, or -1 when absent.
    std::ptrdiff_t index_of(Date d) const;
    // Trading day k steps after d (d must be in the calendar); false when past the end.
    bool shift(Date d, int k, Date& out) const;

    // Earliest trading day t with ts <= 16:00 ET of t. Throws DataError when ts
    // falls after the final day's close.
    Date assign_trading_day(Timestamp ts) const;

private:
    std::vector<Date> days_;
    std::vector<std::int64_t> close_micros_;  // market_close per day, ascending
};

}  // namespace newsfolio

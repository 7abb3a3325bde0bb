#include "newsfolio/dates.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "newsfolio/errors.hpp"

namespace newsfolio {

namespace {

// Howard Hinnant's civil-from-days / days-from-civil.
std::int32_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int32_t>(doe) - 719468;
}

void civil_from_days(std::int32_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

// Serial of the n-th (1-based) given weekday (0=Sun) of a month.
std::int32_t nth_weekday(int y, unsigned m, int wd, int n) {
    Date first(y, m, 1);
    int delta = (wd - first.weekday() + 7) % 7;
    return first.serial + delta + 7 * (n - 1);
}

std::int32_t last_weekday(int y, unsigned m, int wd) {
    unsigned last = (m == 12) ? 31u : static_cast<unsigned>(Date(y, m + 1, 1).serial - Date(y, m, 1).serial);
    Date d(y, m, last);
    int delta = (d.weekday() - wd + 7) % 7;
    return d.serial - delta;
}

constexpr std::int64_t kMicrosPerSec = 1000000LL;
constexpr std::int64_t kMicrosPerDay = 86400LL * kMicrosPerSec;

}  // namespace

Date::Date(int y, unsigned m, unsigned d) : serial(days_from_civil(y, m, d)) {}

int Date::year() const {
    int y; unsigned m, d;
    civil_from_days(serial, y, m, d);
    return y;
}

unsigned Date::month() const {
    int y; unsigned m, d;
    civil_from_days(serial, y, m, d);
    return m;
}

unsigned Date::day() const {
    int y; unsigned m, d;
    civil_from_days(serial, y, m, d);
    return d;
}

std::string Date::to_string() const {
    int y; unsigned m, d;
    civil_from_days(serial, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
    return buf;
}

std::string Date::month_string() const {
    int y; unsigned m, d;
    civil_from_days(serial, y, m, d);
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02u", y, m);
    return buf;
}

Date Date::parse(const std::string& s) {
    int y, m, d;
    if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 || d > 31)
        throw DataError("bad date: '" + s + "'");
    Date date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    // The serial conversion normalizes overflow days (e.g. Feb 30); reject them.
    if (date.year() != y || date.month() != static_cast<unsigned>(m) ||
        date.day() != static_cast<unsigned>(d))
        throw DataError("bad date: '" + s + "'");
    return date;
}

std::string month_key_to_string(int month_key) {
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", month_key / 12, month_key % 12 + 1);
    return buf;
}

int parse_month_key(const std::string& yyyy_mm) {
    int y, m;
    if (std::sscanf(yyyy_mm.c_str(), "%d-%d", &y, &m) != 2 || m < 1 || m > 12)
        throw DataError("bad month: '" + yyyy_mm + "'");
    return y * 12 + m - 1;
}

Timestamp Timestamp::parse(const std::string& s) {
    int y, mo, d, h, mi, sec;
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6)
        throw DataError("bad timestamp: '" + s + "'");
    std::size_t pos = static_cast<std::size_t>(consumed);
    std::int64_t frac_micros = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::int64_t scale = 100000;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            if (scale > 0) frac_micros += (s[pos] - '0') * scale;
            scale /= 10;
            ++pos;
        }
    }
    if (pos >= s.size()) throw DataError("timestamp missing UTC offset: '" + s + "'");
    int off_sign;
    if (s[pos] == '+') off_sign = 1;
    else if (s[pos] == '-') off_sign = -1;
    else if (s[pos] == 'Z') { off_sign = 0; }
    else throw DataError("timestamp missing UTC offset: '" + s + "'");
    int oh = 0, om = 0;
    if (off_sign != 0) {
        if (std::sscanf(s.c_str() + pos + 1, "%d:%d", &oh, &om) != 2)
            throw DataError("bad UTC offset in timestamp: '" + s + "'");
    }
    std::int64_t day_serial = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    std::int64_t local = day_serial * kMicrosPerDay +
                         (static_cast<std::int64_t>(h) * 3600 + mi * 60 + sec) * kMicrosPerSec +
                         frac_micros;
    std::int64_t offset = static_cast<std::int64_t>(off_sign) * (oh * 3600 + om * 60) * kMicrosPerSec;
    return Timestamp{local - offset};
}

int eastern_offset_seconds(std::int64_t micros_utc) {
    // Work out the year from the UTC instant; DST transitions are far enough
    // from Jan 1 that the UTC/local year mismatch around midnight is harmless.
    std::int32_t day = static_cast<std::int32_t>(micros_utc >= 0 ? micros_utc / kMicrosPerDay
                                                                 : (micros_utc - (kMicrosPerDay - 1)) / kMicrosPerDay);
    int y; unsigned m, d;
    civil_from_days(day, y, m, d);

    std::int32_t dst_start_day, dst_end_day;
    if (y >= 2007) {
        dst_start_day = nth_weekday(y, 3, 0, 2);   // second Sunday of March
        dst_end_day = nth_weekday(y, 11, 0, 1);    // first Sunday of November
    } else {
        dst_start_day = nth_weekday(y, 4, 0, 1);   // first Sunday of April
        dst_end_day = last_weekday(y, 10, 0);      // last Sunday of October
    }
    // Transitions at 02:00 local standard (07:00 UTC) and 02:00 local daylight (06:00 UTC).
    std::int64_t dst_start = dst_start_day * kMicrosPerDay + 7LL * 3600 * kMicrosPerSec;
    std::int64_t dst_end = dst_end_day * kMicrosPerDay + 6LL * 3600 * kMicrosPerSec;
    bool dst = micros_utc >= dst_start && micros_utc < dst_end;
    return dst ? -4 * 3600 : -5 * 3600;
}

Timestamp market_close(Date d) {
    // 16:00 Eastern wall-clock; resolve the offset from the standard-time guess
    // (16:00 is never inside a transition window, so one refinement suffices).
    std::int64_t guess = d.serial * kMicrosPerDay + 21LL * 3600 * kMicrosPerSec;  // 16:00 EST
    int off = eastern_offset_seconds(guess);
    std::int64_t utc = d.serial * kMicrosPerDay + (16LL * 3600 - off) * kMicrosPerSec;
    return Timestamp{utc};
}

TradingCalendar::TradingCalendar(std::vector<Date> days) : days_(std::move(days)) {
    for (std::size_t i = 1; i < days_.size(); ++i)
        if (!(days_[i - 1] < days_[i]))
            throw DataError("trading calendar not strictly increasing at " + days_[i].to_string());
    close_micros_.reserve(days_.size());
    for (Date d : days_) close_micros_.push_back(market_close(d).micros_utc);
}

bool TradingCalendar::contains(Date d) const {
    return std::binary_search(days_.begin(), days_.end(), d);
}

std::ptrdiff_t TradingCalendar::index_of(Date d) const {
    auto it = std::lower_bound(days_.begin(), days_.end(), d);
    if (it == days_.end() || *it != d) return -1;
    return it - days_.begin();
}

bool TradingCalendar::shift(Date d, int k, Date& out) const {
    std::ptrdiff_t i = index_of(d);
    if (i < 0) return false;
    std::ptrdiff_t j = i + k;
    if (j < 0 || j >= static_cast<std::ptrdiff_t>(days_.size())) return false;
    out = days_[j];
    return true;
}

Date TradingCalendar::assign_trading_day(Timestamp ts) const {
    if (days_.empty()) throw DataError("empty trading calendar");
    auto it = std::lower_bound(close_micros_.begin(), close_micros_.end(), ts.micros_utc);
    if (it == close_micros_.end())
        throw DataError("timestamp after final trading-day close");
    return days_[it - close_micros_.begin()];
}

}  // namespace newsfolio

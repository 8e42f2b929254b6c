#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "lvbuddy/errors.hpp"

namespace lvbuddy {

// Dates are plain calendar days; slots within a day are positional. No
// timezone or DST handling anywhere.
using Date = std::chrono::sys_days;

inline Date make_date(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                       std::chrono::day{day}};
    if (!ymd.ok()) throw InvalidInputError("invalid calendar date");
    return Date{ymd};
}

// Parses "YYYY-MM-DD".
inline std::optional<Date> try_parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char extra = 0;
    std::string buf(text);
    if (std::sscanf(buf.c_str(), "%d-%u-%u%c", &y, &m, &d, &extra) != 3)
        return std::nullopt;
    using namespace std::chrono;
    year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                       std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

inline Date parse_date(std::string_view text) {
    if (auto d = try_parse_date(text)) return *d;
    throw SchemaError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
}

inline std::string format_date(Date date) {
    std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
}

inline bool is_weekend(Date date) {
    std::chrono::weekday wd{date};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

// Signed whole days from `from` to `to`.
inline long days_between(Date from, Date to) {
    return (to - from).count();
}

} // namespace lvbuddy

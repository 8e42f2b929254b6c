#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lvbuddy/calendar.hpp"
#include "lvbuddy/errors.hpp"

namespace lvbuddy {

inline constexpr int kSlotsPerDay = 48;
inline constexpr int kSlotsPerWeek = 7 * kSlotsPerDay;

// A fixed-resolution energy time series, kWh per half-hour slot, covering
// whole days from `start_date`. Slot 0 of each day is 00:00-00:30.
struct HalfHourlySeries {
    Date start_date{};
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    long days() const { return static_cast<long>(values.size()) / kSlotsPerDay; }

    // First day not covered by the series.
    Date end_date() const { return start_date + std::chrono::days{days()}; }

    bool covers(Date start, long n_days) const {
        const long off = days_between(start_date, start);
        return off >= 0 && off + n_days <= days();
    }

    // Slot index of 00:00 on `date`.
    std::size_t offset_of(Date date) const {
        const long off = days_between(start_date, date);
        if (off < 0 || off >= days())
            throw RangeError("date " + format_date(date) + " outside series range");
        return static_cast<std::size_t>(off) * kSlotsPerDay;
    }
};

// Checks the structural invariants: non-empty, whole days, finite values.
inline void validate_series(const HalfHourlySeries& series, const std::string& what = "series") {
    if (series.values.empty())
        throw InvalidInputError(what + " is empty");
    if (series.values.size() % kSlotsPerDay != 0)
        throw InvalidInputError(what + " length " + std::to_string(series.values.size()) +
                                " is not a multiple of " + std::to_string(kSlotsPerDay));
    for (double v : series.values)
        if (!std::isfinite(v))
            throw InvalidInputError(what + " contains a non-finite value");
}

// Mean kWh per day: (1/d) * sum of all slot values.
inline double mean_daily_demand(const HalfHourlySeries& series) {
    validate_series(series);
    double total = 0.0;
    for (double v : series.values) total += v;
    return total / static_cast<double>(series.days());
}

// Slot-wise sum of `series_list`, all of which must start at `start` and
// have exactly `n_slots` values. An empty list yields zeros.
inline HalfHourlySeries aggregate(std::span<const HalfHourlySeries> series_list,
                                  Date start, std::size_t n_slots) {
    HalfHourlySeries out;
    out.start_date = start;
    out.values.assign(n_slots, 0.0);
    for (const auto& s : series_list) {
        if (s.start_date != start)
            throw AlignmentError("aggregate: series starts " + format_date(s.start_date) +
                                 ", expected " + format_date(start));
        if (s.values.size() != n_slots)
            throw AlignmentError("aggregate: series length " + std::to_string(s.values.size()) +
                                 ", expected " + std::to_string(n_slots));
        for (std::size_t t = 0; t < n_slots; ++t) out.values[t] += s.values[t];
    }
    return out;
}

// Shape taken from the first element; the list must be non-empty.
inline HalfHourlySeries aggregate(std::span<const HalfHourlySeries> series_list) {
    if (series_list.empty())
        throw InvalidInputError("aggregate: empty list without a declared shape");
    return aggregate(series_list, series_list.front().start_date, series_list.front().size());
}

// Contiguous slice of 48*7*n_weeks slots starting at 00:00 on `start`.
inline HalfHourlySeries window(const HalfHourlySeries& series, Date start, int n_weeks) {
    if (n_weeks <= 0)
        throw RangeError("window: n_weeks must be positive");
    const long n_days = 7L * n_weeks;
    if (!series.covers(start, n_days))
        throw RangeError("window: " + std::to_string(n_weeks) + " weeks from " +
                         format_date(start) + " not covered by series [" +
                         format_date(series.start_date) + ", " +
                         format_date(series.end_date()) + ")");
    const std::size_t off = series.offset_of(start);
    const std::size_t len = static_cast<std::size_t>(n_days) * kSlotsPerDay;
    HalfHourlySeries out;
    out.start_date = start;
    out.values.assign(series.values.begin() + off, series.values.begin() + off + len);
    return out;
}

} // namespace lvbuddy

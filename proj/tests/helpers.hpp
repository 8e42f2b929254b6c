#pragma once

#include <string>
#include <vector>

#include "lvbuddy/errors.hpp"
#include "lvbuddy/model.hpp"
#include "lvbuddy/series.hpp"

namespace test {

// 2020-01-06 is a Monday; five weekdays lead every test week.
inline lvbuddy::Date monday() { return lvbuddy::make_date(2020, 1, 6); }

inline lvbuddy::HalfHourlySeries make_series(std::vector<double> values,
                                             lvbuddy::Date start = monday()) {
    lvbuddy::HalfHourlySeries s;
    s.start_date = start;
    s.values = std::move(values);
    return s;
}

inline lvbuddy::HalfHourlySeries constant_series(double value, int days,
                                                 lvbuddy::Date start = monday()) {
    return make_series(std::vector<double>(static_cast<std::size_t>(days) * 48, value), start);
}

// Captures warnings for the lifetime of the guard.
struct WarningCapture {
    std::vector<std::string> messages;

    WarningCapture() {
        previous_ = lvbuddy::warning_handler();
        lvbuddy::warning_handler() = [this](std::string_view m) {
            messages.emplace_back(m);
        };
    }
    ~WarningCapture() { lvbuddy::warning_handler() = previous_; }

    WarningCapture(const WarningCapture&) = delete;
    WarningCapture& operator=(const WarningCapture&) = delete;

private:
    lvbuddy::WarningHandler previous_;
};

} // namespace test

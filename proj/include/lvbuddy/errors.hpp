#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lvbuddy {

// Base class for all library errors. `tag()` is a stable machine-readable
// identifier used by the CLI's error JSON.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* tag() const { return "error"; }
};

// A series or argument that violates a basic precondition (empty series,
// length not a multiple of 48, non-finite value).
class InvalidInputError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "invalid-input"; }
};

// Series that should line up (same start, same length) do not.
class AlignmentError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "alignment"; }
};

// A requested window or date falls outside the available data.
class RangeError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "range"; }
};

// A file could not be parsed under its declared schema.
class SchemaError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "schema"; }
};

// No group could be assigned, or a group has no candidate profiles.
class GroupingError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "grouping"; }
};

// A normalization constant of a score is zero and the score is undefined.
class DegenerateError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "degenerate"; }
};

// Invalid or inconsistent configuration (bad config file, missing inputs
// required by the selected options).
class ConfigError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "config"; }
};

// A raw series with no valid readings at all; nothing can be imputed.
class UnrecoverableSeriesError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "unrecoverable-series"; }
};

// A profile pool that cannot be split into two per-group halves.
class SplitError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "split"; }
};

// A curve fit on degenerate or insufficient data.
class FitError : public Error {
public:
    using Error::Error;
    const char* tag() const override { return "fit"; }
};

// Non-fatal diagnostics are routed through a process-wide handler so tests
// and the CLI can capture them. Default: stderr.
using WarningHandler = std::function<void(std::string_view)>;

inline WarningHandler& warning_handler() {
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

inline void warn(const std::string& msg) {
    if (auto& h = warning_handler()) h(msg);
}

} // namespace lvbuddy

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lvbuddy/errors.hpp"

namespace lvbuddy {

// Line-oriented CSV, no quoting (none of the formats here needs it).
struct CsvRow {
    std::vector<std::string> fields;
    std::size_t line_no = 0;
};

class CsvReader {
public:
    explicit CsvReader(const std::filesystem::path& path) : path_(path.string()), in_(path) {
        if (!in_) throw SchemaError("cannot open " + path_);
    }

    const std::string& path() const { return path_; }

    std::optional<CsvRow> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            CsvRow row;
            row.line_no = line_no_;
            std::size_t start = 0;
            while (true) {
                std::size_t comma = line.find(',', start);
                if (comma == std::string::npos) {
                    row.fields.push_back(line.substr(start));
                    break;
                }
                row.fields.push_back(line.substr(start, comma - start));
                start = comma + 1;
            }
            return row;
        }
        return std::nullopt;
    }

    // Reads the first row and checks it against the expected header.
    void expect_header(const std::vector<std::string>& expected) {
        auto row = next();
        if (!row)
            throw SchemaError(path_ + ": empty file, expected header");
        if (row->fields != expected) {
            std::string want;
            for (const auto& f : expected) {
                if (!want.empty()) want += ',';
                want += f;
            }
            throw SchemaError(path_ + ":1: bad header, expected '" + want + "'");
        }
    }

    [[noreturn]] void fail(const CsvRow& row, const std::string& what) const {
        throw SchemaError(path_ + ":" + std::to_string(row.line_no) + ": " + what);
    }

    double parse_double(const CsvRow& row, std::size_t field) const {
        const std::string& s = row.fields.at(field);
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            fail(row, "bad number '" + s + "'");
        return v;
    }

    long parse_long(const CsvRow& row, std::size_t field) const {
        const std::string& s = row.fields.at(field);
        long v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            fail(row, "bad integer '" + s + "'");
        return v;
    }

private:
    std::string path_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

// Shortest round-trip decimal form; keeps emitted CSV byte-stable.
inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, p);
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

} // namespace lvbuddy

#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lvbuddy/errors.hpp"

namespace lvbuddy {

// Minimal TOML reader covering what the config files use: [table] headers
// (dotted allowed), key = value pairs, comments, and single-line arrays.
// Values: basic strings, integers, floats, booleans. Keys are flattened to
// "table.key" form for lookup.
class TomlTable {
public:
    struct Value;
    using Array = std::vector<Value>;

    struct Value {
        std::variant<std::int64_t, double, bool, std::string, Array> data;

        bool is_string() const { return std::holds_alternative<std::string>(data); }
        bool is_array() const { return std::holds_alternative<Array>(data); }
    };

    static TomlTable parse_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    static TomlTable parse(std::string_view text, const std::string& origin = "<config>") {
        TomlTable table;
        std::string prefix;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t eol = text.find('\n', pos);
            std::string_view line = text.substr(pos, eol == std::string_view::npos
                                                         ? std::string_view::npos
                                                         : eol - pos);
            pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
            ++line_no;

            line = strip(line);
            if (line.empty() || line.front() == '#') continue;

            if (line.front() == '[') {
                line = strip_comment(line);
                if (line.back() != ']')
                    fail(origin, line_no, "unterminated table header");
                std::string_view name = strip(line.substr(1, line.size() - 2));
                if (name.empty()) fail(origin, line_no, "empty table name");
                prefix = std::string(name);
                continue;
            }

            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos)
                fail(origin, line_no, "expected key = value");
            std::string_view key = strip(line.substr(0, eq));
            std::string_view raw = strip(line.substr(eq + 1));
            if (key.empty()) fail(origin, line_no, "empty key");
            if (raw.empty()) fail(origin, line_no, "empty value");

            std::string full_key = prefix.empty() ? std::string(key)
                                                  : prefix + "." + std::string(key);
            table.values_[full_key] = parse_value(raw, origin, line_no);
        }
        return table;
    }

    bool contains(const std::string& key) const { return values_.count(key) > 0; }

    std::optional<std::string> find_string(const std::string& key) const {
        auto v = find(key);
        if (!v) return std::nullopt;
        if (auto* s = std::get_if<std::string>(&v->data)) return *s;
        throw ConfigError("config key '" + key + "' is not a string");
    }

    std::optional<std::int64_t> find_int(const std::string& key) const {
        auto v = find(key);
        if (!v) return std::nullopt;
        if (auto* i = std::get_if<std::int64_t>(&v->data)) return *i;
        throw ConfigError("config key '" + key + "' is not an integer");
    }

    std::optional<double> find_double(const std::string& key) const {
        auto v = find(key);
        if (!v) return std::nullopt;
        if (auto* d = std::get_if<double>(&v->data)) return *d;
        if (auto* i = std::get_if<std::int64_t>(&v->data)) return static_cast<double>(*i);
        throw ConfigError("config key '" + key + "' is not a number");
    }

    std::optional<bool> find_bool(const std::string& key) const {
        auto v = find(key);
        if (!v) return std::nullopt;
        if (auto* b = std::get_if<bool>(&v->data)) return *b;
        throw ConfigError("config key '" + key + "' is not a boolean");
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto v = find_string(key);
        return v ? *v : fallback;
    }
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        auto v = find_int(key);
        return v ? *v : fallback;
    }
    double get_double(const std::string& key, double fallback) const {
        auto v = find_double(key);
        return v ? *v : fallback;
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto v = find_bool(key);
        return v ? *v : fallback;
    }

    std::optional<std::vector<double>> find_double_array(const std::string& key) const {
        auto v = find(key);
        if (!v) return std::nullopt;
        const Array* arr = std::get_if<Array>(&v->data);
        if (!arr) throw ConfigError("config key '" + key + "' is not an array");
        std::vector<double> out;
        for (const Value& e : *arr) {
            if (auto* d = std::get_if<double>(&e.data))
                out.push_back(*d);
            else if (auto* i = std::get_if<std::int64_t>(&e.data))
                out.push_back(static_cast<double>(*i));
            else
                throw ConfigError("config key '" + key + "' has a non-numeric element");
        }
        return out;
    }

    std::optional<std::vector<std::int64_t>> find_int_array(const std::string& key) const {
        auto v = find(key);
        if (!v) return std::nullopt;
        const Array* arr = std::get_if<Array>(&v->data);
        if (!arr) throw ConfigError("config key '" + key + "' is not an array");
        std::vector<std::int64_t> out;
        for (const Value& e : *arr) {
            if (auto* i = std::get_if<std::int64_t>(&e.data))
                out.push_back(*i);
            else
                throw ConfigError("config key '" + key + "' has a non-integer element");
        }
        return out;
    }

    std::optional<std::vector<std::string>> find_string_array(const std::string& key) const {
        auto v = find(key);
        if (!v) return std::nullopt;
        const Array* arr = std::get_if<Array>(&v->data);
        if (!arr) throw ConfigError("config key '" + key + "' is not an array");
        std::vector<std::string> out;
        for (const Value& e : *arr) {
            if (auto* s = std::get_if<std::string>(&e.data))
                out.push_back(*s);
            else
                throw ConfigError("config key '" + key + "' has a non-string element");
        }
        return out;
    }

private:
    const Value* find(const std::string& key) const {
        auto it = values_.find(key);
        return it == values_.end() ? nullptr : &it->second;
    }

    [[noreturn]] static void fail(const std::string& origin, std::size_t line,
                                  const std::string& what) {
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
    }

    static std::string_view strip(std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    }

    // Strips a trailing comment that is not inside a string.
    static std::string_view strip_comment(std::string_view s) {
        bool in_string = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_string = !in_string;
            if (s[i] == '#' && !in_string) return strip(s.substr(0, i));
        }
        return s;
    }

    static Value parse_value(std::string_view raw, const std::string& origin,
                             std::size_t line_no) {
        raw = strip_comment(raw);
        if (raw.empty()) fail(origin, line_no, "empty value");

        if (raw.front() == '[') {
            if (raw.back() != ']') fail(origin, line_no, "unterminated array");
            Array arr;
            std::string_view body = raw.substr(1, raw.size() - 2);
            std::size_t start = 0;
            bool in_string = false;
            for (std::size_t i = 0; i <= body.size(); ++i) {
                if (i < body.size() && body[i] == '"') in_string = !in_string;
                if (i == body.size() || (body[i] == ',' && !in_string)) {
                    std::string_view elem = strip(body.substr(start, i - start));
                    if (!elem.empty()) arr.push_back(parse_scalar(elem, origin, line_no));
                    start = i + 1;
                }
            }
            return Value{std::move(arr)};
        }
        return parse_scalar(raw, origin, line_no);
    }

    static Value parse_scalar(std::string_view raw, const std::string& origin,
                              std::size_t line_no) {
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                fail(origin, line_no, "unterminated string");
            return Value{std::string(raw.substr(1, raw.size() - 2))};
        }
        if (raw == "true") return Value{true};
        if (raw == "false") return Value{false};

        const bool looks_float = raw.find_first_of(".eE") != std::string_view::npos;
        if (!looks_float) {
            std::int64_t i = 0;
            auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), i);
            if (ec == std::errc{} && p == raw.data() + raw.size()) return Value{i};
        }
        double d = 0.0;
        auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), d);
        if (ec == std::errc{} && p == raw.data() + raw.size()) return Value{d};
        fail(origin, line_no, "cannot parse value '" + std::string(raw) + "'");
    }

    std::map<std::string, Value> values_;
};

} // namespace lvbuddy

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lvbuddy/csv.hpp"
#include "lvbuddy/model.hpp"

namespace lvbuddy {

enum class ReadingFlag { ok, missing, outlier };

inline std::optional<ReadingFlag> parse_flag(std::string_view s) {
    if (s == "ok") return ReadingFlag::ok;
    if (s == "missing") return ReadingFlag::missing;
    if (s == "outlier") return ReadingFlag::outlier;
    return std::nullopt;
}

// One entity's raw readings on a whole-day grid from its first to its last
// observed date. Slots never observed in the file are flagged missing.
struct FlaggedSeries {
    Date start_date{};
    std::vector<double> values;       // NaN where absent
    std::vector<ReadingFlag> flags;

    long days() const { return static_cast<long>(values.size()) / kSlotsPerDay; }

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (flags[i] == ReadingFlag::ok && std::isfinite(values[i])) ++n;
        return n;
    }
};

struct RawReadingTable {
    std::map<std::string, FlaggedSeries> entities;
};

inline const std::vector<std::string>& reading_csv_header() {
    static const std::vector<std::string> h = {"entity_id", "date", "slot", "kwh", "flag"};
    return h;
}

// Parses a reading CSV (profiles or substations): entity_id,date,slot,kwh,flag.
// Rows absent from the file are treated as missing readings.
inline RawReadingTable load_reading_table(const std::filesystem::path& path) {
    CsvReader reader(path);

    struct Reading {
        Date date;
        int slot;
        double value;
        ReadingFlag flag;
    };
    std::map<std::string, std::vector<Reading>> raw;

    auto first = reader.next();
    if (!first) {
        warn(reader.path() + ": empty file, no readings loaded");
        return {};
    }
    if (first->fields != reading_csv_header())
        reader.fail(*first, "bad header, expected entity_id,date,slot,kwh,flag");

    while (auto row = reader.next()) {
        if (row->fields.size() != 5)
            reader.fail(*row, "expected 5 fields, got " + std::to_string(row->fields.size()));
        Reading r;
        r.date = [&] {
            auto d = try_parse_date(row->fields[1]);
            if (!d) reader.fail(*row, "bad date '" + row->fields[1] + "'");
            return *d;
        }();
        const long slot = reader.parse_long(*row, 2);
        if (slot < 0 || slot >= kSlotsPerDay)
            reader.fail(*row, "slot " + std::to_string(slot) + " outside 0-47");
        r.slot = static_cast<int>(slot);
        auto flag = parse_flag(row->fields[4]);
        if (!flag) reader.fail(*row, "bad flag '" + row->fields[4] + "'");
        r.flag = *flag;
        if (row->fields[3].empty()) {
            if (r.flag == ReadingFlag::ok)
                reader.fail(*row, "ok reading without a value");
            r.value = std::numeric_limits<double>::quiet_NaN();
        } else {
            r.value = reader.parse_double(*row, 3);
        }
        raw[row->fields[0]].push_back(r);
    }

    RawReadingTable table;
    for (auto& [entity, readings] : raw) {
        Date lo = readings.front().date;
        Date hi = lo;
        for (const Reading& r : readings) {
            lo = std::min(lo, r.date);
            hi = std::max(hi, r.date);
        }
        const long n_days = days_between(lo, hi) + 1;
        FlaggedSeries fs;
        fs.start_date = lo;
        fs.values.assign(static_cast<std::size_t>(n_days) * kSlotsPerDay,
                         std::numeric_limits<double>::quiet_NaN());
        fs.flags.assign(fs.values.size(), ReadingFlag::missing);
        std::vector<bool> seen(fs.values.size(), false);
        for (const Reading& r : readings) {
            const std::size_t i =
                static_cast<std::size_t>(days_between(lo, r.date)) * kSlotsPerDay +
                static_cast<std::size_t>(r.slot);
            if (seen[i])
                warn(path.string() + ": duplicate reading for " + entity + " " +
                     format_date(r.date) + " slot " + std::to_string(r.slot) +
                     "; keeping the last one");
            seen[i] = true;
            fs.values[i] = r.value;
            fs.flags[i] = r.flag;
        }
        table.entities.emplace(entity, std::move(fs));
    }
    return table;
}

struct CleaningOptions {
    // A reading above outlier_factor times the entity's given percentile of
    // valid readings (or below zero) is treated as anomalous.
    double outlier_factor = 10.0;
    double outlier_percentile = 0.99;
};

// Replaces missing, negative, and outlier readings with the mean of valid
// readings in the same half-hour slot of the same day-type (weekday vs
// weekend). Falls back to the same slot across all day-types, then to the
// series-wide mean.
inline HalfHourlySeries clean_series(const FlaggedSeries& raw,
                                     const CleaningOptions& options = {}) {
    const std::size_t n = raw.values.size();
    if (n == 0 || n % kSlotsPerDay != 0 || raw.flags.size() != n)
        throw InvalidInputError("clean_series: malformed flagged series");

    std::vector<double> valid;
    for (std::size_t i = 0; i < n; ++i)
        if (raw.flags[i] == ReadingFlag::ok && std::isfinite(raw.values[i]))
            valid.push_back(raw.values[i]);
    if (valid.empty())
        throw UnrecoverableSeriesError("series has no valid readings");

    double threshold = std::numeric_limits<double>::infinity();
    {
        std::sort(valid.begin(), valid.end());
        const std::size_t rank = static_cast<std::size_t>(
            std::ceil(options.outlier_percentile * static_cast<double>(valid.size())));
        const double p = valid[std::min(valid.size() - 1, rank == 0 ? 0 : rank - 1)];
        if (p > 0.0) threshold = options.outlier_factor * p;
    }

    auto usable = [&](std::size_t i) {
        return raw.flags[i] == ReadingFlag::ok && std::isfinite(raw.values[i]) &&
               raw.values[i] >= 0.0 && raw.values[i] <= threshold;
    };

    // Class means: (slot of day, day type) and the two fallbacks.
    double class_sum[kSlotsPerDay][2] = {};
    long class_cnt[kSlotsPerDay][2] = {};
    double slot_sum[kSlotsPerDay] = {};
    long slot_cnt[kSlotsPerDay] = {};
    double all_sum = 0.0;
    long all_cnt = 0;

    const long n_days = raw.days();
    for (long day = 0; day < n_days; ++day) {
        const int wk = is_weekend(raw.start_date + std::chrono::days{day}) ? 1 : 0;
        for (int slot = 0; slot < kSlotsPerDay; ++slot) {
            const std::size_t i = static_cast<std::size_t>(day) * kSlotsPerDay +
                                  static_cast<std::size_t>(slot);
            if (!usable(i)) continue;
            class_sum[slot][wk] += raw.values[i];
            class_cnt[slot][wk] += 1;
            slot_sum[slot] += raw.values[i];
            slot_cnt[slot] += 1;
            all_sum += raw.values[i];
            all_cnt += 1;
        }
    }
    if (all_cnt == 0)
        throw UnrecoverableSeriesError("series has no usable readings after anomaly screening");

    HalfHourlySeries out;
    out.start_date = raw.start_date;
    out.values.resize(n);
    for (long day = 0; day < n_days; ++day) {
        const int wk = is_weekend(raw.start_date + std::chrono::days{day}) ? 1 : 0;
        for (int slot = 0; slot < kSlotsPerDay; ++slot) {
            const std::size_t i = static_cast<std::size_t>(day) * kSlotsPerDay +
                                  static_cast<std::size_t>(slot);
            if (usable(i)) {
                out.values[i] = raw.values[i];
            } else if (class_cnt[slot][wk] > 0) {
                out.values[i] = class_sum[slot][wk] / static_cast<double>(class_cnt[slot][wk]);
            } else if (slot_cnt[slot] > 0) {
                out.values[i] = slot_sum[slot] / static_cast<double>(slot_cnt[slot]);
            } else {
                out.values[i] = all_sum / static_cast<double>(all_cnt);
            }
        }
    }
    validate_series(out, "cleaned series");
    return out;
}

// Maps a profile entity id to its group; nullopt means the id is unknown.
using GroupLookup = std::function<std::optional<GroupId>(const std::string&)>;

// Loads and cleans monitored profiles. Entities with less than one whole
// day of valid readings, or without a known group, are skipped with a
// diagnostic.
inline std::vector<MonitoredProfile> load_profiles(const std::filesystem::path& path,
                                                   const GroupLookup& group_of,
                                                   const CleaningOptions& options = {}) {
    RawReadingTable table = load_reading_table(path);
    std::vector<MonitoredProfile> profiles;
    for (const auto& [entity, fs] : table.entities) {
        if (fs.valid_count() < kSlotsPerDay) {
            warn(path.string() + ": profile " + entity +
                 " has less than one whole day of valid data; skipped");
            continue;
        }
        auto group = group_of(entity);
        if (!group) {
            warn(path.string() + ": profile " + entity +
                 " has no registry entry to derive its group; skipped");
            continue;
        }
        profiles.push_back(MonitoredProfile::make(entity, clean_series(fs, options), *group));
    }
    return profiles;
}

struct RegistryRow {
    std::string customer_id;
    std::string feeder_id;              // empty: monitored customer not on a modelled feeder
    std::optional<int> phase;
    CustomerAttributes attrs;
    double mean_daily_kwh = 0.0;
    std::optional<std::string> monitored_profile_id;
};

inline const std::vector<std::string>& registry_csv_header() {
    static const std::vector<std::string> h = {
        "customer_id", "feeder_id", "phase",    "profile_class",
        "council_tax_band", "has_pv", "mean_daily_kwh", "monitored_profile_id"};
    return h;
}

inline std::vector<RegistryRow> load_customer_registry(const std::filesystem::path& path) {
    CsvReader reader(path);
    auto first = reader.next();
    if (!first) {
        warn(reader.path() + ": empty registry, no customers loaded");
        return {};
    }
    if (first->fields != registry_csv_header())
        reader.fail(*first, "bad header, expected customer_id,feeder_id,phase,profile_class,"
                            "council_tax_band,has_pv,mean_daily_kwh,monitored_profile_id");
    std::vector<RegistryRow> rows;
    while (auto row = reader.next()) {
        if (row->fields.size() != 7 && row->fields.size() != 8)
            reader.fail(*row, "expected 7 or 8 fields, got " +
                              std::to_string(row->fields.size()));
        RegistryRow r;
        r.customer_id = row->fields[0];
        if (r.customer_id.empty()) reader.fail(*row, "empty customer_id");
        r.feeder_id = row->fields[1];
        if (!row->fields[2].empty()) {
            const long ph = reader.parse_long(*row, 2);
            if (ph < 1 || ph > 3) reader.fail(*row, "phase must be 1, 2 or 3");
            r.phase = static_cast<int>(ph);
        }
        const long pc = reader.parse_long(*row, 3);
        if (pc != 1 && pc != 2) reader.fail(*row, "profile_class must be 1 or 2");
        r.attrs.profile_class = static_cast<int>(pc);
        const std::string& band = row->fields[4];
        if (band.empty() || band == "?")
            r.attrs.council_tax_band = kUnknownBand;
        else if (band.size() == 1 && band[0] >= 'A' && band[0] <= 'H')
            r.attrs.council_tax_band = band[0];
        else
            reader.fail(*row, "bad council tax band '" + band + "'");
        const std::string& pv = row->fields[5];
        if (pv == "Y" || pv == "y" || pv == "1" || pv == "true")
            r.attrs.has_pv = true;
        else if (pv == "N" || pv == "n" || pv == "0" || pv == "false")
            r.attrs.has_pv = false;
        else
            reader.fail(*row, "bad has_pv flag '" + pv + "'");
        r.mean_daily_kwh = reader.parse_double(*row, 6);
        if (r.mean_daily_kwh < 0.0) reader.fail(*row, "negative mean_daily_kwh");
        if (row->fields.size() == 8 && !row->fields[7].empty())
            r.monitored_profile_id = row->fields[7];
        rows.push_back(std::move(r));
    }
    return rows;
}

struct SubstationData {
    std::map<std::string, HalfHourlySeries> feeder_series;
    std::map<std::string, std::map<int, HalfHourlySeries>> phase_series;
};

// Substation CSV shares the reading shape; entity_id is either a feeder id
// or feeder_id/phase for per-phase monitors.
inline SubstationData load_substations(const std::filesystem::path& path,
                                       const CleaningOptions& options = {}) {
    RawReadingTable table = load_reading_table(path);
    SubstationData data;
    for (const auto& [entity, fs] : table.entities) {
        HalfHourlySeries series = clean_series(fs, options);
        const std::size_t slash = entity.rfind('/');
        if (slash == std::string::npos) {
            data.feeder_series.emplace(entity, std::move(series));
            continue;
        }
        const std::string feeder = entity.substr(0, slash);
        const std::string phase_str = entity.substr(slash + 1);
        if (feeder.empty() || phase_str.size() != 1 || phase_str[0] < '1' || phase_str[0] > '3')
            throw SchemaError(path.string() + ": bad substation entity '" + entity +
                              "', expected feeder_id or feeder_id/phase");
        data.phase_series[feeder][phase_str[0] - '0'] = std::move(series);
    }
    return data;
}

// --- Write side: pools and pseudo-feeders round-trip through these. ---

inline void save_reading_rows(std::ofstream& out, const std::string& entity,
                              const HalfHourlySeries& series) {
    const long n_days = series.days();
    for (long day = 0; day < n_days; ++day) {
        const std::string date = format_date(series.start_date + std::chrono::days{day});
        for (int slot = 0; slot < kSlotsPerDay; ++slot) {
            const std::size_t i = static_cast<std::size_t>(day) * kSlotsPerDay +
                                  static_cast<std::size_t>(slot);
            out << entity << ',' << date << ',' << slot << ','
                << format_double(series.values[i]) << ",ok\n";
        }
    }
}

inline void save_profiles_csv(const std::filesystem::path& path,
                              std::span<const MonitoredProfile> profiles) {
    auto out = open_output(path);
    out << "entity_id,date,slot,kwh,flag\n";
    for (const auto& p : profiles) save_reading_rows(out, p.profile_id, p.series);
}

inline void save_registry_csv(const std::filesystem::path& path,
                              std::span<const RegistryRow> rows) {
    auto out = open_output(path);
    out << "customer_id,feeder_id,phase,profile_class,council_tax_band,has_pv,"
           "mean_daily_kwh,monitored_profile_id\n";
    for (const auto& r : rows) {
        out << r.customer_id << ',' << r.feeder_id << ','
            << (r.phase ? std::to_string(*r.phase) : "") << ',' << r.attrs.profile_class
            << ',' << (r.attrs.council_tax_band == kUnknownBand
                           ? std::string()
                           : std::string(1, r.attrs.council_tax_band))
            << ',' << (r.attrs.has_pv ? 'Y' : 'N') << ','
            << format_double(r.mean_daily_kwh) << ','
            << (r.monitored_profile_id ? *r.monitored_profile_id : "") << '\n';
    }
}

inline void save_substations_csv(const std::filesystem::path& path,
                                 const SubstationData& data) {
    auto out = open_output(path);
    out << "entity_id,date,slot,kwh,flag\n";
    for (const auto& [feeder, series] : data.feeder_series)
        save_reading_rows(out, feeder, series);
    for (const auto& [feeder, phases] : data.phase_series)
        for (const auto& [phase, series] : phases)
            save_reading_rows(out, feeder + "/" + std::to_string(phase), series);
}

} // namespace lvbuddy

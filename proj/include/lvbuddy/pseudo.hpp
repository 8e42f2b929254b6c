#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "lvbuddy/metrics.hpp"
#include "lvbuddy/model.hpp"
#include "lvbuddy/rng.hpp"

namespace lvbuddy {

// Parameters of the synthetic monitored-profile generator. Values are
// kWh per half-hour; levels are mean daily demands in kWh/day.
struct SyntheticPoolSpec {
    int n_profiles = 60;
    int days = 112;                       // 16 weeks
    Date start_date = make_date(2020, 1, 6);   // a Monday
    // Share of the pool per group 0..6. Zero-share groups get no profiles.
    std::vector<double> group_mix = {0.20, 0.15, 0.15, 0.10, 0.20, 0.12, 0.08};
    // Median mean-daily-demand per group, kWh/day.
    std::vector<double> group_level_median = {7.0, 9.0, 11.0, 15.0, 12.0, 8.0, 7.5};
    double level_sigma = 0.35;            // lognormal spread of customer levels
    double noise_sigma = 0.45;            // per-slot multiplicative noise
    double spike_rate = 0.01;             // chance of a demand spike per slot
    double spike_scale = 3.0;             // spike multiplier is 1 + scale*u
    std::uint64_t seed = 1;

    void validate() const {
        if (n_profiles < 0) throw ConfigError("pool: n_profiles must be >= 0");
        if (days < 1) throw ConfigError("pool: days must be >= 1");
        if (group_mix.empty() || group_mix.size() > kNumGroups)
            throw ConfigError("pool: group_mix must list 1-7 groups");
        if (group_level_median.size() != group_mix.size())
            throw ConfigError("pool: group_level_median must match group_mix");
        double total = 0.0;
        for (double p : group_mix) {
            if (p < 0.0) throw ConfigError("pool: negative group share");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw ConfigError("pool: group_mix must sum to 1");
        for (double m : group_level_median)
            if (m <= 0.0) throw ConfigError("pool: level medians must be positive");
        if (level_sigma < 0.0 || noise_sigma < 0.0)
            throw ConfigError("pool: sigmas must be non-negative");
        if (spike_rate < 0.0 || spike_rate > 1.0)
            throw ConfigError("pool: spike_rate must be in [0,1]");
        if (spike_scale < 0.0) throw ConfigError("pool: spike_scale must be >= 0");
    }
};

namespace detail {

// Normalized diurnal shape: overnight baseline with morning and evening
// peaks; PV groups get a midday dip. Peak geometry is drawn per profile so
// that intra-day shape is only weakly tied to the demand level, as in real
// households. Sums to 1 over the day.
inline std::array<double, kSlotsPerDay> diurnal_shape(bool has_pv, Rng& rng) {
    const double base = 0.15 + 0.25 * rng.uniform01();
    const double morning_amp = 0.3 + 0.8 * rng.uniform01();
    const double morning_center = 14.0 + 6.0 * rng.uniform01();
    const double morning_sd = 2.0 + 3.0 * rng.uniform01();
    const double evening_amp = 0.6 + 0.9 * rng.uniform01();
    const double evening_center = 34.0 + 6.0 * rng.uniform01();
    const double evening_sd = 3.0 + 3.0 * rng.uniform01();
    const double pv_depth = 0.4 + 0.3 * rng.uniform01();

    std::array<double, kSlotsPerDay> shape{};
    double total = 0.0;
    for (int t = 0; t < kSlotsPerDay; ++t) {
        const double dm = (t - morning_center) / morning_sd;
        const double de = (t - evening_center) / evening_sd;
        double v = base + morning_amp * std::exp(-0.5 * dm * dm) +
                   evening_amp * std::exp(-0.5 * de * de);
        if (has_pv) v *= 1.0 - pv_depth * std::exp(-0.5 * (t - 26.0) * (t - 26.0) / 25.0);
        shape[t] = v;
        total += v;
    }
    for (double& v : shape) v /= total;
    return shape;
}

// Annual modulation, peaking mid-January.
inline double seasonal_factor(Date date) {
    const std::chrono::year_month_day ymd{date};
    const Date jan15 = Date{std::chrono::year{int(ymd.year())} / 1 / 15};
    const double phase = static_cast<double>(days_between(jan15, date)) / 365.25;
    return 1.0 + 0.25 * std::cos(2.0 * 3.141592653589793 * phase);
}

// Deterministic counts per group via largest remainder.
inline std::vector<int> group_counts(const SyntheticPoolSpec& spec) {
    const int n = spec.n_profiles;
    std::vector<int> counts(spec.group_mix.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t g = 0; g < spec.group_mix.size(); ++g) {
        const double exact = spec.group_mix[g] * n;
        counts[g] = static_cast<int>(std::floor(exact));
        assigned += counts[g];
        remainders.push_back({exact - std::floor(exact), g});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int i = 0; assigned < n; ++i, ++assigned) counts[remainders[i % remainders.size()].second] += 1;
    return counts;
}

} // namespace detail

// Seeded pool of synthetic monitored profiles. Every profile gets its own
// derived RNG stream, so adding profiles or rescaling levels never disturbs
// another profile's draws, and the whole profile scales linearly with its
// demand level.
inline std::vector<MonitoredProfile> generate_pool(const SyntheticPoolSpec& spec) {
    spec.validate();
    const std::vector<int> counts = detail::group_counts(spec);

    std::vector<MonitoredProfile> pool;
    pool.reserve(static_cast<std::size_t>(spec.n_profiles));
    int serial = 0;
    for (std::size_t g = 0; g < counts.size(); ++g) {
        for (int k = 0; k < counts[g]; ++k, ++serial) {
            Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(serial)));
            const double level =
                spec.group_level_median[g] * std::exp(spec.level_sigma * rng.normal());
            const auto shape = detail::diurnal_shape(g == 5 || g == 6, rng);

            HalfHourlySeries series;
            series.start_date = spec.start_date;
            series.values.resize(static_cast<std::size_t>(spec.days) * kSlotsPerDay);
            for (int day = 0; day < spec.days; ++day) {
                const double season =
                    detail::seasonal_factor(spec.start_date + std::chrono::days{day});
                for (int t = 0; t < kSlotsPerDay; ++t) {
                    const double noise = std::exp(spec.noise_sigma * rng.normal() -
                                                  0.5 * spec.noise_sigma * spec.noise_sigma);
                    double v = level * shape[t] * season * noise;
                    if (rng.bernoulli(spec.spike_rate))
                        v *= 1.0 + spec.spike_scale * rng.uniform01();
                    series.values[static_cast<std::size_t>(day) * kSlotsPerDay + t] =
                        std::max(0.0, v);
                }
            }
            char id[16];
            std::snprintf(id, sizeof id, "sp%04d", serial);
            pool.push_back(MonitoredProfile::make(id, std::move(series),
                                                  static_cast<GroupId>(g)));
        }
    }
    return pool;
}

// An artificial feeder populated with known profiles; the substation series
// is their exact aggregate, so the generating assignment has zero error.
struct PseudoFeeder {
    Feeder feeder;
    std::map<std::string, std::string> generating;   // customer_id -> true profile_id
};

// Replaces every customer of `template_feeder` with a uniformly drawn pool
// profile of the same group. Group proportions, customer ids and phase
// labels are preserved; mean daily demands become the drawn profiles'.
inline PseudoFeeder make_type1(const Feeder& template_feeder, const ProfilePool& pool,
                               std::uint64_t seed) {
    if (template_feeder.customers.empty())
        throw InvalidInputError("pseudo-feeder template has no customers");
    Rng rng(seed);
    PseudoFeeder out;
    out.feeder.feeder_id = template_feeder.feeder_id;

    const Date start = pool.empty() ? Date{} : pool.at(0).series.start_date;
    const std::size_t n_slots = pool.empty() ? 0 : pool.at(0).series.size();
    std::vector<double> total(n_slots, 0.0);

    for (const Customer& c : template_feeder.customers) {
        auto members = pool.group_members(c.group);
        if (members.empty())
            throw GroupingError("pseudo-feeder template customer " + c.customer_id +
                                ": no pool profiles in group " + std::to_string(c.group));
        const MonitoredProfile& chosen = pool.at(members[rng.uniform_index(members.size())]);
        if (chosen.series.start_date != start || chosen.series.size() != n_slots)
            throw AlignmentError("pool profiles must share one period to build pseudo-feeders");

        Customer populated;
        populated.customer_id = c.customer_id;
        populated.group = c.group;
        populated.mean_daily_demand = chosen.mean_daily_demand;
        populated.phase = c.phase;
        out.feeder.customers.push_back(std::move(populated));
        out.generating[c.customer_id] = chosen.profile_id;

        for (std::size_t t = 0; t < n_slots; ++t) total[t] += chosen.series.values[t];
    }

    HalfHourlySeries substation;
    substation.start_date = start;
    substation.values = std::move(total);
    out.feeder.substation_series = std::move(substation);
    return out;
}

// Splits a pool into two halves with matched group and demand coverage:
// per group, profiles sorted by ascending mean daily demand (ties by id)
// go alternately to the populate half (even ranks, 0-based) and the buddy
// half (odd ranks).
inline std::pair<std::vector<MonitoredProfile>, std::vector<MonitoredProfile>>
make_type2_split(const ProfilePool& pool) {
    std::pair<std::vector<MonitoredProfile>, std::vector<MonitoredProfile>> out;
    for (GroupId g = 0; g < kNumGroups; ++g) {
        auto members = pool.group_members(g);
        if (members.empty()) continue;
        if (members.size() < 2)
            throw SplitError("group " + std::to_string(g) +
                             " has a single profile; cannot split");
        std::vector<std::uint32_t> sorted(members.begin(), members.end());
        std::stable_sort(sorted.begin(), sorted.end(), [&](std::uint32_t a, std::uint32_t b) {
            const auto& pa = pool.at(a);
            const auto& pb = pool.at(b);
            if (pa.mean_daily_demand != pb.mean_daily_demand)
                return pa.mean_daily_demand < pb.mean_daily_demand;
            return pa.profile_id < pb.profile_id;
        });
        for (std::size_t rank = 0; rank < sorted.size(); ++rank) {
            auto& dest = (rank % 2 == 0) ? out.first : out.second;
            dest.push_back(pool.at(sorted[rank]));
        }
    }
    return out;
}

// Fraction of customers assigned exactly their generating profile.
inline double recovery_rate(const PseudoFeeder& pseudo, const BuddyAssignment& assignment) {
    if (pseudo.feeder.customers.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& [customer, truth] : pseudo.generating) {
        auto it = assignment.profile_of.find(customer);
        if (it != assignment.profile_of.end() && it->second == truth) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pseudo.generating.size());
}

// Per-phase exact aggregates of the generating profiles (customers without
// a phase label are excluded).
inline std::map<int, HalfHourlySeries> phase_aggregate_series(const PseudoFeeder& pseudo,
                                                              const ProfilePool& pool) {
    std::map<int, HalfHourlySeries> out;
    for (const Customer& c : pseudo.feeder.customers) {
        if (!c.phase) continue;
        auto idx = pool.index_of(pseudo.generating.at(c.customer_id));
        if (!idx)
            throw InvalidInputError("generating profile of " + c.customer_id +
                                    " not in the given pool");
        const HalfHourlySeries& s = pool.at(*idx).series;
        auto [it, inserted] = out.try_emplace(*c.phase);
        if (inserted) {
            it->second.start_date = s.start_date;
            it->second.values.assign(s.size(), 0.0);
        }
        for (std::size_t t = 0; t < s.size(); ++t) it->second.values[t] += s.values[t];
    }
    return out;
}

// Eq.-6 error of each customer's assigned profile against their true
// generating profile, over `eval` (customer order of the pseudo-feeder).
inline std::vector<double> per_customer_errors(const PseudoFeeder& pseudo,
                                               const BuddyAssignment& assignment,
                                               const ProfilePool& populate_pool,
                                               const ProfilePool& buddy_pool,
                                               const TrainingWindow& eval) {
    std::vector<HalfHourlySeries> truth, modeled;
    truth.reserve(pseudo.feeder.customers.size());
    modeled.reserve(pseudo.feeder.customers.size());
    for (const Customer& c : pseudo.feeder.customers) {
        auto true_idx = populate_pool.index_of(pseudo.generating.at(c.customer_id));
        if (!true_idx)
            throw InvalidInputError("generating profile of " + c.customer_id +
                                    " not in the populate pool");
        auto it = assignment.profile_of.find(c.customer_id);
        if (it == assignment.profile_of.end())
            throw InvalidInputError("assignment misses customer " + c.customer_id);
        auto buddy_idx = buddy_pool.index_of(it->second);
        if (!buddy_idx)
            throw InvalidInputError("assigned profile " + it->second + " not in buddy pool");
        truth.push_back(window(populate_pool.at(*true_idx).series, eval.start, eval.weeks));
        modeled.push_back(window(buddy_pool.at(*buddy_idx).series, eval.start, eval.weeks));
    }
    return per_customer_rmae(truth, modeled);
}

// Convenience for building validation suites: a template feeder whose
// customers' groups are drawn with probability proportional to the pool's
// group sizes. Demands are placeholders; make_type1 overwrites them.
inline Feeder random_template_feeder(const std::string& feeder_id, int n_customers,
                                     const ProfilePool& pool, std::uint64_t seed) {
    if (n_customers < 1) throw InvalidInputError("template feeder needs >= 1 customer");
    std::vector<GroupId> groups;
    for (GroupId g = 0; g < kNumGroups; ++g)
        for (std::size_t k = 0; k < pool.group_members(g).size(); ++k) groups.push_back(g);
    if (groups.empty()) throw InvalidInputError("pool is empty");
    Rng rng(seed);
    Feeder feeder;
    feeder.feeder_id = feeder_id;
    for (int j = 0; j < n_customers; ++j) {
        Customer c;
        char id[32];
        std::snprintf(id, sizeof id, "%s-c%03d", feeder_id.c_str(), j);
        c.customer_id = id;
        c.group = groups[rng.uniform_index(groups.size())];
        c.mean_daily_demand = 0.0;
        feeder.customers.push_back(std::move(c));
    }
    return feeder;
}

} // namespace lvbuddy

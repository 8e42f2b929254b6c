#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lvbuddy/grouping.hpp"
#include "lvbuddy/series.hpp"

namespace lvbuddy {

// A monitored customer's half-hourly profile. `mean_daily_demand` is always
// derived from the series, never supplied.
struct MonitoredProfile {
    std::string profile_id;
    HalfHourlySeries series;
    double mean_daily_demand = 0.0;
    GroupId group = 0;

    static MonitoredProfile make(std::string id, HalfHourlySeries series, GroupId group) {
        MonitoredProfile p;
        p.profile_id = std::move(id);
        p.mean_daily_demand = lvbuddy::mean_daily_demand(series);
        p.series = std::move(series);
        p.group = group;
        return p;
    }
};

// A customer on a feeder. `mean_daily_demand` (U_j) comes from quarterly
// meter estimates, except for monitored customers where it is set to their
// profile's derived mean.
struct Customer {
    std::string customer_id;
    GroupId group = 0;
    double mean_daily_demand = 0.0;
    std::optional<std::string> monitored_profile;
    std::optional<int> phase;   // 1..3 when known
};

struct Feeder {
    std::string feeder_id;
    std::vector<Customer> customers;
    std::optional<HalfHourlySeries> substation_series;
};

// The pool of monitored profiles available for buddying, indexed by id and
// by group. Profiles are kept sorted by profile_id so that any scan in pool
// order is deterministic and id-ordered.
class ProfilePool {
public:
    ProfilePool() = default;

    explicit ProfilePool(std::vector<MonitoredProfile> profiles)
        : profiles_(std::move(profiles)) {
        std::sort(profiles_.begin(), profiles_.end(),
                  [](const MonitoredProfile& a, const MonitoredProfile& b) {
                      return a.profile_id < b.profile_id;
                  });
        by_group_.assign(kNumGroups, {});
        for (std::uint32_t i = 0; i < profiles_.size(); ++i) {
            const auto& p = profiles_[i];
            if (p.group < 0 || p.group >= kNumGroups)
                throw GroupingError("profile " + p.profile_id + " has group " +
                                    std::to_string(p.group) + " outside 0-6");
            if (!by_id_.emplace(p.profile_id, i).second)
                throw InvalidInputError("duplicate profile id " + p.profile_id);
            by_group_[static_cast<std::size_t>(p.group)].push_back(i);
        }
    }

    std::size_t size() const { return profiles_.size(); }
    bool empty() const { return profiles_.empty(); }
    const MonitoredProfile& at(std::size_t i) const { return profiles_[i]; }
    const std::vector<MonitoredProfile>& profiles() const { return profiles_; }

    std::optional<std::uint32_t> index_of(const std::string& profile_id) const {
        auto it = by_id_.find(profile_id);
        if (it == by_id_.end()) return std::nullopt;
        return it->second;
    }

    // Indices of the group's profiles, in profile_id order.
    std::span<const std::uint32_t> group_members(GroupId group) const {
        if (group < 0 || group >= kNumGroups)
            throw GroupingError("group id " + std::to_string(group) + " out of range 0-6");
        return by_group_[static_cast<std::size_t>(group)];
    }

private:
    std::vector<MonitoredProfile> profiles_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
    std::vector<std::vector<std::uint32_t>> by_group_;
};

enum class Method { simple, ga, monte_carlo };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::simple: return "simple";
        case Method::ga: return "ga";
        case Method::monte_carlo: return "monte-carlo";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view name) {
    if (name == "simple") return Method::simple;
    if (name == "ga") return Method::ga;
    if (name == "monte-carlo" || name == "mc") return Method::monte_carlo;
    return std::nullopt;
}

struct TrainingWindow {
    Date start{};
    int weeks = 0;

    std::size_t slots() const { return static_cast<std::size_t>(weeks) * kSlotsPerWeek; }
    long days() const { return 7L * weeks; }
};

// One buddying result: every customer on the feeder mapped to a monitored
// profile, with enough provenance to reproduce the run.
struct BuddyAssignment {
    std::string feeder_id;
    std::map<std::string, std::string> profile_of;   // customer_id -> profile_id
    Method method = Method::simple;
    double weight = 1.0;
    TrainingWindow window{};
    std::optional<std::uint64_t> seed;
};

// Per-feeder candidate sets: for every customer the id-ordered list of
// same-group pool profiles, plus the pinned index for monitored customers
// whose own profile is in the pool.
class CandidateIndex {
public:
    CandidateIndex(const Feeder& feeder, const ProfilePool& pool) {
        candidates_.reserve(feeder.customers.size());
        pinned_.reserve(feeder.customers.size());
        for (const Customer& c : feeder.customers) {
            auto members = pool.group_members(c.group);
            if (members.empty())
                throw GroupingError("customer " + c.customer_id + " on feeder " +
                                    feeder.feeder_id + ": no pool profiles in group " +
                                    std::to_string(c.group));
            candidates_.push_back(members);
            std::optional<std::uint32_t> pin;
            if (c.monitored_profile) {
                pin = pool.index_of(*c.monitored_profile);
                if (pin && pool.at(*pin).group != c.group)
                    throw GroupingError("customer " + c.customer_id + ": own profile " +
                                        *c.monitored_profile + " is in group " +
                                        std::to_string(pool.at(*pin).group) +
                                        ", customer is in group " + std::to_string(c.group));
            }
            pinned_.push_back(pin);
        }
    }

    std::size_t customers() const { return candidates_.size(); }
    std::span<const std::uint32_t> candidates(std::size_t j) const { return candidates_[j]; }
    std::optional<std::uint32_t> pinned(std::size_t j) const { return pinned_[j]; }

private:
    std::vector<std::span<const std::uint32_t>> candidates_;
    std::vector<std::optional<std::uint32_t>> pinned_;
};

// Genome: one pool index per customer, in feeder.customers order.
using Genome = std::vector<std::uint32_t>;

inline BuddyAssignment to_assignment(const Genome& genome, const Feeder& feeder,
                                     const ProfilePool& pool, Method method, double weight,
                                     TrainingWindow window,
                                     std::optional<std::uint64_t> seed = std::nullopt) {
    BuddyAssignment a;
    a.feeder_id = feeder.feeder_id;
    a.method = method;
    a.weight = weight;
    a.window = window;
    a.seed = seed;
    for (std::size_t j = 0; j < feeder.customers.size(); ++j)
        a.profile_of[feeder.customers[j].customer_id] = pool.at(genome[j]).profile_id;
    return a;
}

inline Genome to_genome(const BuddyAssignment& assignment, const Feeder& feeder,
                        const ProfilePool& pool) {
    Genome g;
    g.reserve(feeder.customers.size());
    for (const Customer& c : feeder.customers) {
        auto it = assignment.profile_of.find(c.customer_id);
        if (it == assignment.profile_of.end())
            throw InvalidInputError("assignment misses customer " + c.customer_id);
        auto idx = pool.index_of(it->second);
        if (!idx)
            throw InvalidInputError("assignment uses profile " + it->second +
                                    " not present in the pool");
        g.push_back(*idx);
    }
    return g;
}

// Checks the assignment invariants: exactly one profile per customer, all
// profiles from the pool and in the customer's group.
inline void validate_assignment(const BuddyAssignment& assignment, const Feeder& feeder,
                                const ProfilePool& pool) {
    if (assignment.profile_of.size() != feeder.customers.size())
        throw InvalidInputError("assignment has " +
                                std::to_string(assignment.profile_of.size()) +
                                " entries for " + std::to_string(feeder.customers.size()) +
                                " customers");
    for (const Customer& c : feeder.customers) {
        auto it = assignment.profile_of.find(c.customer_id);
        if (it == assignment.profile_of.end())
            throw InvalidInputError("assignment misses customer " + c.customer_id);
        auto idx = pool.index_of(it->second);
        if (!idx)
            throw InvalidInputError("assigned profile " + it->second + " not in pool");
        if (pool.at(*idx).group != c.group)
            throw GroupingError("customer " + c.customer_id + " (group " +
                                std::to_string(c.group) + ") assigned profile " +
                                it->second + " of group " +
                                std::to_string(pool.at(*idx).group));
    }
}

// Slot-wise sum of the assigned profiles over [start, start + 7*n_weeks).
inline HalfHourlySeries assignment_aggregate(const BuddyAssignment& assignment,
                                             const Feeder& feeder, const ProfilePool& pool,
                                             Date start, int n_weeks) {
    HalfHourlySeries out;
    out.start_date = start;
    out.values.assign(static_cast<std::size_t>(n_weeks) * kSlotsPerWeek, 0.0);
    for (const Customer& c : feeder.customers) {
        auto it = assignment.profile_of.find(c.customer_id);
        if (it == assignment.profile_of.end())
            throw InvalidInputError("assignment misses customer " + c.customer_id);
        auto idx = pool.index_of(it->second);
        if (!idx)
            throw InvalidInputError("assigned profile " + it->second + " not in pool");
        const HalfHourlySeries& s = pool.at(*idx).series;
        const std::size_t off = s.offset_of(start);
        if (off + out.values.size() > s.values.size())
            throw RangeError("profile " + it->second + " does not cover the window");
        for (std::size_t t = 0; t < out.values.size(); ++t)
            out.values[t] += s.values[off + t];
    }
    return out;
}

} // namespace lvbuddy

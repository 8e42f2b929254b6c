#pragma once

#include <cmath>

#include "lvbuddy/model.hpp"

namespace lvbuddy {

// The simple algorithm: each customer gets the in-group profile whose mean
// daily demand is closest to the customer's. Ties go to the lowest
// profile_id; candidate scans run in id order, so a strict improvement test
// is all that is needed. Substation readings are never consulted.
inline BuddyAssignment simple_buddy(const Feeder& feeder, const ProfilePool& pool,
                                    TrainingWindow window = {}) {
    const CandidateIndex index(feeder, pool);
    BuddyAssignment out;
    out.feeder_id = feeder.feeder_id;
    out.method = Method::simple;
    out.weight = 1.0;
    out.window = window;
    for (std::size_t j = 0; j < feeder.customers.size(); ++j) {
        const Customer& c = feeder.customers[j];
        std::uint32_t best;
        if (auto pin = index.pinned(j)) {
            best = *pin;
        } else {
            auto candidates = index.candidates(j);
            best = candidates.front();
            double best_gap = std::abs(c.mean_daily_demand - pool.at(best).mean_daily_demand);
            for (std::uint32_t k : candidates.subspan(1)) {
                const double gap = std::abs(c.mean_daily_demand - pool.at(k).mean_daily_demand);
                if (gap < best_gap) {
                    best = k;
                    best_gap = gap;
                }
            }
        }
        out.profile_of[c.customer_id] = pool.at(best).profile_id;
    }
    return out;
}

// Sum over customers of |U_j - Uhat_{k_j}|, the objective the simple
// algorithm minimizes per customer (and the unnormalized second term of the
// GA fitness).
inline double demand_mismatch(const BuddyAssignment& assignment, const Feeder& feeder,
                              const ProfilePool& pool) {
    double total = 0.0;
    for (const Customer& c : feeder.customers) {
        auto it = assignment.profile_of.find(c.customer_id);
        if (it == assignment.profile_of.end())
            throw InvalidInputError("assignment misses customer " + c.customer_id);
        auto idx = pool.index_of(it->second);
        if (!idx)
            throw InvalidInputError("assigned profile " + it->second + " not in pool");
        total += std::abs(c.mean_daily_demand - pool.at(*idx).mean_daily_demand);
    }
    return total;
}

} // namespace lvbuddy

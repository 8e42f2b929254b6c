#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "lvbuddy/metrics.hpp"
#include "lvbuddy/model.hpp"
#include "lvbuddy/rng.hpp"

namespace lvbuddy {

struct MonteCarloResult {
    BuddyAssignment assignment;          // the sample with the lowest RMAE
    double best_rmae = 0.0;
    std::size_t best_index = 0;
    std::vector<double> rmae_samples;    // all samples, draw order
};

// Random-search baseline: draw `n_samples` group-respecting assignments
// uniformly (monitored customers pinned, as in the GA) and keep the one
// with the lowest RMAE against the substation window. The full sample list
// is returned for percentile analysis.
inline MonteCarloResult monte_carlo_buddy(const Feeder& feeder, const ProfilePool& pool,
                                          const TrainingWindow& window, int n_samples,
                                          std::uint64_t seed) {
    if (n_samples < 1) throw ConfigError("monte-carlo: n_samples must be >= 1");
    const CandidateIndex index(feeder, pool);
    if (!feeder.substation_series)
        throw ConfigError("feeder " + feeder.feeder_id +
                          " has no substation series; required for monte-carlo buddying");
    const HalfHourlySeries& s = *feeder.substation_series;
    if (!s.covers(window.start, window.days()))
        throw RangeError("substation series of feeder " + feeder.feeder_id +
                         " does not cover the training window");
    const std::size_t n_slots = window.slots();
    const std::size_t s_off = s.offset_of(window.start);
    double s_total = 0.0;
    for (std::size_t t = 0; t < n_slots; ++t) s_total += s.values[s_off + t];
    if (s_total <= 0.0)
        throw DegenerateError("substation total is zero over the training window");

    std::vector<std::size_t> offsets(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!pool.at(i).series.covers(window.start, window.days()))
            throw RangeError("profile " + pool.at(i).profile_id +
                             " does not cover the training window");
        offsets[i] = pool.at(i).series.offset_of(window.start);
    }

    const std::size_t n_customers = feeder.customers.size();
    Rng rng(seed);

    MonteCarloResult result;
    result.rmae_samples.reserve(static_cast<std::size_t>(n_samples));
    Genome genome(n_customers), best_genome;
    std::vector<double> aggregate(n_slots);
    double best = std::numeric_limits<double>::infinity();

    for (int sample = 0; sample < n_samples; ++sample) {
        for (std::size_t j = 0; j < n_customers; ++j) {
            if (auto pin = index.pinned(j)) {
                genome[j] = *pin;
            } else {
                auto candidates = index.candidates(j);
                genome[j] = candidates[rng.uniform_index(candidates.size())];
            }
        }
        std::fill(aggregate.begin(), aggregate.end(), 0.0);
        for (std::uint32_t idx : genome) {
            const double* p = pool.at(idx).series.values.data() + offsets[idx];
            for (std::size_t t = 0; t < n_slots; ++t) aggregate[t] += p[t];
        }
        double mismatch = 0.0;
        for (std::size_t t = 0; t < n_slots; ++t)
            mismatch += std::abs(aggregate[t] - s.values[s_off + t]);
        const double sample_rmae = mismatch / (static_cast<double>(n_slots) * s_total);
        result.rmae_samples.push_back(sample_rmae);
        if (sample_rmae < best) {
            best = sample_rmae;
            best_genome = genome;
            result.best_index = static_cast<std::size_t>(sample);
        }
    }

    result.best_rmae = best;
    result.assignment = to_assignment(best_genome, feeder, pool, Method::monte_carlo,
                                      0.0, window, seed);
    return result;
}

} // namespace lvbuddy

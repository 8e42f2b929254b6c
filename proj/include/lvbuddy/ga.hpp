#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "lvbuddy/model.hpp"
#include "lvbuddy/rng.hpp"

namespace lvbuddy {

enum class MutationDecay { linear, constant };

struct GaConfig {
    double weight = 0.0;                    // w: 0 = feeder match only, 1 = mean demands only
    int population = 100;                   // G
    int elite = 10;                         // G', parents of every offspring
    int generations = 100;
    double initial_mutation_rate = 0.1;     // p0
    MutationDecay mutation_decay = MutationDecay::linear;
    int reset_generation = 40;              // population re-randomized once, here
    double fitness_p = 1.0;                 // exponent on the slot-wise feeder mismatch
    std::uint64_t seed = 0;

    void validate() const {
        if (!(weight >= 0.0 && weight <= 1.0))
            throw ConfigError("ga: weight must be in [0,1]");
        if (elite < 2 || elite >= population)
            throw ConfigError("ga: need 2 <= elite < population");
        if (generations < 1) throw ConfigError("ga: generations must be >= 1");
        if (reset_generation < 0 || reset_generation >= generations)
            throw ConfigError("ga: need 0 <= reset_generation < generations");
        if (!(initial_mutation_rate >= 0.0 && initial_mutation_rate <= 1.0))
            throw ConfigError("ga: initial_mutation_rate must be in [0,1]");
        if (fitness_p < 1.0) throw ConfigError("ga: fitness_p must be >= 1");
    }

    double mutation_rate(int generation) const {
        switch (mutation_decay) {
            case MutationDecay::constant:
                return initial_mutation_rate;
            case MutationDecay::linear:
            default:
                return initial_mutation_rate *
                       (1.0 - static_cast<double>(generation) / static_cast<double>(generations));
        }
    }
};

// Weighted fitness of a genome over a training window:
//
//   (1-w) * sum_t |a(t) - s(t)|^p / S  +  w * sum_j |U_j - Uhat_{k_j}| / D
//
// with a(t) the aggregate of the assigned profiles, S the substation total
// over the window and D the total registry demand. Each term is evaluated
// only when its weight is nonzero, so the w=0 and w=1 limits are exactly
// independent of the unused input.
class FitnessEvaluator {
public:
    FitnessEvaluator(const Feeder& feeder, const ProfilePool& pool,
                     const TrainingWindow& window, double weight, double fitness_p = 1.0)
        : pool_(&pool), weight_(weight), fitness_p_(fitness_p), n_slots_(window.slots()) {
        if (!(weight >= 0.0 && weight <= 1.0))
            throw ConfigError("fitness: weight must be in [0,1]");
        if (window.weeks < 1) throw ConfigError("fitness: empty training window");

        for (const Customer& c : feeder.customers)
            demands_.push_back(c.mean_daily_demand);

        if (weight_ < 1.0) {
            if (!feeder.substation_series)
                throw ConfigError("feeder " + feeder.feeder_id +
                                  " has no substation series; required for weight < 1");
            const HalfHourlySeries& s = *feeder.substation_series;
            if (!s.covers(window.start, window.days()))
                throw RangeError("substation series of feeder " + feeder.feeder_id +
                                 " does not cover the training window");
            substation_offset_ = s.offset_of(window.start);
            substation_ = &s;
            substation_total_ = 0.0;
            for (std::size_t t = 0; t < n_slots_; ++t)
                substation_total_ += s.values[substation_offset_ + t];
            if (substation_total_ <= 0.0)
                throw DegenerateError("substation total S is zero over the training window");

            profile_offsets_.resize(pool.size());
            for (std::size_t i = 0; i < pool.size(); ++i) {
                const HalfHourlySeries& p = pool.at(i).series;
                if (!p.covers(window.start, window.days()))
                    throw RangeError("profile " + pool.at(i).profile_id +
                                     " does not cover the training window");
                profile_offsets_[i] = p.offset_of(window.start);
            }
        }
        if (weight_ > 0.0) {
            demand_total_ = std::accumulate(demands_.begin(), demands_.end(), 0.0);
            if (demand_total_ <= 0.0)
                throw DegenerateError("registry demand total D is zero");
        }
    }

    std::size_t slots() const { return n_slots_; }

    double operator()(const Genome& genome) const {
        std::vector<double> scratch;
        return evaluate(genome, scratch);
    }

    // `scratch` is reused across calls; evaluation is otherwise pure, so
    // concurrent calls with separate scratch buffers are safe.
    double evaluate(const Genome& genome, std::vector<double>& scratch) const {
        double value = 0.0;
        if (weight_ < 1.0) {
            scratch.assign(n_slots_, 0.0);
            for (std::uint32_t idx : genome) {
                const double* p = pool_->at(idx).series.values.data() + profile_offsets_[idx];
                for (std::size_t t = 0; t < n_slots_; ++t) scratch[t] += p[t];
            }
            const double* s = substation_->values.data() + substation_offset_;
            double mismatch = 0.0;
            if (fitness_p_ == 1.0) {
                for (std::size_t t = 0; t < n_slots_; ++t)
                    mismatch += std::abs(scratch[t] - s[t]);
            } else {
                for (std::size_t t = 0; t < n_slots_; ++t)
                    mismatch += std::pow(std::abs(scratch[t] - s[t]), fitness_p_);
            }
            value += (1.0 - weight_) * mismatch / substation_total_;
        }
        if (weight_ > 0.0) {
            double gap = 0.0;
            for (std::size_t j = 0; j < genome.size(); ++j)
                gap += std::abs(demands_[j] - pool_->at(genome[j]).mean_daily_demand);
            value += weight_ * gap / demand_total_;
        }
        return value;
    }

private:
    const ProfilePool* pool_;
    double weight_;
    double fitness_p_;
    std::size_t n_slots_;
    std::vector<double> demands_;
    const HalfHourlySeries* substation_ = nullptr;
    std::size_t substation_offset_ = 0;
    double substation_total_ = 0.0;
    double demand_total_ = 0.0;
    std::vector<std::size_t> profile_offsets_;
};

inline double fitness(const Genome& genome, const Feeder& feeder, const ProfilePool& pool,
                      const TrainingWindow& window, double weight, double fitness_p = 1.0) {
    if (genome.size() != feeder.customers.size())
        throw InvalidInputError("genome length does not match customer count");
    return FitnessEvaluator(feeder, pool, window, weight, fitness_p)(genome);
}

struct EvolveResult {
    BuddyAssignment assignment;
    double best_fitness = 0.0;
    std::vector<double> best_so_far;    // best-ever fitness after each generation
};

// Genetic-algorithm buddying. One seeded generator drives the whole run;
// draws happen in a fixed order (initialization, then per generation:
// crossover picks, disagreement fills, mutation), all before any fitness
// evaluation of the new population.
inline EvolveResult evolve(const Feeder& feeder, const ProfilePool& pool,
                           const TrainingWindow& window, const GaConfig& config) {
    config.validate();
    const CandidateIndex index(feeder, pool);
    const FitnessEvaluator evaluator(feeder, pool, window, config.weight, config.fitness_p);
    const std::size_t n_customers = feeder.customers.size();
    const std::size_t population_size = static_cast<std::size_t>(config.population);

    Rng rng(config.seed);

    auto random_genome = [&] {
        Genome g(n_customers);
        for (std::size_t j = 0; j < n_customers; ++j) {
            if (auto pin = index.pinned(j)) {
                g[j] = *pin;
            } else {
                auto candidates = index.candidates(j);
                g[j] = candidates[rng.uniform_index(candidates.size())];
            }
        }
        return g;
    };

    std::vector<Genome> population(population_size);
    for (auto& g : population) g = random_genome();

    Genome best_genome;
    double best_fitness = std::numeric_limits<double>::infinity();
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(config.generations));

    std::vector<double> fitnesses(population_size);
    std::vector<std::size_t> order(population_size);
    std::vector<double> scratch;

    for (int gen = 0; gen < config.generations; ++gen) {
        if (gen == config.reset_generation && gen > 0) {
            // One documented restart: fresh random population carrying the
            // best genome found so far.
            for (auto& g : population) g = random_genome();
            population[0] = best_genome;
        }

        for (std::size_t i = 0; i < population_size; ++i)
            fitnesses[i] = evaluator.evaluate(population[i], scratch);
        for (std::size_t i = 0; i < population_size; ++i) {
            if (fitnesses[i] < best_fitness) {
                best_fitness = fitnesses[i];
                best_genome = population[i];
            }
        }
        trace.push_back(best_fitness);

        if (gen + 1 == config.generations) break;

        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return fitnesses[a] < fitnesses[b];
        });
        const std::size_t n_elite = static_cast<std::size_t>(config.elite);
        const double p_mut = config.mutation_rate(gen);

        std::vector<Genome> offspring(population_size);
        for (std::size_t child = 0; child < population_size; ++child) {
            std::size_t ia = rng.uniform_index(n_elite);
            std::size_t ib = rng.uniform_index(n_elite - 1);
            if (ib >= ia) ++ib;
            const Genome& a = population[order[ia]];
            const Genome& b = population[order[ib]];
            Genome g(n_customers);
            for (std::size_t j = 0; j < n_customers; ++j) {
                if (a[j] == b[j]) {
                    g[j] = a[j];
                } else {
                    g[j] = rng.bernoulli(0.5) ? a[j] : b[j];
                }
            }
            for (std::size_t j = 0; j < n_customers; ++j) {
                if (index.pinned(j)) continue;
                if (rng.bernoulli(p_mut)) {
                    auto candidates = index.candidates(j);
                    g[j] = candidates[rng.uniform_index(candidates.size())];
                }
            }
            offspring[child] = std::move(g);
        }
        // Elitism: the best genome found so far stays in the population.
        offspring[0] = best_genome;
        population = std::move(offspring);
    }

    EvolveResult result;
    result.best_fitness = best_fitness;
    result.best_so_far = std::move(trace);
    result.assignment = to_assignment(best_genome, feeder, pool, Method::ga, config.weight,
                                      window, config.seed);
    return result;
}

} // namespace lvbuddy

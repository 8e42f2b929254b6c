#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lvbuddy/ga.hpp"
#include "lvbuddy/pseudo.hpp"
#include "lvbuddy/simple_buddy.hpp"

#include "helpers.hpp"

using namespace lvbuddy;
using test::make_series;
using Catch::Matchers::WithinRel;

namespace {

// Small seeded world: a synthetic pool and a type-1 pseudo-feeder over it.
struct World {
    ProfilePool pool;
    PseudoFeeder pseudo;
    TrainingWindow window;

    static World make(int n_profiles, int n_customers, std::uint64_t seed, int weeks = 1) {
        SyntheticPoolSpec spec;
        spec.n_profiles = n_profiles;
        spec.days = 7 * (weeks + 1);
        spec.seed = seed;
        World w;
        w.pool = ProfilePool(generate_pool(spec));
        const Feeder tmpl = random_template_feeder("f", n_customers, w.pool, seed + 1);
        w.pseudo = make_type1(tmpl, w.pool, seed + 2);
        w.window = {spec.start_date, weeks};
        return w;
    }

    Genome generating_genome() const {
        Genome g;
        for (const Customer& c : pseudo.feeder.customers)
            g.push_back(*pool.index_of(pseudo.generating.at(c.customer_id)));
        return g;
    }
};

GaConfig small_config(double weight, std::uint64_t seed) {
    GaConfig config;
    config.weight = weight;
    config.seed = seed;
    return config;
}

} // namespace

TEST_CASE("fitness is zero for a perfect reconstruction", "[ga]") {
    const World w = World::make(20, 5, 101);
    const Genome truth = w.generating_genome();
    for (double weight : {0.0, 0.3, 0.5, 1.0})
        CHECK(fitness(truth, w.pseudo.feeder, w.pool, w.window, weight) == 0.0);
}

TEST_CASE("fitness at unit weight is the normalized demand gap", "[ga]") {
    const World w = World::make(16, 4, 103);
    const CandidateIndex index(w.pseudo.feeder, w.pool);
    Genome genome;
    for (std::size_t j = 0; j < w.pseudo.feeder.customers.size(); ++j)
        genome.push_back(index.candidates(j)[0]);

    double gap = 0.0, total = 0.0;
    for (std::size_t j = 0; j < genome.size(); ++j) {
        const Customer& c = w.pseudo.feeder.customers[j];
        gap += std::abs(c.mean_daily_demand - w.pool.at(genome[j]).mean_daily_demand);
        total += c.mean_daily_demand;
    }
    CHECK_THAT(fitness(genome, w.pseudo.feeder, w.pool, w.window, 1.0),
               WithinRel(gap / total, 1e-12));
}

TEST_CASE("fitness against a hand-computed value", "[ga]") {
    // One customer; substation carries 2.0 kWh in a single slot, the
    // assigned profile 1.5 in that slot; demands match exactly. At w = 0.5
    // the score is 0.5 * (0.5 / 2.0) + 0.5 * 0 = 0.125.
    std::vector<double> profile_values(336, 0.0), substation_values(336, 0.0);
    profile_values[100] = 1.5;
    substation_values[100] = 2.0;
    auto profile = MonitoredProfile::make("p0", make_series(profile_values), 0);

    Customer c;
    c.customer_id = "c0";
    c.group = 0;
    c.mean_daily_demand = profile.mean_daily_demand;
    Feeder feeder{"f", {c}, make_series(substation_values)};

    ProfilePool pool({profile});
    const TrainingWindow window{test::monday(), 1};
    CHECK_THAT(fitness({0}, feeder, pool, window, 0.5), WithinRel(0.125, 1e-12));
    CHECK_THAT(fitness({0}, feeder, pool, window, 0.0), WithinRel(0.25, 1e-12));
    CHECK(fitness({0}, feeder, pool, window, 1.0) == 0.0);
}

TEST_CASE("weight limits ignore the irrelevant input", "[ga]") {
    World w = World::make(18, 5, 107);
    const CandidateIndex index(w.pseudo.feeder, w.pool);
    Genome genome;
    for (std::size_t j = 0; j < w.pseudo.feeder.customers.size(); ++j)
        genome.push_back(index.candidates(j).back());

    const double at_zero = fitness(genome, w.pseudo.feeder, w.pool, w.window, 0.0);
    const double at_one = fitness(genome, w.pseudo.feeder, w.pool, w.window, 1.0);

    // Scrambling every registry demand leaves w = 0 untouched.
    World u = w;
    for (Customer& c : u.pseudo.feeder.customers) c.mean_daily_demand += 17.0;
    CHECK(fitness(genome, u.pseudo.feeder, u.pool, u.window, 0.0) == at_zero);

    // Scrambling the substation series leaves w = 1 untouched.
    World v = w;
    for (double& x : v.pseudo.feeder.substation_series->values) x = 2.0 * x + 1.0;
    CHECK(fitness(genome, v.pseudo.feeder, v.pool, v.window, 1.0) == at_one);
}

TEST_CASE("fitness is non-negative on random genomes", "[ga]") {
    const World w = World::make(24, 8, 109);
    const CandidateIndex index(w.pseudo.feeder, w.pool);
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        Genome g;
        for (std::size_t j = 0; j < w.pseudo.feeder.customers.size(); ++j) {
            auto candidates = index.candidates(j);
            g.push_back(candidates[rng.uniform_index(candidates.size())]);
        }
        const double weight = rng.uniform01();
        CHECK(fitness(g, w.pseudo.feeder, w.pool, w.window, weight) >= 0.0);
    }
}

TEST_CASE("degenerate normalizations are hard errors", "[ga]") {
    World w = World::make(12, 3, 111);

    SECTION("zero substation total with weight < 1") {
        for (double& x : w.pseudo.feeder.substation_series->values) x = 0.0;
        CHECK_THROWS_AS(FitnessEvaluator(w.pseudo.feeder, w.pool, w.window, 0.5),
                        DegenerateError);
    }
    SECTION("zero demand total with weight > 0") {
        for (Customer& c : w.pseudo.feeder.customers) c.mean_daily_demand = 0.0;
        CHECK_THROWS_AS(FitnessEvaluator(w.pseudo.feeder, w.pool, w.window, 0.5),
                        DegenerateError);
    }
    SECTION("missing substation series with weight < 1") {
        w.pseudo.feeder.substation_series.reset();
        CHECK_THROWS_AS(FitnessEvaluator(w.pseudo.feeder, w.pool, w.window, 0.5),
                        ConfigError);
        // At unit weight the substation is not consulted at all.
        CHECK_NOTHROW(FitnessEvaluator(w.pseudo.feeder, w.pool, w.window, 1.0));
    }
}

TEST_CASE("evolve is deterministic for a fixed seed", "[ga]") {
    const World w = World::make(20, 6, 113);
    const GaConfig config = small_config(0.2, 999);
    const EvolveResult first = evolve(w.pseudo.feeder, w.pool, w.window, config);
    const EvolveResult second = evolve(w.pseudo.feeder, w.pool, w.window, config);
    CHECK(first.assignment.profile_of == second.assignment.profile_of);
    CHECK(first.best_fitness == second.best_fitness);
    CHECK(first.best_so_far == second.best_so_far);

    const EvolveResult other = evolve(w.pseudo.feeder, w.pool, w.window,
                                      small_config(0.2, 1000));
    CHECK(other.best_so_far != first.best_so_far);   // different draws
}

TEST_CASE("evolve at unit weight matches the simple algorithm's objective", "[ga]") {
    for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
        World w = World::make(30, 8, 200 + seed);
        // Nudge the demands off the pool means so the optimum gap is nonzero
        // and unique.
        Rng rng(seed);
        for (Customer& c : w.pseudo.feeder.customers)
            c.mean_daily_demand *= 0.9 + 0.2 * rng.uniform01();

        const EvolveResult ga =
            evolve(w.pseudo.feeder, w.pool, w.window, small_config(1.0, seed));
        const BuddyAssignment sa = simple_buddy(w.pseudo.feeder, w.pool, w.window);
        const double ga_gap = demand_mismatch(ga.assignment, w.pseudo.feeder, w.pool);
        const double sa_gap = demand_mismatch(sa, w.pseudo.feeder, w.pool);
        REQUIRE(sa_gap > 0.0);
        CHECK_THAT(ga_gap, WithinRel(sa_gap, 1e-9));
    }
}

TEST_CASE("tiny type-1 instance is solved exactly at zero weight", "[ga]") {
    const World w = World::make(5, 1, 301);
    const EvolveResult result =
        evolve(w.pseudo.feeder, w.pool, w.window, small_config(0.0, 7));
    CHECK(result.best_fitness == 0.0);
    CHECK(recovery_rate(w.pseudo, result.assignment) == 1.0);
}

TEST_CASE("best-so-far trace is monotone and spans all generations", "[ga]") {
    const World w = World::make(24, 8, 303);
    GaConfig config = small_config(0.0, 11);
    const EvolveResult result = evolve(w.pseudo.feeder, w.pool, w.window, config);
    REQUIRE(result.best_so_far.size() == static_cast<std::size_t>(config.generations));
    for (std::size_t g = 1; g < result.best_so_far.size(); ++g)
        CHECK(result.best_so_far[g] <= result.best_so_far[g - 1]);
    CHECK(result.best_fitness == result.best_so_far.back());
}

TEST_CASE("evolved assignments honor groups and pinning", "[ga]") {
    World w = World::make(24, 6, 305);
    // Turn customer 0 into a monitored customer pinned to its true profile.
    Customer& pinned = w.pseudo.feeder.customers[0];
    pinned.monitored_profile = w.pseudo.generating.at(pinned.customer_id);

    const EvolveResult result =
        evolve(w.pseudo.feeder, w.pool, w.window, small_config(0.4, 17));
    validate_assignment(result.assignment, w.pseudo.feeder, w.pool);
    CHECK(result.assignment.profile_of.at(pinned.customer_id) == *pinned.monitored_profile);
}

TEST_CASE("config validation", "[ga]") {
    const World w = World::make(8, 2, 307);
    GaConfig config;

    config.weight = 1.5;
    CHECK_THROWS_AS(evolve(w.pseudo.feeder, w.pool, w.window, config), ConfigError);
    config = {};
    config.elite = 1;
    CHECK_THROWS_AS(evolve(w.pseudo.feeder, w.pool, w.window, config), ConfigError);
    config = {};
    config.elite = config.population;
    CHECK_THROWS_AS(evolve(w.pseudo.feeder, w.pool, w.window, config), ConfigError);
    config = {};
    config.reset_generation = config.generations;
    CHECK_THROWS_AS(evolve(w.pseudo.feeder, w.pool, w.window, config), ConfigError);
    config = {};
    config.fitness_p = 0.5;
    CHECK_THROWS_AS(evolve(w.pseudo.feeder, w.pool, w.window, config), ConfigError);
}

TEST_CASE("mutation rate decays linearly by default", "[ga]") {
    GaConfig config;
    CHECK(config.mutation_rate(0) == 0.1);
    CHECK_THAT(config.mutation_rate(50), WithinRel(0.05, 1e-12));
    CHECK_THAT(config.mutation_rate(99), WithinRel(0.001, 1e-9));

    config.mutation_decay = MutationDecay::constant;
    CHECK(config.mutation_rate(99) == 0.1);
}

TEST_CASE("p-norm knob sharpens the feeder term", "[ga]") {
    // With p = 2 the single-slot mismatch is squared before normalization.
    std::vector<double> profile_values(336, 0.0), substation_values(336, 0.0);
    profile_values[10] = 1.0;
    substation_values[10] = 3.0;
    auto profile = MonitoredProfile::make("p0", make_series(profile_values), 0);
    Customer c;
    c.customer_id = "c0";
    c.group = 0;
    c.mean_daily_demand = profile.mean_daily_demand;
    Feeder feeder{"f", {c}, make_series(substation_values)};
    ProfilePool pool({profile});
    const TrainingWindow window{test::monday(), 1};

    CHECK_THAT(fitness({0}, feeder, pool, window, 0.0, 1.0), WithinRel(2.0 / 3.0, 1e-12));
    CHECK_THAT(fitness({0}, feeder, pool, window, 0.0, 2.0), WithinRel(4.0 / 3.0, 1e-12));
}

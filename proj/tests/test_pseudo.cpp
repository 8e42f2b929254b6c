#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "lvbuddy/ga.hpp"
#include "lvbuddy/pseudo.hpp"
#include "lvbuddy/simple_buddy.hpp"

#include "helpers.hpp"

using namespace lvbuddy;
using Catch::Matchers::WithinRel;

TEST_CASE("pool generation basics", "[pseudo]") {
    SyntheticPoolSpec spec;
    spec.n_profiles = 0;
    CHECK(generate_pool(spec).empty());

    spec.n_profiles = 20;
    spec.days = 14;
    spec.seed = 42;
    const auto a = generate_pool(spec);
    const auto b = generate_pool(spec);
    REQUIRE(a.size() == 20);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].profile_id == b[i].profile_id);
        CHECK(a[i].series.values == b[i].series.values);
        CHECK(a[i].group == b[i].group);
    }

    spec.seed = 43;
    const auto c = generate_pool(spec);
    CHECK(a[0].series.values != c[0].series.values);

    for (const auto& p : a) {
        CHECK(p.series.size() == 14u * 48u);
        CHECK(p.mean_daily_demand > 0.0);
        for (double v : p.series.values) CHECK(v >= 0.0);
    }
}

TEST_CASE("group mix is honored exactly", "[pseudo]") {
    SyntheticPoolSpec spec;
    spec.n_profiles = 10;
    spec.days = 7;
    spec.group_mix = {0.5, 0.5};
    spec.group_level_median = {8.0, 12.0};
    const auto pool = generate_pool(spec);
    int counts[2] = {0, 0};
    for (const auto& p : pool) counts[p.group] += 1;
    CHECK(counts[0] == 5);
    CHECK(counts[1] == 5);

    spec.group_mix = {0.4, 0.35, 0.25};
    spec.group_level_median = {8.0, 10.0, 12.0};
    const auto pool2 = generate_pool(spec);
    int counts2[3] = {0, 0, 0};
    for (const auto& p : pool2) counts2[p.group] += 1;
    CHECK(counts2[0] + counts2[1] + counts2[2] == 10);
    CHECK(counts2[0] == 4);
}

TEST_CASE("doubling the level doubles the demand", "[pseudo]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SyntheticPoolSpec spec;
        spec.n_profiles = 4;
        spec.days = 7;
        spec.group_mix = {1.0};
        spec.group_level_median = {9.0};
        spec.seed = seed;
        const auto base = generate_pool(spec);
        spec.group_level_median = {18.0};
        const auto doubled = generate_pool(spec);
        for (std::size_t i = 0; i < base.size(); ++i) {
            const double ratio = doubled[i].mean_daily_demand / base[i].mean_daily_demand;
            CHECK_THAT(ratio, WithinRel(2.0, 0.05));
        }
    }
}

TEST_CASE("pool means are pairwise distinct", "[pseudo]") {
    SyntheticPoolSpec spec;
    spec.n_profiles = 60;
    spec.days = 14;
    spec.seed = 7;
    const auto pool = generate_pool(spec);
    std::set<double> means;
    for (const auto& p : pool) means.insert(p.mean_daily_demand);
    CHECK(means.size() == pool.size());
}

TEST_CASE("invalid pool specs are rejected", "[pseudo]") {
    SyntheticPoolSpec spec;
    spec.group_mix = {0.5, 0.4};   // sums to 0.9
    spec.group_level_median = {8.0, 9.0};
    CHECK_THROWS_AS(generate_pool(spec), ConfigError);

    spec = {};
    spec.days = 0;
    CHECK_THROWS_AS(generate_pool(spec), ConfigError);

    spec = {};
    spec.group_level_median[2] = -1.0;
    CHECK_THROWS_AS(generate_pool(spec), ConfigError);
}

TEST_CASE("type-1 pseudo-feeders", "[pseudo]") {
    SyntheticPoolSpec spec;
    spec.n_profiles = 30;
    spec.days = 14;
    spec.seed = 11;
    ProfilePool pool(generate_pool(spec));

    SECTION("single customer mirrors one pool profile") {
        Feeder tmpl = random_template_feeder("f", 1, pool, 12);
        const PseudoFeeder pseudo = make_type1(tmpl, pool, 13);
        const auto idx = pool.index_of(pseudo.generating.begin()->second);
        REQUIRE(idx);
        CHECK(pseudo.feeder.substation_series->values == pool.at(*idx).series.values);
        CHECK(pseudo.feeder.customers[0].mean_daily_demand ==
              pool.at(*idx).mean_daily_demand);
    }

    SECTION("group proportions and ids are preserved") {
        Feeder tmpl = random_template_feeder("f", 20, pool, 14);
        const PseudoFeeder pseudo = make_type1(tmpl, pool, 15);
        REQUIRE(pseudo.feeder.customers.size() == tmpl.customers.size());
        for (std::size_t j = 0; j < tmpl.customers.size(); ++j) {
            CHECK(pseudo.feeder.customers[j].customer_id == tmpl.customers[j].customer_id);
            CHECK(pseudo.feeder.customers[j].group == tmpl.customers[j].group);
            const auto& truth =
                pseudo.generating.at(pseudo.feeder.customers[j].customer_id);
            CHECK(pool.at(*pool.index_of(truth)).group == tmpl.customers[j].group);
        }
    }

    SECTION("construction is reproducible and substation is the exact aggregate") {
        Feeder tmpl = random_template_feeder("f", 10, pool, 16);
        const PseudoFeeder a = make_type1(tmpl, pool, 17);
        const PseudoFeeder b = make_type1(tmpl, pool, 17);
        CHECK(a.generating == b.generating);

        std::vector<double> total(pool.at(0).series.size(), 0.0);
        for (const auto& [cust, prof] : a.generating) {
            const auto& series = pool.at(*pool.index_of(prof)).series;
            for (std::size_t t = 0; t < total.size(); ++t) total[t] += series.values[t];
        }
        CHECK(a.feeder.substation_series->values == total);
    }

    SECTION("generating genome has zero fitness for every weight") {
        Feeder tmpl = random_template_feeder("f", 8, pool, 18);
        const PseudoFeeder pseudo = make_type1(tmpl, pool, 19);
        Genome truth;
        for (const Customer& c : pseudo.feeder.customers)
            truth.push_back(*pool.index_of(pseudo.generating.at(c.customer_id)));
        for (double w : {0.0, 0.1, 0.5, 0.9, 1.0})
            CHECK(fitness(truth, pseudo.feeder, pool, {spec.start_date, 2}, w) == 0.0);
    }
}

TEST_CASE("type-2 split", "[pseudo]") {
    SECTION("parity split after ascending sort") {
        // Means 1,2,3,4 in scrambled id order.
        const double means_by_id[] = {2.0, 4.0, 1.0, 3.0};
        std::vector<MonitoredProfile> profiles;
        for (int i = 0; i < 4; ++i)
            profiles.push_back(MonitoredProfile::make(
                "p" + std::to_string(i),
                test::constant_series(means_by_id[i] / kSlotsPerDay, 7), 0));
        const auto [populate, buddy] = make_type2_split(ProfilePool(std::move(profiles)));
        REQUIRE(populate.size() == 2);
        REQUIRE(buddy.size() == 2);
        CHECK_THAT(populate[0].mean_daily_demand, WithinRel(1.0, 1e-12));
        CHECK_THAT(populate[1].mean_daily_demand, WithinRel(3.0, 1e-12));
        CHECK_THAT(buddy[0].mean_daily_demand, WithinRel(2.0, 1e-12));
        CHECK_THAT(buddy[1].mean_daily_demand, WithinRel(4.0, 1e-12));
    }

    SECTION("equal means fall back to id order") {
        std::vector<MonitoredProfile> profiles;
        for (const char* id : {"a", "b", "c", "d"})
            profiles.push_back(
                MonitoredProfile::make(id, test::constant_series(0.25, 7), 0));
        const auto [populate, buddy] = make_type2_split(ProfilePool(std::move(profiles)));
        REQUIRE(populate.size() == 2);
        CHECK(populate[0].profile_id == "a");
        CHECK(populate[1].profile_id == "c");
        CHECK(buddy[0].profile_id == "b");
        CHECK(buddy[1].profile_id == "d");
    }

    SECTION("per-group split invariants") {
        SyntheticPoolSpec spec;
        spec.n_profiles = 31;
        spec.days = 7;
        spec.seed = 23;
        ProfilePool pool(generate_pool(spec));
        const auto [populate, buddy] = make_type2_split(pool);

        CHECK(populate.size() + buddy.size() == pool.size());
        std::set<std::string> populate_ids, buddy_ids;
        for (const auto& p : populate) populate_ids.insert(p.profile_id);
        for (const auto& p : buddy) buddy_ids.insert(p.profile_id);
        for (const auto& id : populate_ids) CHECK(buddy_ids.count(id) == 0);

        for (GroupId g = 0; g < kNumGroups; ++g) {
            long np = 0, nb = 0;
            for (const auto& p : populate) np += p.group == g;
            for (const auto& p : buddy) nb += p.group == g;
            CHECK(std::abs(np - nb) <= 1);
        }
    }

    SECTION("a single-profile group cannot be split") {
        std::vector<MonitoredProfile> profiles = {
            MonitoredProfile::make("a", test::constant_series(0.2, 7), 0),
            MonitoredProfile::make("b", test::constant_series(0.3, 7), 0),
            MonitoredProfile::make("c", test::constant_series(0.4, 7), 2),
        };
        CHECK_THROWS_AS(make_type2_split(ProfilePool(std::move(profiles))), SplitError);
    }
}

TEST_CASE("recovery rate", "[pseudo]") {
    SyntheticPoolSpec spec;
    spec.n_profiles = 40;
    spec.days = 14;
    spec.seed = 27;
    ProfilePool pool(generate_pool(spec));
    const PseudoFeeder pseudo =
        make_type1(random_template_feeder("f", 12, pool, 28), pool, 29);

    BuddyAssignment perfect;
    perfect.feeder_id = "f";
    perfect.profile_of = pseudo.generating;
    CHECK(recovery_rate(pseudo, perfect) == 1.0);

    // The simple algorithm recovers every customer: distinct means make the
    // zero-gap profile the unique argmin.
    CHECK(recovery_rate(pseudo, simple_buddy(pseudo.feeder, pool)) == 1.0);

    BuddyAssignment wrong = perfect;
    for (auto& [cust, prof] : wrong.profile_of) {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const auto& candidate = pool.at(i).profile_id;
            if (candidate != prof) {
                prof = candidate;
                break;
            }
        }
    }
    CHECK(recovery_rate(pseudo, wrong) == 0.0);
}

TEST_CASE("per-customer errors vanish for the generating assignment", "[pseudo]") {
    SyntheticPoolSpec spec;
    spec.n_profiles = 20;
    spec.days = 14;
    spec.seed = 31;
    ProfilePool pool(generate_pool(spec));
    const PseudoFeeder pseudo =
        make_type1(random_template_feeder("f", 6, pool, 32), pool, 33);

    BuddyAssignment perfect;
    perfect.feeder_id = "f";
    perfect.profile_of = pseudo.generating;
    const auto errors =
        per_customer_errors(pseudo, perfect, pool, pool, {spec.start_date, 2});
    REQUIRE(errors.size() == 6);
    for (double e : errors) CHECK(e == 0.0);
}

TEST_CASE("phase aggregates of a pseudo-feeder", "[pseudo]") {
    SyntheticPoolSpec spec;
    spec.n_profiles = 24;
    spec.days = 7;
    spec.seed = 35;
    ProfilePool pool(generate_pool(spec));
    Feeder tmpl = random_template_feeder("f", 9, pool, 36);
    for (std::size_t j = 0; j < tmpl.customers.size(); ++j)
        tmpl.customers[j].phase = 1 + static_cast<int>(j % 3);
    const PseudoFeeder pseudo = make_type1(tmpl, pool, 37);

    const auto phases = phase_aggregate_series(pseudo, pool);
    REQUIRE(phases.size() == 3);
    std::vector<double> total(pool.at(0).series.size(), 0.0);
    for (const auto& [phase, series] : phases)
        for (std::size_t t = 0; t < total.size(); ++t) total[t] += series.values[t];
    for (std::size_t t = 0; t < total.size(); ++t)
        CHECK_THAT(total[t],
                   WithinRel(pseudo.feeder.substation_series->values[t], 1e-12));
}

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lvbuddy/harness.hpp"
#include "lvbuddy/lvbuddy.hpp"

#include "helpers.hpp"

using namespace lvbuddy;
using Catch::Matchers::WithinRel;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Builds a small in-memory dataset of type-1 pseudo-feeders over one pool.
Dataset make_dataset(int n_profiles, const std::vector<int>& feeder_sizes,
                     std::uint64_t seed, int days = 98) {
    SyntheticPoolSpec spec;
    spec.n_profiles = n_profiles;
    spec.days = days;
    spec.seed = seed;
    Dataset data;
    data.pool = ProfilePool(generate_pool(spec));
    for (std::size_t i = 0; i < feeder_sizes.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "f%02zu", i);
        Feeder tmpl = random_template_feeder(id, feeder_sizes[i], data.pool, seed + 10 + i);
        for (std::size_t j = 0; j < tmpl.customers.size(); ++j)
            tmpl.customers[j].phase = 1 + static_cast<int>(j % 3);
        PseudoFeeder pseudo = make_type1(tmpl, data.pool, seed + 100 + i);
        data.phase_series[pseudo.feeder.feeder_id] =
            phase_aggregate_series(pseudo, data.pool);
        data.feeders.push_back(std::move(pseudo.feeder));
    }
    return data;
}

GaConfig tiny_ga() {
    GaConfig config;
    config.population = 12;
    config.elite = 3;
    config.generations = 12;
    config.reset_generation = 6;
    return config;
}

} // namespace

TEST_CASE("toml configs parse into specs", "[harness]") {
    const auto toml = TomlTable::parse(R"(
# comment
[sweep]
seasons = ["2020-01-06", "2020-02-03"]
weeks = [1, 2]
weights = [0.0, 0.5, 1.0]   # trailing comment
methods = ["ga", "simple"]
test_start = "2020-03-02"
test_weeks = 2
master_seed = 77

[ga]   # paper-default knobs, overridden here
population = 30
elite = 5
generations = 40
initial_mutation_rate = 0.2
mutation_decay = "constant"
reset_generation = 20
fitness_p = 1.0

[monte-carlo]
samples = 250

[pool]
n_profiles = 12
days = 28
group_mix = [0.5, 0.5]
group_level_median = [8.0, 12.0]
)");

    const SweepSpec sweep = sweep_from_toml(toml);
    CHECK(sweep.seasons == std::vector<Date>{make_date(2020, 1, 6), make_date(2020, 2, 3)});
    CHECK(sweep.weeks == std::vector<int>{1, 2});
    CHECK(sweep.weights == std::vector<double>{0.0, 0.5, 1.0});
    REQUIRE(sweep.methods.size() == 2);
    CHECK(sweep.methods[0] == Method::ga);
    CHECK(sweep.methods[1] == Method::simple);
    CHECK(sweep.test_start == make_date(2020, 3, 2));
    CHECK(sweep.test_weeks == 2);
    CHECK(sweep.master_seed == 77);
    CHECK(sweep.mc_samples == 250);

    const GaConfig ga = ga_from_toml(toml);
    CHECK(ga.population == 30);
    CHECK(ga.elite == 5);
    CHECK(ga.generations == 40);
    CHECK(ga.initial_mutation_rate == 0.2);
    CHECK(ga.mutation_decay == MutationDecay::constant);
    CHECK(ga.reset_generation == 20);

    const SyntheticPoolSpec pool = pool_from_toml(toml);
    CHECK(pool.n_profiles == 12);
    CHECK(pool.days == 28);
    CHECK(pool.group_mix == std::vector<double>{0.5, 0.5});

    CHECK_THROWS_AS(TomlTable::parse("key = \n"), ConfigError);
    CHECK_THROWS_AS(TomlTable::parse("[unclosed\n"), ConfigError);
    CHECK_THROWS_AS(sweep_from_toml(TomlTable::parse("[sweep]\nmethods = [\"nope\"]\n")),
                    ConfigError);
}

TEST_CASE("cell seeds are stable and distinct", "[harness]") {
    const Date season = make_date(2020, 1, 6);
    const auto s1 = cell_seed(1, "f1", season, 4, 0.3, Method::ga);
    CHECK(s1 == cell_seed(1, "f1", season, 4, 0.3, Method::ga));
    CHECK(s1 != cell_seed(2, "f1", season, 4, 0.3, Method::ga));
    CHECK(s1 != cell_seed(1, "f2", season, 4, 0.3, Method::ga));
    CHECK(s1 != cell_seed(1, "f1", season, 5, 0.3, Method::ga));
    CHECK(s1 != cell_seed(1, "f1", season, 4, 0.4, Method::ga));
    CHECK(s1 != cell_seed(1, "f1", season, 4, 0.3, Method::monte_carlo));
}

TEST_CASE("a one-cell sweep yields one row", "[harness]") {
    const Dataset data = make_dataset(20, {6}, 501, 28);
    SweepSpec spec;
    spec.seasons = {data.pool.at(0).series.start_date};
    spec.weeks = {1};
    spec.weights = {0.0};
    spec.methods = {Method::ga};
    spec.workers = 1;

    const SweepReport report = run_sweep(spec, tiny_ga(), data);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].feeder_id == "f00");
    CHECK(report.rows[0].n_customers == 6);
    CHECK(report.skipped.empty());
    validate_assignment(report.assignments[0], data.feeders[0], data.pool);
}

TEST_CASE("ga at unit weight scores like the simple algorithm", "[harness]") {
    const Dataset data = make_dataset(24, {5}, 503, 28);
    SweepSpec spec;
    spec.seasons = {data.pool.at(0).series.start_date};
    spec.weeks = {2};
    spec.weights = {0.0, 1.0};
    spec.methods = {Method::ga, Method::simple};
    spec.workers = 2;

    GaConfig config;   // full-size defaults so w = 1 converges
    const SweepReport report = run_sweep(spec, config, data);
    REQUIRE(report.rows.size() == 3);   // ga w=0, ga w=1, simple

    double ga_w1 = -1.0, sa = -1.0;
    for (const SweepRow& row : report.rows) {
        if (row.method == Method::ga && row.weight == 1.0) ga_w1 = row.rmae;
        if (row.method == Method::simple) sa = row.rmae;
    }
    REQUIRE(ga_w1 >= 0.0);
    REQUIRE(sa >= 0.0);
    CHECK_THAT(ga_w1, WithinRel(sa, 1e-9));
}

TEST_CASE("the full grid produces 528 cells per feeder", "[harness]") {
    const Dataset data = make_dataset(16, {4}, 505, 7 * 14);
    const Date start = data.pool.at(0).series.start_date;
    SweepSpec spec;
    for (int k = 0; k < 6; ++k) spec.seasons.push_back(start + std::chrono::days{7 * k});
    spec.weeks = {1, 2, 3, 4, 5, 6, 7, 8};
    for (int i = 0; i <= 10; ++i) spec.weights.push_back(0.1 * i);
    spec.methods = {Method::ga};

    GaConfig config = tiny_ga();
    config.generations = 4;
    config.reset_generation = 2;
    const SweepReport report = run_sweep(spec, config, data);
    CHECK(report.rows.size() == 528);
    CHECK(report.skipped.empty());
}

TEST_CASE("sweep results are byte-identical across runs", "[harness]") {
    const Dataset data = make_dataset(18, {5, 7}, 507, 35);
    SweepSpec spec;
    spec.seasons = {data.pool.at(0).series.start_date,
                    data.pool.at(0).series.start_date + std::chrono::days{7}};
    spec.weeks = {1, 2};
    spec.weights = {0.0, 0.5, 1.0};
    spec.methods = {Method::ga, Method::simple, Method::monte_carlo};
    spec.mc_samples = 40;
    spec.master_seed = 99;

    const auto dir = std::filesystem::temp_directory_path() / "lvb_sweep";
    std::filesystem::create_directories(dir);

    spec.workers = 1;
    write_results_csv(dir / "a.csv", run_sweep(spec, tiny_ga(), data));
    spec.workers = 4;   // parallelism must not affect the bytes
    write_results_csv(dir / "b.csv", run_sweep(spec, tiny_ga(), data));
    const std::string a = slurp(dir / "a.csv");
    CHECK(a == slurp(dir / "b.csv"));
    CHECK(a.find("feeder_id,method,season,weeks,weight,rmae,rpde,n_customers,seed\n") == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("insufficient coverage skips the cell, not the sweep", "[harness]") {
    const Dataset data = make_dataset(14, {4}, 509, 14);
    SweepSpec spec;
    spec.seasons = {data.pool.at(0).series.start_date};
    spec.weeks = {1, 8};   // 8 weeks exceed the 14-day pool
    spec.weights = {0.0};
    spec.methods = {Method::ga};

    test::WarningCapture capture;
    const SweepReport report = run_sweep(spec, tiny_ga(), data);
    CHECK(report.rows.size() == 1);
    REQUIRE(report.skipped.size() == 1);
    CHECK(report.skipped[0].find("8w") != std::string::npos);
    REQUIRE_FALSE(capture.messages.empty());
}

TEST_CASE("emitted errors are recomputable from the emitted assignment", "[harness]") {
    const Dataset data = make_dataset(20, {6}, 511, 28);
    SweepSpec spec;
    spec.seasons = {data.pool.at(0).series.start_date};
    spec.weeks = {2};
    spec.weights = {0.3};
    spec.methods = {Method::ga};

    const SweepReport report = run_sweep(spec, tiny_ga(), data);
    REQUIRE(report.rows.size() == 1);

    // Round-trip the assignment through its JSON file form.
    const auto dir = std::filesystem::temp_directory_path() / "lvb_audit";
    write_assignments_json(dir, report);
    const auto file = dir / assignment_file_name(report.rows[0]);
    REQUIRE(std::filesystem::exists(file));
    std::ifstream in(file);
    const auto loaded = assignment_from_json(nlohmann::json::parse(in));

    const Feeder& feeder = data.feeders[0];
    const FeederErrorReport again = evaluate_assignment(
        loaded, feeder, data.pool, {spec.seasons[0], spec.weeks[0]});
    CHECK(again.rmae == report.rows[0].rmae);
    CHECK(again.rpde == report.rows[0].rpde);
    std::filesystem::remove_all(dir);
}

TEST_CASE("surface and scatter writers aggregate the rows", "[harness]") {
    const Dataset data = make_dataset(18, {4, 6}, 513, 28);
    SweepSpec spec;
    spec.seasons = {data.pool.at(0).series.start_date};
    spec.weeks = {1, 2};
    spec.weights = {0.0, 1.0};
    spec.methods = {Method::ga};

    const SweepReport report = run_sweep(spec, tiny_ga(), data);
    const auto dir = std::filesystem::temp_directory_path() / "lvb_writers";
    write_error_surface_csv(dir / "surface.csv", report);
    write_size_scatter_csv(dir / "scatter.csv", report);

    const std::string surface = slurp(dir / "surface.csv");
    CHECK(surface.find("method,season,weeks,weight,avg_rmae,avg_rpde,n_feeders") == 0);
    // 1 season x 2 weeks x 2 weights = 4 aggregate cells plus header.
    CHECK(std::count(surface.begin(), surface.end(), '\n') == 5);
    const std::string scatter = slurp(dir / "scatter.csv");
    // One scatter point per sweep row.
    CHECK(std::count(scatter.begin(), scatter.end(), '\n') ==
          static_cast<long>(report.rows.size()) + 1);

    write_results_json(dir / "results.json", report);
    std::ifstream json_in(dir / "results.json");
    const auto parsed = nlohmann::json::parse(json_in);
    REQUIRE(parsed.at("results").size() == report.rows.size());
    CHECK(parsed.at("results")[0].at("rmae").get<double>() == report.rows[0].rmae);
    std::filesystem::remove_all(dir);
}

TEST_CASE("monte carlo comparison rows", "[harness]") {
    const Dataset data = make_dataset(24, {5, 6, 7}, 515, 28);
    const TrainingWindow train{data.pool.at(0).series.start_date, 2};
    GaConfig config = tiny_ga();
    config.weight = 0.0;

    const auto rows = run_mc_comparison(data, train, config, 60, 1234, 2);
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) {
        CHECK(row.diff == row.rmae_mc - row.rmae_ga);
        CHECK(row.ga_sample_rank >= 0.0);
        CHECK(row.ga_sample_rank <= 1.0);
        CHECK(row.rmae_ga >= 0.0);
        CHECK(row.rmae_mc >= 0.0);
    }

    const auto dir = std::filesystem::temp_directory_path() / "lvb_mc";
    write_mc_comparison_csv(dir / "mc.csv", rows);
    CHECK(slurp(dir / "mc.csv")
              .find("feeder_id,n_customers,rmae_ga,rmae_mc,diff,ga_sample_rank") == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("single profile per group collapses the comparison", "[harness]") {
    SyntheticPoolSpec spec;
    spec.n_profiles = 2;
    spec.days = 14;
    spec.group_mix = {0.5, 0.5};
    spec.group_level_median = {8.0, 12.0};
    spec.seed = 41;
    Dataset data;
    data.pool = ProfilePool(generate_pool(spec));
    PseudoFeeder pseudo =
        make_type1(random_template_feeder("f", 5, data.pool, 42), data.pool, 43);
    data.feeders.push_back(std::move(pseudo.feeder));

    GaConfig config = tiny_ga();
    const auto rows =
        run_mc_comparison(data, {spec.start_date, 1}, config, 20, 7, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].diff == 0.0);
}

TEST_CASE("phase mode equals feeder mode for the simple algorithm", "[harness]") {
    const Dataset data = make_dataset(21, {9}, 517, 28);
    const Feeder& feeder = data.feeders[0];
    const TrainingWindow train{data.pool.at(0).series.start_date, 1};

    const auto feeder_level = simple_buddy(feeder, data.pool, train);
    const auto phase_mode =
        run_phase_mode(feeder, data.phase_series.at(feeder.feeder_id), data.pool, train,
                       Method::simple, tiny_ga(), 10, 1);
    CHECK(phase_mode.combined.profile_of == feeder_level.profile_of);
    CHECK_FALSE(phase_mode.randomized_phases);
    CHECK(phase_mode.per_phase.size() == 3);
}

TEST_CASE("single-phase feeders reduce to a feeder-level run", "[harness]") {
    Dataset data = make_dataset(18, {6}, 519, 28);
    Feeder& feeder = data.feeders[0];
    for (Customer& c : feeder.customers) c.phase = 2;
    const TrainingWindow train{data.pool.at(0).series.start_date, 1};
    std::map<int, HalfHourlySeries> phases = {{2, *feeder.substation_series}};

    const auto phase_mode = run_phase_mode(feeder, phases, data.pool, train,
                                           Method::simple, tiny_ga(), 10, 5);
    CHECK(phase_mode.combined.profile_of ==
          simple_buddy(feeder, data.pool, train).profile_of);
    CHECK(phase_mode.per_phase.size() == 1);
}

TEST_CASE("missing phase labels are allocated with a warning", "[harness]") {
    Dataset data = make_dataset(18, {6}, 521, 28);
    Feeder& feeder = data.feeders[0];
    feeder.customers[2].phase.reset();
    const TrainingWindow train{data.pool.at(0).series.start_date, 1};

    test::WarningCapture capture;
    const auto result = run_phase_mode(feeder, data.phase_series.at(feeder.feeder_id),
                                       data.pool, train, Method::simple, tiny_ga(), 10, 5);
    CHECK(result.randomized_phases);
    REQUIRE_FALSE(capture.messages.empty());
    CHECK(capture.messages[0].find("phase labels") != std::string::npos);
    CHECK(result.combined.profile_of.size() == feeder.customers.size());
}

TEST_CASE("phase series are required for substation-driven methods", "[harness]") {
    const Dataset data = make_dataset(18, {6}, 523, 28);
    const Feeder& feeder = data.feeders[0];
    const TrainingWindow train{data.pool.at(0).series.start_date, 1};
    GaConfig config = tiny_ga();
    config.weight = 0.0;
    CHECK_THROWS_AS(
        run_phase_mode(feeder, {}, data.pool, train, Method::ga, config, 10, 5),
        ConfigError);
    // The simple algorithm never needs them.
    CHECK_NOTHROW(
        run_phase_mode(feeder, {}, data.pool, train, Method::simple, config, 10, 5));
}

TEST_CASE("exact per-phase series admit a zero-fitness phase buddy", "[harness]") {
    // Small search space: the GA should reconstruct each phase exactly.
    SyntheticPoolSpec spec;
    spec.n_profiles = 6;
    spec.days = 14;
    spec.group_mix = {1.0};
    spec.group_level_median = {9.0};
    spec.seed = 61;
    Dataset data;
    data.pool = ProfilePool(generate_pool(spec));
    Feeder tmpl = random_template_feeder("f", 3, data.pool, 62);
    for (std::size_t j = 0; j < tmpl.customers.size(); ++j)
        tmpl.customers[j].phase = 1 + static_cast<int>(j);
    PseudoFeeder pseudo = make_type1(tmpl, data.pool, 63);
    const auto phases = phase_aggregate_series(pseudo, data.pool);

    GaConfig config;
    config.weight = 0.0;
    const TrainingWindow train{spec.start_date, 1};
    const auto result = run_phase_mode(pseudo.feeder, phases, data.pool, train,
                                       Method::ga, config, 10, 64);

    // Reconstruction is exact, so the combined aggregate matches the feeder
    // series and the feeder-level error vanishes.
    const auto report = evaluate_assignment(result.combined, pseudo.feeder, data.pool,
                                            train);
    CHECK(report.rmae == 0.0);
    CHECK(recovery_rate(pseudo, result.combined) == 1.0);
}

TEST_CASE("phase comparison report over a dataset", "[harness]") {
    const Dataset data = make_dataset(24, {6, 8}, 525, 28);
    const TrainingWindow train{data.pool.at(0).series.start_date, 1};
    const auto report = run_phase_compare(data, train, std::nullopt, Method::simple,
                                          tiny_ga(), 10, 99, 2);
    REQUIRE(report.feeders.size() == 2);
    REQUIRE(report.phases.size() == 6);
    CHECK_FALSE(report.buckets.empty());
    for (const auto& row : report.feeders) {
        // The simple algorithm gives identical assignments either way.
        CHECK_THAT(row.phase_rmae, WithinRel(row.feeder_rmae, 1e-12));
    }

    const auto dir = std::filesystem::temp_directory_path() / "lvb_phase";
    write_phase_compare_csv(dir, report);
    CHECK(std::filesystem::exists(dir / "phase_compare_feeders.csv"));
    CHECK(std::filesystem::exists(dir / "phase_compare_phases.csv"));
    CHECK(std::filesystem::exists(dir / "phase_compare_buckets.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("size-matched buckets average n and n+1", "[harness]") {
    const std::vector<std::pair<int, double>> feeders = {{4, 0.2}, {5, 0.4}, {7, 0.1}};
    const std::vector<std::pair<int, double>> phases = {{4, 0.6}, {6, 0.2}};
    const auto buckets = size_matched_buckets(feeders, phases);
    REQUIRE_FALSE(buckets.empty());
    CHECK(buckets[0].n == 4);
    CHECK_THAT(buckets[0].feeder_avg_rmae, WithinRel(0.3, 1e-12));   // sizes 4 and 5
    CHECK(buckets[0].feeder_count == 2);
    CHECK_THAT(buckets[0].phase_avg_rmae, WithinRel(0.6, 1e-12));    // size 4 only
    CHECK(buckets[0].phase_count == 1);
}

TEST_CASE("power-law json carries the band", "[harness]") {
    std::vector<std::pair<double, double>> points;
    for (double x : {4.0, 8.0, 16.0, 32.0}) points.push_back({x, 3.0 / x});
    const auto fit = fit_power_law(points);
    const auto j = power_law_to_json(fit, points);
    CHECK(j.at("a").get<double>() == Catch::Approx(3.0));
    CHECK(j.at("b").get<double>() == Catch::Approx(1.0));
    REQUIRE(j.at("band").size() == 4);
    CHECK(j.at("band")[0].contains("lower"));
    CHECK(j.at("band")[0].contains("upper"));
}

TEST_CASE("dataset loading links profiles, registry and substations", "[harness]") {
    // Build synthetic data, serialize it through the CSV formats, and load
    // it back as a full dataset.
    SyntheticPoolSpec spec;
    spec.n_profiles = 14;
    spec.days = 14;
    spec.seed = 71;
    const auto profiles = generate_pool(spec);
    ProfilePool pool(profiles);
    PseudoFeeder pseudo = make_type1(random_template_feeder("f1", 5, pool, 72), pool, 73);

    const auto dir = std::filesystem::temp_directory_path() / "lvb_dataset";
    std::filesystem::create_directories(dir);
    save_profiles_csv(dir / "profiles.csv", profiles);

    std::vector<RegistryRow> rows;
    for (const auto& p : profiles) {
        RegistryRow r;
        r.customer_id = "mon-" + p.profile_id;
        r.attrs = representative_attributes(p.group);
        r.mean_daily_kwh = p.mean_daily_demand;
        r.monitored_profile_id = p.profile_id;
        rows.push_back(r);
    }
    for (const Customer& c : pseudo.feeder.customers) {
        RegistryRow r;
        r.customer_id = c.customer_id;
        r.feeder_id = "f1";
        r.attrs = representative_attributes(c.group);
        r.mean_daily_kwh = c.mean_daily_demand;
        rows.push_back(r);
    }
    save_registry_csv(dir / "customers.csv", rows);

    SubstationData subs;
    subs.feeder_series["f1"] = *pseudo.feeder.substation_series;
    save_substations_csv(dir / "substations.csv", subs);

    const Dataset data = load_dataset(dir / "profiles.csv", dir / "customers.csv",
                                      dir / "substations.csv");
    CHECK(data.pool.size() == profiles.size());
    REQUIRE(data.feeders.size() == 1);
    const Feeder& feeder = data.feeders[0];
    CHECK(feeder.feeder_id == "f1");
    CHECK(feeder.customers.size() == 5);
    REQUIRE(feeder.substation_series.has_value());
    CHECK(feeder.substation_series->values == pseudo.feeder.substation_series->values);

    // Monitored registry entries keep their profile-derived demand.
    bool found_monitored = false;
    for (const Feeder& f : data.feeders)
        for (const Customer& c : f.customers) found_monitored |= c.monitored_profile.has_value();
    CHECK_FALSE(found_monitored);   // pseudo customers are unmonitored

    std::filesystem::remove_all(dir);
}

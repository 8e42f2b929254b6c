// buddy: model unmonitored low-voltage customers by assigning them real
// monitored half-hourly profiles, optimized against substation readings.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lvbuddy/lvbuddy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lvbuddy;

namespace {

struct DataPaths {
    std::string profiles;
    std::string customers;
    std::string substations;
    std::string group_map;

    void attach(CLI::App* cmd) {
        cmd->add_option("--profiles", profiles, "Monitored-profile CSV")->required();
        cmd->add_option("--customers", customers, "Customer registry CSV")->required();
        cmd->add_option("--substations", substations, "Substation readings CSV")->required();
        cmd->add_option("--group-map", group_map,
                        "Override group mapping CSV (class,band,pv,group)");
    }

    Dataset load() const {
        const GroupMap map =
            group_map.empty() ? GroupMap::uk_default() : GroupMap::from_csv(group_map);
        return load_dataset(profiles, customers, substations, map);
    }
};

struct GaFlags {
    std::optional<int> population, elite, generations, reset;
    std::optional<double> mutation_rate, fitness_p, weight;
    std::string decay;

    void attach(CLI::App* cmd, bool with_weight) {
        cmd->add_option("--ga-population", population, "GA population size G");
        cmd->add_option("--ga-elite", elite, "GA elite count G'");
        cmd->add_option("--ga-generations", generations, "GA generations");
        cmd->add_option("--ga-reset", reset, "Generation at which the population resets");
        cmd->add_option("--ga-mutation-rate", mutation_rate, "Initial mutation rate");
        cmd->add_option("--ga-mutation-decay", decay, "Mutation decay: linear|constant");
        cmd->add_option("--ga-fitness-p", fitness_p, "Exponent on the feeder mismatch term");
        if (with_weight)
            cmd->add_option("--weight", weight, "Fitness weight w in [0,1]");
    }

    GaConfig apply(GaConfig config) const {
        if (population) config.population = *population;
        if (elite) config.elite = *elite;
        if (generations) config.generations = *generations;
        if (reset) config.reset_generation = *reset;
        if (mutation_rate) config.initial_mutation_rate = *mutation_rate;
        if (fitness_p) config.fitness_p = *fitness_p;
        if (weight) config.weight = *weight;
        if (!decay.empty()) {
            if (decay == "linear")
                config.mutation_decay = MutationDecay::linear;
            else if (decay == "constant")
                config.mutation_decay = MutationDecay::constant;
            else
                throw ConfigError("--ga-mutation-decay must be linear or constant");
        }
        return config;
    }
};

TomlTable load_config(const std::string& path) {
    if (path.empty()) return TomlTable::parse("", "<empty>");
    return TomlTable::parse_file(path);
}

Method parse_method_flag(const std::string& name) {
    auto m = parse_method(name);
    if (!m) throw ConfigError("unknown method '" + name + "'");
    return *m;
}

// ---------------------------------------------------------------------------
// buddy run

struct RunArgs {
    std::string config;
    DataPaths data;
    std::string out = "results";
    int workers = 0;
};

int cmd_run(const RunArgs& args) {
    const TomlTable toml = load_config(args.config);
    SweepSpec spec = sweep_from_toml(toml);
    if (args.workers > 0) spec.workers = args.workers;
    const GaConfig ga = ga_from_toml(toml);

    const Dataset dataset = args.data.load();
    std::fprintf(stderr, "loaded %zu profiles, %zu feeders\n", dataset.pool.size(),
                 dataset.feeders.size());

    const SweepReport report = run_sweep(spec, ga, dataset);
    const fs::path out(args.out);
    write_results_csv(out / "results.csv", report);
    write_results_json(out / "results.json", report);
    write_error_surface_csv(out / "surface.csv", report);
    write_size_scatter_csv(out / "scatter.csv", report);
    write_assignments_json(out / "assignments", report);
    if (!report.skipped.empty()) {
        auto skipped = open_output(out / "skipped.txt");
        for (const auto& line : report.skipped) skipped << line << '\n';
    }
    std::fprintf(stderr, "wrote %zu rows to %s (%zu cells skipped)\n", report.rows.size(),
                 (out / "results.csv").c_str(), report.skipped.size());
    return report.rows.empty() ? 1 : 0;
}

// ---------------------------------------------------------------------------
// buddy pseudo gen

struct PseudoGenArgs {
    std::string config;
    std::string out = "pseudo-data";
    int n_profiles = 60;
    int days = 112;
    int n_feeders = 10;
    int min_customers = 10;
    int max_customers = 40;
    std::uint64_t seed = 1;
    bool phases = false;
    std::string split = "none";   // none | type2
};

int cmd_pseudo_gen(const PseudoGenArgs& args) {
    SyntheticPoolSpec spec = pool_from_toml(load_config(args.config));
    spec.n_profiles = args.n_profiles;
    spec.days = args.days;
    spec.seed = args.seed;
    if (args.min_customers < 1 || args.max_customers < args.min_customers)
        throw ConfigError("need 1 <= min-customers <= max-customers");
    if (args.split != "none" && args.split != "type2")
        throw ConfigError("--split must be none or type2");

    const std::vector<MonitoredProfile> pool = generate_pool(spec);

    // The buddy pool is what the algorithms see; the populate pool is what
    // feeders are built from. They coincide unless a type-2 split is asked.
    std::vector<MonitoredProfile> populate = pool, buddy = pool;
    if (args.split == "type2")
        std::tie(populate, buddy) = make_type2_split(ProfilePool(pool));
    const ProfilePool populate_pool(populate);

    const fs::path out(args.out);
    fs::create_directories(out);
    save_profiles_csv(out / "profiles.csv", buddy);
    if (args.split == "type2") save_profiles_csv(out / "populate.csv", populate);

    std::vector<RegistryRow> registry;
    for (const auto& p : buddy) {
        RegistryRow r;
        r.customer_id = "mon-" + p.profile_id;
        r.attrs = representative_attributes(p.group);
        r.mean_daily_kwh = p.mean_daily_demand;
        r.monitored_profile_id = p.profile_id;
        registry.push_back(std::move(r));
    }

    json truth;
    truth["split"] = args.split;
    if (args.split == "type2") {
        truth["populate_csv"] = "populate.csv";
        json groups = json::object();
        for (const auto& p : populate) groups[p.profile_id] = p.group;
        truth["populate_groups"] = std::move(groups);
    }
    json feeders_json = json::object();

    SubstationData substations;
    Rng sizes(derive_seed(args.seed, 0xfeed));
    for (int k = 0; k < args.n_feeders; ++k) {
        char id[16];
        std::snprintf(id, sizeof id, "pf%03d", k);
        const int span = args.max_customers - args.min_customers + 1;
        const int n_customers =
            args.min_customers + static_cast<int>(sizes.uniform_index(span));
        Feeder tmpl = random_template_feeder(id, n_customers, populate_pool,
                                             derive_seed(args.seed, 2 * k));
        if (args.phases)
            for (std::size_t j = 0; j < tmpl.customers.size(); ++j)
                tmpl.customers[j].phase = 1 + static_cast<int>(j % 3);
        const PseudoFeeder pseudo =
            make_type1(tmpl, populate_pool, derive_seed(args.seed, 2 * k + 1));

        for (const Customer& c : pseudo.feeder.customers) {
            RegistryRow r;
            r.customer_id = c.customer_id;
            r.feeder_id = id;
            r.phase = c.phase;
            r.attrs = representative_attributes(c.group);
            r.mean_daily_kwh = c.mean_daily_demand;
            registry.push_back(std::move(r));
        }
        substations.feeder_series[id] = *pseudo.feeder.substation_series;
        if (args.phases)
            substations.phase_series[id] = phase_aggregate_series(pseudo, populate_pool);
        feeders_json[id] = pseudo.generating;
    }
    truth["feeders"] = std::move(feeders_json);

    save_registry_csv(out / "customers.csv", registry);
    save_substations_csv(out / "substations.csv", substations);
    {
        auto truth_out = open_output(out / "truth.json");
        truth_out << truth.dump(2) << '\n';
    }
    std::fprintf(stderr, "wrote %d pseudo-feeders over %d profiles to %s\n", args.n_feeders,
                 args.n_profiles, out.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// buddy pseudo validate

struct PseudoValidateArgs {
    std::string config;
    DataPaths data;
    std::string truth;
    std::string out = "validation";
    std::string season;
    std::vector<int> weeks = {1};
    std::vector<double> weights = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::uint64_t seed = 1;
    int workers = 0;
    GaFlags ga_flags;
};

int cmd_pseudo_validate(const PseudoValidateArgs& args) {
    const TomlTable toml = load_config(args.config);
    const GaConfig ga_base = args.ga_flags.apply(ga_from_toml(toml));
    const Dataset dataset = args.data.load();

    std::ifstream truth_in(args.truth);
    if (!truth_in) throw ConfigError("cannot open truth file " + args.truth);
    const json truth = json::parse(truth_in);
    const bool type2 = truth.at("split").get<std::string>() == "type2";

    // Rebuild the generating maps.
    std::map<std::string, PseudoFeeder> pseudos;
    for (const auto& [feeder_id, mapping] : truth.at("feeders").items()) {
        const Feeder* feeder = dataset.find_feeder(feeder_id);
        if (!feeder) throw ConfigError("truth names unknown feeder " + feeder_id);
        PseudoFeeder pseudo;
        pseudo.feeder = *feeder;
        for (const auto& [customer, profile] : mapping.items())
            pseudo.generating[customer] = profile.get<std::string>();
        pseudos[feeder_id] = std::move(pseudo);
    }

    // For type-2 runs the true profiles live in a separate populate pool.
    ProfilePool populate_pool;
    if (type2) {
        const fs::path populate_path =
            fs::path(args.truth).parent_path() /
            truth.at("populate_csv").get<std::string>();
        const auto& groups = truth.at("populate_groups");
        populate_pool = ProfilePool(load_profiles(
            populate_path, [&](const std::string& id) -> std::optional<GroupId> {
                if (!groups.contains(id)) return std::nullopt;
                return groups.at(id).get<GroupId>();
            }));
    }

    const Date season = args.season.empty()
                            ? dataset.pool.at(0).series.start_date
                            : parse_date(args.season);

    struct Task {
        const PseudoFeeder* pseudo;
        int weeks;
        double weight;
    };
    std::vector<Task> tasks;
    for (const auto& [id, pseudo] : pseudos)
        for (int weeks : args.weeks)
            for (double weight : args.weights) tasks.push_back({&pseudo, weeks, weight});

    struct Outcome {
        std::string feeder_id;
        int n_customers;
        int weeks;
        double weight;
        double recovery;
        double feeder_rmae;
        double avg_customer_rmae;
        std::uint64_t seed;
    };
    std::vector<Outcome> outcomes(tasks.size());

    parallel_for(tasks.size(), worker_count(args.workers), [&](std::size_t i) {
        const Task& task = tasks[i];
        const Feeder& feeder = task.pseudo->feeder;
        const TrainingWindow train{season, task.weeks};
        GaConfig config = ga_base;
        config.weight = task.weight;
        config.seed = cell_seed(args.seed, feeder.feeder_id, season, task.weeks,
                                task.weight, Method::ga);
        const EvolveResult result = evolve(feeder, dataset.pool, train, config);

        Outcome& out = outcomes[i];
        out.feeder_id = feeder.feeder_id;
        out.n_customers = static_cast<int>(feeder.customers.size());
        out.weeks = task.weeks;
        out.weight = task.weight;
        out.seed = config.seed;
        out.recovery = recovery_rate(*task.pseudo, result.assignment);
        out.feeder_rmae =
            evaluate_assignment(result.assignment, feeder, dataset.pool, train).rmae;
        if (type2) {
            const auto errors = per_customer_errors(*task.pseudo, result.assignment,
                                                    populate_pool, dataset.pool, train);
            double sum = 0.0;
            for (double e : errors) sum += e;
            out.avg_customer_rmae = errors.empty() ? 0.0 : sum / errors.size();
        }
    });

    const fs::path out(args.out);
    auto csv = open_output(out / (type2 ? "individual_errors.csv" : "recovery.csv"));
    if (type2) {
        csv << "feeder_id,n_customers,weeks,weight,feeder_rmae,avg_customer_rmae,seed\n";
        for (const auto& o : outcomes)
            csv << o.feeder_id << ',' << o.n_customers << ',' << o.weeks << ','
                << format_double(o.weight) << ',' << format_double(o.feeder_rmae) << ','
                << format_double(o.avg_customer_rmae) << ',' << o.seed << '\n';
    } else {
        csv << "feeder_id,n_customers,weeks,weight,recovery,feeder_rmae,seed\n";
        for (const auto& o : outcomes)
            csv << o.feeder_id << ',' << o.n_customers << ',' << o.weeks << ','
                << format_double(o.weight) << ',' << format_double(o.recovery) << ','
                << format_double(o.feeder_rmae) << ',' << o.seed << '\n';
    }

    if (type2) {
        double total = 0.0;
        for (const auto& o : outcomes) total += o.avg_customer_rmae;
        std::fprintf(stderr, "%zu validation cells; mean per-customer RMAE %.6g\n",
                     outcomes.size(), outcomes.empty() ? 0.0 : total / outcomes.size());
    } else {
        double total = 0.0;
        for (const auto& o : outcomes) total += o.recovery;
        std::fprintf(stderr, "%zu validation cells; mean recovery %.3f\n", outcomes.size(),
                     outcomes.empty() ? 0.0 : total / outcomes.size());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// buddy mc-compare

struct McCompareArgs {
    std::string config;
    DataPaths data;
    std::string season;
    int weeks = 8;
    int samples = 1000;
    std::uint64_t seed = 1;
    std::string out = "mc-compare";
    int workers = 0;
    GaFlags ga_flags;
};

int cmd_mc_compare(const McCompareArgs& args) {
    const TomlTable toml = load_config(args.config);
    GaConfig ga = args.ga_flags.apply(ga_from_toml(toml));
    const Dataset dataset = args.data.load();
    const Date season = args.season.empty() ? dataset.pool.at(0).series.start_date
                                            : parse_date(args.season);

    const auto rows = run_mc_comparison(dataset, {season, args.weeks}, ga, args.samples,
                                        args.seed, args.workers);
    write_mc_comparison_csv(fs::path(args.out) / "mc_compare.csv", rows);

    int ga_wins = 0;
    double sum_ga = 0.0, sum_mc = 0.0;
    for (const auto& r : rows) {
        ga_wins += r.diff >= 0.0;
        sum_ga += r.rmae_ga;
        sum_mc += r.rmae_mc;
    }
    if (!rows.empty())
        std::fprintf(stderr,
                     "GA at least as good on %d/%zu feeders; avg RMAE ga %.4f mc %.4f\n",
                     ga_wins, rows.size(), sum_ga / rows.size(), sum_mc / rows.size());
    return 0;
}

// ---------------------------------------------------------------------------
// buddy phase-compare

struct PhaseCompareArgs {
    std::string config;
    DataPaths data;
    std::string season;
    int weeks = 8;
    std::string method = "ga";
    int samples = 1000;
    std::uint64_t seed = 1;
    std::string out = "phase-compare";
    int workers = 0;
    GaFlags ga_flags;
};

int cmd_phase_compare(const PhaseCompareArgs& args) {
    const TomlTable toml = load_config(args.config);
    GaConfig ga = args.ga_flags.apply(ga_from_toml(toml));
    const Dataset dataset = args.data.load();
    const Date season = args.season.empty() ? dataset.pool.at(0).series.start_date
                                            : parse_date(args.season);

    const auto report =
        run_phase_compare(dataset, {season, args.weeks}, std::nullopt,
                          parse_method_flag(args.method), ga, args.samples, args.seed,
                          args.workers);
    write_phase_compare_csv(args.out, report);

    double feeder_sum = 0.0, phase_sum = 0.0;
    for (const auto& r : report.feeders) {
        feeder_sum += r.feeder_rmae;
        phase_sum += r.phase_rmae;
    }
    if (!report.feeders.empty())
        std::fprintf(stderr, "avg RMAE: feeder-level %.4f, phase-level %.4f (%zu feeders)\n",
                     feeder_sum / report.feeders.size(), phase_sum / report.feeders.size(),
                     report.feeders.size());
    return 0;
}

// ---------------------------------------------------------------------------
// buddy fit-powerlaw

struct FitArgs {
    std::string input;
    std::string x_column = "n_customers";
    std::string y_column = "rmae";
    std::vector<std::string> where;
    std::string out = "powerlaw.json";
};

int cmd_fit_powerlaw(const FitArgs& args) {
    CsvReader reader(args.input);
    auto header = reader.next();
    if (!header) throw SchemaError(args.input + ": empty file");
    auto column = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header->fields.size(); ++i)
            if (header->fields[i] == name) return i;
        throw SchemaError(args.input + ": no column '" + name + "'");
    };
    const std::size_t xi = column(args.x_column);
    const std::size_t yi = column(args.y_column);

    std::vector<std::pair<std::size_t, std::string>> filters;
    for (const std::string& clause : args.where) {
        const auto eq = clause.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--where expects column=value, got '" + clause + "'");
        filters.push_back({column(clause.substr(0, eq)), clause.substr(eq + 1)});
    }

    std::vector<std::pair<double, double>> points;
    while (auto row = reader.next()) {
        bool keep = true;
        for (const auto& [col, value] : filters)
            keep = keep && row->fields.at(col) == value;
        if (!keep) continue;
        points.push_back({reader.parse_double(*row, xi), reader.parse_double(*row, yi)});
    }

    const PowerLawFit fit = fit_power_law(points);
    auto out = open_output(args.out);
    out << power_law_to_json(fit, points).dump(2) << '\n';
    std::fprintf(stderr, "fit %zu points: a=%.6g b=%.6g\n", points.size(), fit.a, fit.b);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Load-profile buddying for low-voltage feeders"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run a (season, weeks, weight) sweep");
    run->add_option("--config", run_args.config, "Sweep/GA TOML config")->required();
    run_args.data.attach(run);
    run->add_option("--out", run_args.out, "Output directory");
    run->add_option("--workers", run_args.workers, "Worker threads (or $BUDDY_WORKERS)");

    auto* pseudo = app.add_subcommand("pseudo", "Synthetic pools and pseudo-feeders");
    pseudo->require_subcommand(1);

    PseudoGenArgs gen_args;
    auto* gen = pseudo->add_subcommand("gen", "Generate a synthetic validation world");
    gen->add_option("--config", gen_args.config, "Pool TOML config ([pool] section)");
    gen->add_option("--out", gen_args.out, "Output directory");
    gen->add_option("--profiles", gen_args.n_profiles, "Pool size");
    gen->add_option("--days", gen_args.days, "Days of half-hourly data");
    gen->add_option("--feeders", gen_args.n_feeders, "Number of pseudo-feeders");
    gen->add_option("--min-customers", gen_args.min_customers, "Smallest feeder");
    gen->add_option("--max-customers", gen_args.max_customers, "Largest feeder");
    gen->add_option("--seed", gen_args.seed, "Master seed");
    gen->add_flag("--phases", gen_args.phases, "Label customers with phases 1-3");
    gen->add_option("--split", gen_args.split,
                    "none: buddy pool = populate pool (type 1); type2: disjoint halves");

    PseudoValidateArgs val_args;
    auto* validate = pseudo->add_subcommand("validate", "Score buddying against the truth");
    validate->add_option("--config", val_args.config, "GA TOML config");
    val_args.data.attach(validate);
    validate->add_option("--truth", val_args.truth, "truth.json from pseudo gen")->required();
    validate->add_option("--out", val_args.out, "Output directory");
    validate->add_option("--season", val_args.season, "Training start date (YYYY-MM-DD)");
    validate->add_option("--weeks", val_args.weeks, "Training lengths in weeks");
    validate->add_option("--weights", val_args.weights, "Fitness weights");
    validate->add_option("--seed", val_args.seed, "Master seed");
    validate->add_option("--workers", val_args.workers, "Worker threads");
    val_args.ga_flags.attach(validate, false);

    McCompareArgs mc_args;
    auto* mc = app.add_subcommand("mc-compare", "GA vs best-of-N random assignments");
    mc->add_option("--config", mc_args.config, "GA TOML config");
    mc_args.data.attach(mc);
    mc->add_option("--season", mc_args.season, "Training start date (YYYY-MM-DD)");
    mc->add_option("--weeks", mc_args.weeks, "Training length in weeks");
    mc->add_option("--samples", mc_args.samples, "Random samples per feeder");
    mc->add_option("--seed", mc_args.seed, "Master seed");
    mc->add_option("--out", mc_args.out, "Output directory");
    mc->add_option("--workers", mc_args.workers, "Worker threads");
    mc_args.ga_flags.attach(mc, true);

    PhaseCompareArgs phase_args;
    auto* phase = app.add_subcommand("phase-compare", "Feeder-level vs phase-level buddying");
    phase->add_option("--config", phase_args.config, "GA TOML config");
    phase_args.data.attach(phase);
    phase->add_option("--season", phase_args.season, "Training start date (YYYY-MM-DD)");
    phase->add_option("--weeks", phase_args.weeks, "Training length in weeks");
    phase->add_option("--method", phase_args.method, "simple | ga | monte-carlo");
    phase->add_option("--samples", phase_args.samples, "Monte Carlo samples");
    phase->add_option("--seed", phase_args.seed, "Master seed");
    phase->add_option("--out", phase_args.out, "Output directory");
    phase->add_option("--workers", phase_args.workers, "Worker threads");
    phase_args.ga_flags.attach(phase, true);

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit-powerlaw", "Fit a*x^-b to columns of a CSV");
    fit->add_option("--input", fit_args.input, "Input CSV (e.g. results.csv)")->required();
    fit->add_option("--x-column", fit_args.x_column, "X column name");
    fit->add_option("--y-column", fit_args.y_column, "Y column name");
    fit->add_option("--where", fit_args.where, "Row filter column=value (repeatable)");
    fit->add_option("--out", fit_args.out, "Output JSON path");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(run_args);
        if (gen->parsed()) return cmd_pseudo_gen(gen_args);
        if (validate->parsed()) return cmd_pseudo_validate(val_args);
        if (mc->parsed()) return cmd_mc_compare(mc_args);
        if (phase->parsed()) return cmd_phase_compare(phase_args);
        if (fit->parsed()) return cmd_fit_powerlaw(fit_args);
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);   // --help and friends
        json err;
        err["error"] = {{"type", "usage"}, {"message", e.what()}};
        std::cerr << err.dump() << '\n';
        return e.get_exit_code();
    } catch (const Error& e) {
        json err;
        err["error"] = {{"type", e.tag()}, {"message", e.what()}};
        std::cerr << err.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        json err;
        err["error"] = {{"type", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << '\n';
        return 1;
    }
}

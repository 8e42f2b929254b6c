#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "lvbuddy/ga.hpp"
#include "lvbuddy/ingestion.hpp"
#include "lvbuddy/metrics.hpp"
#include "lvbuddy/monte_carlo.hpp"
#include "lvbuddy/parallel.hpp"
#include "lvbuddy/pseudo.hpp"
#include "lvbuddy/rng.hpp"
#include "lvbuddy/simple_buddy.hpp"
#include "lvbuddy/toml.hpp"

namespace lvbuddy {

// ---------------------------------------------------------------------------
// Dataset assembly

struct Dataset {
    ProfilePool pool;
    std::vector<Feeder> feeders;    // feeder_id order
    std::map<std::string, std::map<int, HalfHourlySeries>> phase_series;

    const Feeder* find_feeder(const std::string& id) const {
        for (const auto& f : feeders)
            if (f.feeder_id == id) return &f;
        return nullptr;
    }
};

// Loads and cross-links the three CSVs. Profile groups come from the
// registry rows that reference them; monitored customers get their demand
// pinned to their profile's derived mean.
inline Dataset load_dataset(const std::filesystem::path& profiles_csv,
                            const std::filesystem::path& customers_csv,
                            const std::filesystem::path& substations_csv,
                            const GroupMap& group_map = GroupMap::uk_default(),
                            const CleaningOptions& cleaning = {}) {
    const std::vector<RegistryRow> registry = load_customer_registry(customers_csv);

    std::map<std::string, GroupId> profile_groups;
    for (const RegistryRow& r : registry) {
        if (!r.monitored_profile_id) continue;
        const GroupId g = group_map.group_of(r.attrs);
        auto [it, inserted] = profile_groups.emplace(*r.monitored_profile_id, g);
        if (!inserted && it->second != g)
            warn("registry: profile " + *r.monitored_profile_id +
                 " referenced with conflicting groups; keeping group " +
                 std::to_string(it->second));
    }

    Dataset data;
    data.pool = ProfilePool(load_profiles(
        profiles_csv,
        [&](const std::string& id) -> std::optional<GroupId> {
            auto it = profile_groups.find(id);
            if (it == profile_groups.end()) return std::nullopt;
            return it->second;
        },
        cleaning));

    SubstationData substations = load_substations(substations_csv, cleaning);

    std::map<std::string, Feeder> feeders;
    for (const RegistryRow& r : registry) {
        if (r.feeder_id.empty()) continue;   // pool-only entry
        Customer c;
        c.customer_id = r.customer_id;
        c.group = group_map.group_of(r.attrs);
        c.mean_daily_demand = r.mean_daily_kwh;
        c.phase = r.phase;
        if (r.monitored_profile_id) {
            if (auto idx = data.pool.index_of(*r.monitored_profile_id)) {
                c.monitored_profile = *r.monitored_profile_id;
                c.mean_daily_demand = data.pool.at(*idx).mean_daily_demand;
            } else {
                warn("registry: customer " + r.customer_id + " references profile " +
                     *r.monitored_profile_id + " which is not in the pool; treated as "
                     "unmonitored");
            }
        }
        auto& feeder = feeders[r.feeder_id];
        feeder.feeder_id = r.feeder_id;
        feeder.customers.push_back(std::move(c));
    }
    for (auto& [id, feeder] : feeders) {
        auto it = substations.feeder_series.find(id);
        if (it != substations.feeder_series.end())
            feeder.substation_series = std::move(it->second);
        data.feeders.push_back(std::move(feeder));
    }
    data.phase_series = std::move(substations.phase_series);
    return data;
}

// ---------------------------------------------------------------------------
// Evaluation

// Scores an assignment against the feeder's substation readings over the
// given window.
inline FeederErrorReport evaluate_assignment(const BuddyAssignment& assignment,
                                             const Feeder& feeder, const ProfilePool& pool,
                                             const TrainingWindow& eval) {
    if (!feeder.substation_series)
        throw ConfigError("feeder " + feeder.feeder_id +
                          " has no substation series to evaluate against");
    const HalfHourlySeries actual = window(*feeder.substation_series, eval.start, eval.weeks);
    const HalfHourlySeries modeled =
        assignment_aggregate(assignment, feeder, pool, eval.start, eval.weeks);
    FeederErrorReport report;
    report.feeder_id = feeder.feeder_id;
    report.n_customers = static_cast<int>(feeder.customers.size());
    report.rmae = rmae(actual, modeled);
    report.rpde = rpde(actual, modeled);
    report.method = assignment.method;
    report.weight = assignment.weight;
    report.window = assignment.window;
    report.seed = assignment.seed.value_or(0);
    return report;
}

// ---------------------------------------------------------------------------
// Parameter sweep

struct SweepSpec {
    std::vector<Date> seasons;
    std::vector<int> weeks;
    std::vector<double> weights;
    std::vector<Method> methods = {Method::ga};
    std::optional<Date> test_start;   // scoring window; training window if absent
    int test_weeks = 0;
    std::uint64_t master_seed = 1;
    int mc_samples = 1000;
    int workers = 0;

    void validate() const {
        if (seasons.empty()) throw ConfigError("sweep: no seasons");
        if (weeks.empty()) throw ConfigError("sweep: no training lengths");
        if (weights.empty()) throw ConfigError("sweep: no weights");
        if (methods.empty()) throw ConfigError("sweep: no methods");
        for (int w : weeks)
            if (w < 1) throw ConfigError("sweep: weeks must be >= 1");
        for (double w : weights)
            if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("sweep: weights must be in [0,1]");
        if (test_start && test_weeks < 1)
            throw ConfigError("sweep: test_start requires test_weeks >= 1");
        if (mc_samples < 1) throw ConfigError("sweep: mc_samples must be >= 1");
    }
};

// Stable per-cell seed: a new cell never changes existing cells' seeds.
inline std::uint64_t cell_seed(std::uint64_t master_seed, const std::string& feeder_id,
                               Date season, int weeks, double weight, Method method) {
    std::string key = feeder_id;
    key += '|';
    key += format_date(season);
    key += '|';
    key += std::to_string(weeks);
    key += '|';
    key += format_double(weight);
    key += '|';
    key += method_name(method);
    return mix64(fnv1a(key, mix64(master_seed)));
}

struct SweepRow {
    std::string feeder_id;
    Method method = Method::ga;
    Date season{};
    int weeks = 0;
    double weight = 0.0;
    double rmae = 0.0;
    double rpde = 0.0;
    int n_customers = 0;
    std::uint64_t seed = 0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    std::vector<BuddyAssignment> assignments;   // parallel to rows
    std::vector<std::string> skipped;           // per-cell diagnostics
};

// Runs every (feeder, season, weeks, weight, method) cell: buddy on the
// training window, score on the test window (or the training window when no
// test period is configured). The simple method ignores the weight axis and
// runs once per (feeder, season, weeks) at unit weight. Cells that cannot
// run are skipped with a diagnostic; everything else proceeds.
inline SweepReport run_sweep(const SweepSpec& spec, const GaConfig& ga_defaults,
                             const Dataset& data) {
    spec.validate();

    struct Cell {
        const Feeder* feeder;
        Date season;
        int weeks;
        double weight;
        Method method;
    };
    std::vector<Cell> cells;
    for (const Feeder& feeder : data.feeders) {
        for (Date season : spec.seasons) {
            for (int weeks : spec.weeks) {
                for (Method m : spec.methods) {
                    if (m == Method::simple) {
                        cells.push_back({&feeder, season, weeks, 1.0, m});
                    } else {
                        for (double weight : spec.weights)
                            cells.push_back({&feeder, season, weeks, weight, m});
                    }
                }
            }
        }
    }

    struct CellOutcome {
        bool ok = false;
        SweepRow row;
        BuddyAssignment assignment;
        std::string diagnostic;
    };
    std::vector<CellOutcome> outcomes(cells.size());

    parallel_for(cells.size(), worker_count(spec.workers), [&](std::size_t i) {
        const Cell& cell = cells[i];
        CellOutcome& out = outcomes[i];
        const TrainingWindow train{cell.season, cell.weeks};
        const TrainingWindow eval =
            spec.test_start ? TrainingWindow{*spec.test_start, spec.test_weeks} : train;
        const std::uint64_t seed = cell_seed(spec.master_seed, cell.feeder->feeder_id,
                                             cell.season, cell.weeks, cell.weight, cell.method);
        try {
            BuddyAssignment assignment;
            switch (cell.method) {
                case Method::simple:
                    assignment = simple_buddy(*cell.feeder, data.pool, train);
                    assignment.seed = seed;
                    break;
                case Method::ga: {
                    GaConfig config = ga_defaults;
                    config.weight = cell.weight;
                    config.seed = seed;
                    assignment = evolve(*cell.feeder, data.pool, train, config).assignment;
                    break;
                }
                case Method::monte_carlo:
                    assignment = monte_carlo_buddy(*cell.feeder, data.pool, train,
                                                   spec.mc_samples, seed)
                                     .assignment;
                    break;
            }
            const FeederErrorReport report =
                evaluate_assignment(assignment, *cell.feeder, data.pool, eval);
            out.row = {cell.feeder->feeder_id, cell.method,  cell.season,
                       cell.weeks,             cell.weight,  report.rmae,
                       report.rpde,            report.n_customers, seed};
            out.assignment = std::move(assignment);
            out.ok = true;
        } catch (const Error& e) {
            out.diagnostic = cell.feeder->feeder_id + " " + format_date(cell.season) + " " +
                             std::to_string(cell.weeks) + "w weight " +
                             format_double(cell.weight) + " " + method_name(cell.method) +
                             ": " + e.what();
        }
    });

    SweepReport report;
    for (auto& out : outcomes) {
        if (out.ok) {
            report.rows.push_back(std::move(out.row));
            report.assignments.push_back(std::move(out.assignment));
        } else {
            warn("sweep cell skipped: " + out.diagnostic);
            report.skipped.push_back(std::move(out.diagnostic));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Monte Carlo comparison

struct McComparisonRow {
    std::string feeder_id;
    int n_customers = 0;
    double rmae_ga = 0.0;       // training-window RMAE of the GA solution
    double rmae_mc = 0.0;       // best training-window RMAE over the samples
    double diff = 0.0;          // rmae_mc - rmae_ga; positive: GA better
    double ga_sample_rank = 0.0; // fraction of samples strictly better than the GA
    std::uint64_t seed_ga = 0;
    std::uint64_t seed_mc = 0;
};

inline std::vector<McComparisonRow> run_mc_comparison(const Dataset& data,
                                                      const TrainingWindow& train,
                                                      const GaConfig& ga_defaults,
                                                      int n_samples,
                                                      std::uint64_t master_seed,
                                                      int workers = 0) {
    std::vector<McComparisonRow> rows(data.feeders.size());
    parallel_for(data.feeders.size(), worker_count(workers), [&](std::size_t i) {
        const Feeder& feeder = data.feeders[i];
        McComparisonRow& row = rows[i];
        row.feeder_id = feeder.feeder_id;
        row.n_customers = static_cast<int>(feeder.customers.size());
        row.seed_ga = cell_seed(master_seed, feeder.feeder_id, train.start, train.weeks,
                                ga_defaults.weight, Method::ga);
        row.seed_mc = cell_seed(master_seed, feeder.feeder_id, train.start, train.weeks,
                                ga_defaults.weight, Method::monte_carlo);

        GaConfig config = ga_defaults;
        config.seed = row.seed_ga;
        const EvolveResult ga = evolve(feeder, data.pool, train, config);
        row.rmae_ga =
            evaluate_assignment(ga.assignment, feeder, data.pool, train).rmae;

        const MonteCarloResult mc =
            monte_carlo_buddy(feeder, data.pool, train, n_samples, row.seed_mc);
        row.rmae_mc = mc.best_rmae;
        row.diff = row.rmae_mc - row.rmae_ga;
        std::size_t better = 0;
        for (double r : mc.rmae_samples)
            if (r < row.rmae_ga) ++better;
        row.ga_sample_rank = static_cast<double>(better) /
                             static_cast<double>(mc.rmae_samples.size());
    });
    return rows;
}

// ---------------------------------------------------------------------------
// Phase-level buddying

struct PhaseModeResult {
    BuddyAssignment combined;               // all phases, evaluated at feeder level
    std::vector<BuddyAssignment> per_phase;
    std::vector<int> phases;                // parallel to per_phase
    bool randomized_phases = false;
};

// Buddies each phase separately against its own substation series and
// aggregates the result back to feeder level. Customers without a phase
// label are allocated uniformly at random (seeded), mirroring the
// uncertainty of real connectivity records.
inline PhaseModeResult run_phase_mode(const Feeder& feeder,
                                      const std::map<int, HalfHourlySeries>& phase_series,
                                      const ProfilePool& pool, const TrainingWindow& train,
                                      Method method, const GaConfig& ga_defaults,
                                      int mc_samples, std::uint64_t seed) {
    Feeder labelled = feeder;
    PhaseModeResult result;
    {
        Rng rng(derive_seed(seed, 0x9e37));
        bool any_missing = false;
        for (Customer& c : labelled.customers) {
            if (!c.phase) {
                c.phase = static_cast<int>(rng.uniform_index(3)) + 1;
                any_missing = true;
            }
        }
        if (any_missing) {
            warn("feeder " + feeder.feeder_id +
                 ": missing phase labels allocated randomly");
            result.randomized_phases = true;
        }
    }

    std::map<int, Feeder> by_phase;
    for (const Customer& c : labelled.customers) {
        Feeder& sub = by_phase[*c.phase];
        sub.feeder_id = feeder.feeder_id + "/" + std::to_string(*c.phase);
        sub.customers.push_back(c);
    }

    result.combined.feeder_id = feeder.feeder_id;
    result.combined.method = method;
    result.combined.weight = method == Method::simple ? 1.0 : ga_defaults.weight;
    result.combined.window = train;
    result.combined.seed = seed;

    for (auto& [phase, sub] : by_phase) {
        const bool needs_series =
            method == Method::monte_carlo ||
            (method == Method::ga && ga_defaults.weight < 1.0);
        if (needs_series) {
            auto it = phase_series.find(phase);
            if (it == phase_series.end())
                throw ConfigError("feeder " + feeder.feeder_id + ": no substation series "
                                  "for phase " + std::to_string(phase));
            sub.substation_series = it->second;
        }
        const std::uint64_t phase_seed = derive_seed(seed, static_cast<std::uint64_t>(phase));
        BuddyAssignment assignment;
        switch (method) {
            case Method::simple:
                assignment = simple_buddy(sub, pool, train);
                break;
            case Method::ga: {
                GaConfig config = ga_defaults;
                config.seed = phase_seed;
                assignment = evolve(sub, pool, train, config).assignment;
                break;
            }
            case Method::monte_carlo:
                assignment = monte_carlo_buddy(sub, pool, train, mc_samples, phase_seed)
                                 .assignment;
                break;
        }
        for (const auto& [customer, profile] : assignment.profile_of)
            result.combined.profile_of[customer] = profile;
        result.phases.push_back(phase);
        result.per_phase.push_back(std::move(assignment));
    }
    return result;
}

struct SizeBucketRow {
    int n = 0;                 // bucket covers sizes n and n+1
    double feeder_avg_rmae = 0.0;
    int feeder_count = 0;
    double phase_avg_rmae = 0.0;
    int phase_count = 0;
};

// Fig.-5 style size-matched comparison: for each n, the average error of
// feeders (resp. phases) serving n or n+1 customers.
inline std::vector<SizeBucketRow> size_matched_buckets(
    std::span<const std::pair<int, double>> feeder_points,
    std::span<const std::pair<int, double>> phase_points) {
    int lo = std::numeric_limits<int>::max();
    int hi = std::numeric_limits<int>::min();
    for (const auto& [n, _] : feeder_points) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    for (const auto& [n, _] : phase_points) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    std::vector<SizeBucketRow> rows;
    if (lo > hi) return rows;
    for (int n = lo; n <= hi; ++n) {
        SizeBucketRow row;
        row.n = n;
        double fsum = 0.0, psum = 0.0;
        for (const auto& [size, err] : feeder_points) {
            if (size == n || size == n + 1) {
                fsum += err;
                row.feeder_count += 1;
            }
        }
        for (const auto& [size, err] : phase_points) {
            if (size == n || size == n + 1) {
                psum += err;
                row.phase_count += 1;
            }
        }
        if (row.feeder_count == 0 && row.phase_count == 0) continue;
        if (row.feeder_count > 0) row.feeder_avg_rmae = fsum / row.feeder_count;
        if (row.phase_count > 0) row.phase_avg_rmae = psum / row.phase_count;
        rows.push_back(row);
    }
    return rows;
}

struct PhaseCompareReport {
    struct FeederRow {
        std::string feeder_id;
        int n_customers = 0;
        double feeder_rmae = 0.0;      // feeder-level buddying
        double phase_rmae = 0.0;       // per-phase buddying, scored at feeder level
        bool randomized_phases = false;
    };
    struct PhaseRow {
        std::string feeder_id;
        int phase = 0;
        int n_customers = 0;
        double rmae = 0.0;             // scored against the phase series
    };
    std::vector<FeederRow> feeders;
    std::vector<PhaseRow> phases;
    std::vector<SizeBucketRow> buckets;
};

inline PhaseCompareReport run_phase_compare(const Dataset& data, const TrainingWindow& train,
                                            const std::optional<TrainingWindow>& test,
                                            Method method, const GaConfig& ga_defaults,
                                            int mc_samples, std::uint64_t master_seed,
                                            int workers = 0) {
    const TrainingWindow eval = test ? *test : train;

    struct Outcome {
        bool ok = false;
        PhaseCompareReport::FeederRow feeder_row;
        std::vector<PhaseCompareReport::PhaseRow> phase_rows;
        std::string diagnostic;
    };
    std::vector<Outcome> outcomes(data.feeders.size());

    parallel_for(data.feeders.size(), worker_count(workers), [&](std::size_t i) {
        const Feeder& feeder = data.feeders[i];
        Outcome& out = outcomes[i];
        try {
            const std::uint64_t seed =
                cell_seed(master_seed, feeder.feeder_id, train.start, train.weeks,
                          method == Method::simple ? 1.0 : ga_defaults.weight, method);

            BuddyAssignment feeder_level;
            switch (method) {
                case Method::simple:
                    feeder_level = simple_buddy(feeder, data.pool, train);
                    break;
                case Method::ga: {
                    GaConfig config = ga_defaults;
                    config.seed = seed;
                    feeder_level = evolve(feeder, data.pool, train, config).assignment;
                    break;
                }
                case Method::monte_carlo:
                    feeder_level =
                        monte_carlo_buddy(feeder, data.pool, train, mc_samples, seed)
                            .assignment;
                    break;
            }

            static const std::map<int, HalfHourlySeries> kNoPhases;
            auto phases_it = data.phase_series.find(feeder.feeder_id);
            const auto& phase_series =
                phases_it == data.phase_series.end() ? kNoPhases : phases_it->second;
            const PhaseModeResult phase_mode =
                run_phase_mode(feeder, phase_series, data.pool, train, method, ga_defaults,
                               mc_samples, derive_seed(seed, 0x70));

            out.feeder_row.feeder_id = feeder.feeder_id;
            out.feeder_row.n_customers = static_cast<int>(feeder.customers.size());
            out.feeder_row.feeder_rmae =
                evaluate_assignment(feeder_level, feeder, data.pool, eval).rmae;
            out.feeder_row.phase_rmae =
                evaluate_assignment(phase_mode.combined, feeder, data.pool, eval).rmae;
            out.feeder_row.randomized_phases = phase_mode.randomized_phases;

            for (std::size_t k = 0; k < phase_mode.per_phase.size(); ++k) {
                const int phase = phase_mode.phases[k];
                auto it = phase_series.find(phase);
                if (it == phase_series.end()) continue;
                // Rebuild the phase sub-feeder to score the phase assignment.
                Feeder sub;
                sub.feeder_id = feeder.feeder_id + "/" + std::to_string(phase);
                for (const auto& [customer, _] : phase_mode.per_phase[k].profile_of) {
                    for (const Customer& c : feeder.customers)
                        if (c.customer_id == customer) sub.customers.push_back(c);
                }
                sub.substation_series = it->second;
                PhaseCompareReport::PhaseRow row;
                row.feeder_id = feeder.feeder_id;
                row.phase = phase;
                row.n_customers = static_cast<int>(sub.customers.size());
                row.rmae = evaluate_assignment(phase_mode.per_phase[k], sub, data.pool,
                                               eval)
                               .rmae;
                out.phase_rows.push_back(row);
            }
            out.ok = true;
        } catch (const Error& e) {
            out.diagnostic = feeder.feeder_id + ": " + e.what();
        }
    });

    PhaseCompareReport report;
    std::vector<std::pair<int, double>> feeder_points, phase_points;
    for (auto& out : outcomes) {
        if (!out.ok) {
            warn("phase comparison skipped: " + out.diagnostic);
            continue;
        }
        feeder_points.push_back({out.feeder_row.n_customers, out.feeder_row.feeder_rmae});
        report.feeders.push_back(std::move(out.feeder_row));
        for (auto& row : out.phase_rows) {
            phase_points.push_back({row.n_customers, row.rmae});
            report.phases.push_back(std::move(row));
        }
    }
    report.buckets = size_matched_buckets(feeder_points, phase_points);
    return report;
}

// ---------------------------------------------------------------------------
// Config files

inline SweepSpec sweep_from_toml(const TomlTable& toml) {
    SweepSpec spec;
    if (auto seasons = toml.find_string_array("sweep.seasons")) {
        spec.seasons.clear();
        for (const auto& s : *seasons) spec.seasons.push_back(parse_date(s));
    }
    if (auto weeks = toml.find_int_array("sweep.weeks")) {
        spec.weeks.assign(weeks->begin(), weeks->end());
    }
    if (auto weights = toml.find_double_array("sweep.weights")) spec.weights = *weights;
    if (auto methods = toml.find_string_array("sweep.methods")) {
        spec.methods.clear();
        for (const auto& name : *methods) {
            auto m = parse_method(name);
            if (!m) throw ConfigError("sweep.methods: unknown method '" + name + "'");
            spec.methods.push_back(*m);
        }
    }
    if (auto test_start = toml.find_string(std::string("sweep.test_start")))
        spec.test_start = parse_date(*test_start);
    spec.test_weeks = static_cast<int>(toml.get_int("sweep.test_weeks", spec.test_weeks));
    spec.master_seed =
        static_cast<std::uint64_t>(toml.get_int("sweep.master_seed",
                                                static_cast<std::int64_t>(spec.master_seed)));
    spec.mc_samples = static_cast<int>(toml.get_int("monte-carlo.samples", spec.mc_samples));
    spec.workers = static_cast<int>(toml.get_int("sweep.workers", spec.workers));
    return spec;
}

inline GaConfig ga_from_toml(const TomlTable& toml, GaConfig config = {}) {
    config.weight = toml.get_double("ga.weight", config.weight);
    config.population = static_cast<int>(toml.get_int("ga.population", config.population));
    config.elite = static_cast<int>(toml.get_int("ga.elite", config.elite));
    config.generations =
        static_cast<int>(toml.get_int("ga.generations", config.generations));
    config.initial_mutation_rate =
        toml.get_double("ga.initial_mutation_rate", config.initial_mutation_rate);
    const std::string decay = toml.get_string("ga.mutation_decay", "linear");
    if (decay == "linear")
        config.mutation_decay = MutationDecay::linear;
    else if (decay == "constant")
        config.mutation_decay = MutationDecay::constant;
    else
        throw ConfigError("ga.mutation_decay must be 'linear' or 'constant'");
    config.reset_generation =
        static_cast<int>(toml.get_int("ga.reset_generation", config.reset_generation));
    config.fitness_p = toml.get_double("ga.fitness_p", config.fitness_p);
    config.seed = static_cast<std::uint64_t>(
        toml.get_int("ga.seed", static_cast<std::int64_t>(config.seed)));
    return config;
}

inline SyntheticPoolSpec pool_from_toml(const TomlTable& toml, SyntheticPoolSpec spec = {}) {
    spec.n_profiles = static_cast<int>(toml.get_int("pool.n_profiles", spec.n_profiles));
    spec.days = static_cast<int>(toml.get_int("pool.days", spec.days));
    if (auto start = toml.find_string("pool.start_date")) spec.start_date = parse_date(*start);
    if (auto mix = toml.find_double_array("pool.group_mix")) spec.group_mix = *mix;
    if (auto medians = toml.find_double_array("pool.group_level_median"))
        spec.group_level_median = *medians;
    spec.level_sigma = toml.get_double("pool.level_sigma", spec.level_sigma);
    spec.noise_sigma = toml.get_double("pool.noise_sigma", spec.noise_sigma);
    spec.spike_rate = toml.get_double("pool.spike_rate", spec.spike_rate);
    spec.spike_scale = toml.get_double("pool.spike_scale", spec.spike_scale);
    spec.seed = static_cast<std::uint64_t>(
        toml.get_int("pool.seed", static_cast<std::int64_t>(spec.seed)));
    return spec;
}

// ---------------------------------------------------------------------------
// Report writers

inline void write_results_csv(const std::filesystem::path& path, const SweepReport& report) {
    auto out = open_output(path);
    out << "feeder_id,method,season,weeks,weight,rmae,rpde,n_customers,seed\n";
    for (const SweepRow& r : report.rows) {
        out << r.feeder_id << ',' << method_name(r.method) << ',' << format_date(r.season)
            << ',' << r.weeks << ',' << format_double(r.weight) << ','
            << format_double(r.rmae) << ',' << format_double(r.rpde) << ','
            << r.n_customers << ',' << r.seed << '\n';
    }
}

inline nlohmann::json sweep_row_to_json(const SweepRow& r) {
    return {{"feeder_id", r.feeder_id}, {"method", method_name(r.method)},
            {"season", format_date(r.season)}, {"weeks", r.weeks},
            {"weight", r.weight},         {"rmae", r.rmae},
            {"rpde", r.rpde},             {"n_customers", r.n_customers},
            {"seed", r.seed}};
}

inline void write_results_json(const std::filesystem::path& path, const SweepReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const SweepRow& r : report.rows) rows.push_back(sweep_row_to_json(r));
    auto out = open_output(path);
    out << nlohmann::json{{"results", std::move(rows)}}.dump(2) << '\n';
}

inline nlohmann::json assignment_to_json(const BuddyAssignment& a) {
    nlohmann::json j;
    j["feeder_id"] = a.feeder_id;
    j["method"] = method_name(a.method);
    j["weight"] = a.weight;
    j["window"] = {{"start", format_date(a.window.start)}, {"weeks", a.window.weeks}};
    if (a.seed) j["seed"] = *a.seed;
    j["assignment"] = a.profile_of;
    return j;
}

inline BuddyAssignment assignment_from_json(const nlohmann::json& j) {
    BuddyAssignment a;
    a.feeder_id = j.at("feeder_id").get<std::string>();
    auto method = parse_method(j.at("method").get<std::string>());
    if (!method) throw SchemaError("assignment json: unknown method");
    a.method = *method;
    a.weight = j.at("weight").get<double>();
    a.window.start = parse_date(j.at("window").at("start").get<std::string>());
    a.window.weeks = j.at("window").at("weeks").get<int>();
    if (j.contains("seed")) a.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [customer, profile] : j.at("assignment").items())
        a.profile_of[customer] = profile.get<std::string>();
    return a;
}

inline std::string assignment_file_name(const SweepRow& row) {
    return "assignment_" + row.feeder_id + "_" + format_date(row.season) + "_" +
           std::to_string(row.weeks) + "w_wt" + format_double(row.weight) + "_" +
           method_name(row.method) + ".json";
}

inline void write_assignments_json(const std::filesystem::path& dir,
                                   const SweepReport& report) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        auto out = open_output(dir / assignment_file_name(report.rows[i]));
        out << assignment_to_json(report.assignments[i]).dump(2) << '\n';
    }
}

// Average error per (method, season, weeks, weight): the surface behind the
// weight-vs-weeks error plots.
inline void write_error_surface_csv(const std::filesystem::path& path,
                                    const SweepReport& report) {
    auto out = open_output(path);
    out << "method,season,weeks,weight,avg_rmae,avg_rpde,n_feeders\n";
    std::map<std::tuple<std::string, std::string, int, double>,
             std::tuple<double, double, int>>
        cells;
    for (const SweepRow& r : report.rows) {
        auto& [rmae_sum, rpde_sum, count] =
            cells[{method_name(r.method), format_date(r.season), r.weeks, r.weight}];
        rmae_sum += r.rmae;
        rpde_sum += r.rpde;
        count += 1;
    }
    for (const auto& [key, value] : cells) {
        const auto& [method, season, weeks, weight] = key;
        const auto& [rmae_sum, rpde_sum, count] = value;
        out << method << ',' << season << ',' << weeks << ',' << format_double(weight) << ','
            << format_double(rmae_sum / count) << ',' << format_double(rpde_sum / count)
            << ',' << count << '\n';
    }
}

// Error vs feeder size, one point per row; input for power-law fitting.
inline void write_size_scatter_csv(const std::filesystem::path& path,
                                   const SweepReport& report) {
    auto out = open_output(path);
    out << "method,season,weeks,weight,feeder_id,n_customers,rmae,rpde\n";
    for (const SweepRow& r : report.rows) {
        out << method_name(r.method) << ',' << format_date(r.season) << ',' << r.weeks << ','
            << format_double(r.weight) << ',' << r.feeder_id << ',' << r.n_customers << ','
            << format_double(r.rmae) << ',' << format_double(r.rpde) << '\n';
    }
}

inline void write_mc_comparison_csv(const std::filesystem::path& path,
                                    std::span<const McComparisonRow> rows) {
    auto out = open_output(path);
    out << "feeder_id,n_customers,rmae_ga,rmae_mc,diff,ga_sample_rank,seed_ga,seed_mc\n";
    for (const auto& r : rows) {
        out << r.feeder_id << ',' << r.n_customers << ',' << format_double(r.rmae_ga) << ','
            << format_double(r.rmae_mc) << ',' << format_double(r.diff) << ','
            << format_double(r.ga_sample_rank) << ',' << r.seed_ga << ',' << r.seed_mc
            << '\n';
    }
}

inline void write_phase_compare_csv(const std::filesystem::path& dir,
                                    const PhaseCompareReport& report) {
    {
        auto out = open_output(dir / "phase_compare_feeders.csv");
        out << "feeder_id,n_customers,feeder_rmae,phase_rmae,randomized_phases\n";
        for (const auto& r : report.feeders)
            out << r.feeder_id << ',' << r.n_customers << ',' << format_double(r.feeder_rmae)
                << ',' << format_double(r.phase_rmae) << ','
                << (r.randomized_phases ? 'Y' : 'N') << '\n';
    }
    {
        auto out = open_output(dir / "phase_compare_phases.csv");
        out << "feeder_id,phase,n_customers,rmae\n";
        for (const auto& r : report.phases)
            out << r.feeder_id << ',' << r.phase << ',' << r.n_customers << ','
                << format_double(r.rmae) << '\n';
    }
    {
        auto out = open_output(dir / "phase_compare_buckets.csv");
        out << "n,feeder_avg_rmae,feeder_count,phase_avg_rmae,phase_count\n";
        for (const auto& r : report.buckets)
            out << r.n << ',' << format_double(r.feeder_avg_rmae) << ',' << r.feeder_count
                << ',' << format_double(r.phase_avg_rmae) << ',' << r.phase_count << '\n';
    }
}

inline nlohmann::json power_law_to_json(const PowerLawFit& fit,
                                        std::span<const std::pair<double, double>> points) {
    nlohmann::json j;
    j["a"] = fit.a;
    j["b"] = fit.b;
    j["n"] = fit.n;
    j["residual_sd"] = fit.residual_sd;
    j["slope_se"] = fit.slope_se;
    j["intercept_se"] = fit.intercept_se;
    j["t_crit"] = fit.t_crit;
    std::vector<double> xs;
    for (const auto& [x, _] : points) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    nlohmann::json band = nlohmann::json::array();
    for (double x : xs) {
        const auto [lo, hi] = fit.band_at(x);
        band.push_back({{"x", x}, {"fit", fit(x)}, {"lower", lo}, {"upper", hi}});
    }
    j["band"] = band;
    return j;
}

} // namespace lvbuddy

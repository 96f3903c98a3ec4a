#include "qoeplan/allocator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "qoeplan/random.hpp"

namespace qoeplan {

namespace {

using nlohmann::ordered_json;

constexpr double kBudgetSlack = 1e-9;

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error(Errc::io_error, "failed to format number");
    return std::string(buf, ptr);
}

// Precomputed best-so-far curves and per-epoch rates; makes one allocation
// evaluation O(models) instead of O(models * epochs).
struct ScoreContext {
    const AllocationProblem& problem;
    std::vector<std::vector<double>> mae_min;
    std::vector<std::vector<double>> mse_min;

    explicit ScoreContext(const AllocationProblem& p) : problem(p) {
        mae_min.reserve(p.models.size());
        mse_min.reserve(p.models.size());
        for (const ModelEntry& entry : p.models) {
            mae_min.push_back(prefix_min(entry.curve.mae));
            mse_min.push_back(prefix_min(entry.curve.mse));
        }
    }

    ModelAllocation score(std::size_t m, int epochs) const {
        const ModelEntry& entry = problem.models[m];
        RawQuantities raw;
        raw.best_mae = mae_min[m][static_cast<std::size_t>(epochs - 1)];
        raw.best_mse = mse_min[m][static_cast<std::size_t>(epochs - 1)];
        raw.train_hours = epoch_to_time(entry.curve.meta, epochs, problem.max_epochs);
        raw.load_seconds = entry.curve.meta.t_load_s;
        raw.test_seconds = entry.curve.meta.t_test_s;

        ModelAllocation alloc;
        alloc.name = entry.curve.meta.name;
        alloc.epochs = epochs;
        alloc.train_hours = raw.train_hours;
        alloc.factors = score_factors(raw, entry.scales);
        alloc.e_all = total_experience(alloc.factors, entry.weights);
        return alloc;
    }
};

double total_time(const AllocationProblem& problem, std::span<const int> epochs) {
    double t = 0.0;
    for (std::size_t m = 0; m < problem.models.size(); ++m)
        t += epoch_to_time(problem.models[m].curve.meta, epochs[m], problem.max_epochs);
    return t;
}

void require_base_feasible(const AllocationProblem& problem) {
    const double floor = problem.min_feasible_budget();
    if (problem.budget_hours + kBudgetSlack < floor)
        throw Error(Errc::infeasible_problem,
                    "budget " + std::to_string(problem.budget_hours) +
                        " h is below the base-allocation floor; minimum feasible budget is " +
                        std::to_string(floor) + " h");
}

AllocationPlan finish_plan(const AllocationProblem& problem, const ScoreContext& ctx,
                           std::span<const int> epochs, AllocMethod method, std::uint64_t seed) {
    AllocationPlan plan;
    plan.method = method;
    plan.seed = seed;
    plan.budget_hours = problem.budget_hours;
    plan.models.reserve(problem.models.size());
    for (std::size_t m = 0; m < problem.models.size(); ++m) {
        plan.models.push_back(ctx.score(m, epochs[m]));
        plan.total_train_hours += plan.models.back().train_hours;
        plan.total_experience += plan.models.back().e_all;
    }
    plan.feasible = plan.total_train_hours <= problem.budget_hours + kBudgetSlack;
    return plan;
}

// Fitness ordering: any feasible vector ranks above any infeasible one;
// infeasible ones rank by (negative) budget overshoot.
struct Fitness {
    bool feasible = false;
    double value = 0.0;

    bool operator>(const Fitness& o) const {
        if (feasible != o.feasible) return feasible;
        return value > o.value;
    }
};

int auto_bits(int range_steps) {
    int bits = 1;
    while (((1 << bits) - 1) < range_steps) ++bits;
    return bits;
}

}  // namespace

std::vector<int> AllocationPlan::models_epochs() const {
    std::vector<int> epochs;
    epochs.reserve(models.size());
    for (const ModelAllocation& m : models) epochs.push_back(m.epochs);
    return epochs;
}

void AllocationProblem::validate() const {
    if (models.empty()) throw Error(Errc::invalid_argument, "problem has no models");
    if (base_epochs < 1 || base_epochs > max_epochs)
        throw Error(Errc::invalid_argument, "require 1 <= base_epochs <= max_epochs");
    if (epoch_step < 1) throw Error(Errc::invalid_argument, "epoch_step must be >= 1");
    for (const ModelEntry& entry : models) {
        entry.curve.meta.validate();
        entry.weights.validate();
        entry.scales.validate();
        if (static_cast<int>(entry.curve.mae.size()) < max_epochs ||
            static_cast<int>(entry.curve.mse.size()) < max_epochs)
            throw Error(Errc::epoch_out_of_range,
                        "model '" + entry.curve.meta.name + "' curves cover fewer than " +
                            std::to_string(max_epochs) + " epochs");
    }
}

double AllocationProblem::min_feasible_budget() const {
    double t = 0.0;
    for (const ModelEntry& entry : models)
        t += epoch_to_time(entry.curve.meta, base_epochs, max_epochs);
    return t;
}

const char* alloc_method_name(AllocMethod m) {
    switch (m) {
        case AllocMethod::manual: return "manual";
        case AllocMethod::ga: return "ga";
        case AllocMethod::random: return "random";
        case AllocMethod::fcfs: return "fcfs";
        case AllocMethod::average: return "average";
        case AllocMethod::exhaustive: return "exhaustive";
    }
    return "?";
}

AllocMethod alloc_method_from_name(const std::string& name) {
    if (name == "ga") return AllocMethod::ga;
    if (name == "random") return AllocMethod::random;
    if (name == "fcfs") return AllocMethod::fcfs;
    if (name == "average") return AllocMethod::average;
    if (name == "exhaustive") return AllocMethod::exhaustive;
    if (name == "manual") return AllocMethod::manual;
    throw Error(Errc::invalid_argument, "unknown method '" + name + "'");
}

void GaConfig::validate() const {
    // three baseline individuals always enter the initial population
    if (population_size < 4) throw Error(Errc::invalid_argument, "population_size must be >= 4");
    if (generations < 1) throw Error(Errc::invalid_argument, "generations must be >= 1");
    if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 || mutation_rate > 1.0)
        throw Error(Errc::invalid_argument, "rates must be in [0, 1]");
    if (elitism_count < 0 || elitism_count >= population_size)
        throw Error(Errc::invalid_argument, "require 0 <= elitism_count < population_size");
    if (bits_per_gene < 0) throw Error(Errc::invalid_argument, "bits_per_gene must be >= 0");
}

AllocationPlan evaluate_allocation(const AllocationProblem& problem, std::span<const int> epochs) {
    problem.validate();
    if (epochs.size() != problem.models.size())
        throw Error(Errc::length_mismatch,
                    "epoch vector has " + std::to_string(epochs.size()) + " entries for " +
                        std::to_string(problem.models.size()) + " models");
    for (std::size_t m = 0; m < epochs.size(); ++m) {
        if (epochs[m] < problem.base_epochs || epochs[m] > problem.max_epochs)
            throw Error(Errc::epoch_out_of_range,
                        "model '" + problem.models[m].curve.meta.name + "': epochs " +
                            std::to_string(epochs[m]) + " outside [" +
                            std::to_string(problem.base_epochs) + ", " +
                            std::to_string(problem.max_epochs) + "]");
    }
    const ScoreContext ctx(problem);
    return finish_plan(problem, ctx, epochs, AllocMethod::manual, 0);
}

AllocationPlan ga_allocate(const AllocationProblem& problem, const GaConfig& config,
                           std::span<const std::vector<int>> extra_seed_plans) {
    problem.validate();
    config.validate();
    require_base_feasible(problem);

    const int n_models = static_cast<int>(problem.models.size());
    const int range_steps = (problem.max_epochs - problem.base_epochs) / problem.epoch_step;
    const int bits = config.bits_per_gene > 0 ? config.bits_per_gene : auto_bits(range_steps);
    if (bits > 30 || ((1LL << bits) - 1) < range_steps)
        throw Error(Errc::invalid_argument,
                    "bits_per_gene " + std::to_string(bits) + " cannot encode " +
                        std::to_string(range_steps) + " steps");
    const int chrom_len = n_models * bits;

    const ScoreContext ctx(problem);

    auto decode = [&](const std::vector<std::uint8_t>& chrom) {
        std::vector<int> epochs(static_cast<std::size_t>(n_models));
        for (int m = 0; m < n_models; ++m) {
            long g = 0;
            for (int b = 0; b < bits; ++b) g = (g << 1) | chrom[static_cast<std::size_t>(m * bits + b)];
            const long e = problem.base_epochs + g * problem.epoch_step;
            epochs[static_cast<std::size_t>(m)] =
                static_cast<int>(std::min<long>(e, problem.max_epochs));
        }
        return epochs;
    };
    auto encode = [&](std::span<const int> epochs) {
        std::vector<std::uint8_t> chrom(static_cast<std::size_t>(chrom_len), 0);
        for (int m = 0; m < n_models; ++m) {
            const long g = (epochs[static_cast<std::size_t>(m)] - problem.base_epochs) /
                           problem.epoch_step;
            for (int b = 0; b < bits; ++b)
                chrom[static_cast<std::size_t>(m * bits + b)] =
                    static_cast<std::uint8_t>((g >> (bits - 1 - b)) & 1);
        }
        return chrom;
    };
    auto fitness_of = [&](std::span<const int> epochs) {
        Fitness fit;
        const double t = total_time(problem, epochs);
        fit.feasible = t <= problem.budget_hours + kBudgetSlack;
        if (fit.feasible) {
            double total = 0.0;
            for (int m = 0; m < n_models; ++m)
                total += ctx.score(static_cast<std::size_t>(m), epochs[static_cast<std::size_t>(m)]).e_all;
            fit.value = total;
        } else {
            fit.value = -(t - problem.budget_hours);
        }
        return fit;
    };

    Rng rng(config.seed);
    std::vector<std::vector<std::uint8_t>> population;
    population.reserve(static_cast<std::size_t>(config.population_size));
    // baseline plans join the initial population so the GA weakly dominates them
    population.push_back(encode(random_allocate(problem, config.seed).models_epochs()));
    population.push_back(encode(fcfs_allocate(problem).models_epochs()));
    population.push_back(encode(average_allocate(problem).models_epochs()));
    for (const std::vector<int>& plan : extra_seed_plans) {
        if (static_cast<int>(plan.size()) != n_models)
            throw Error(Errc::length_mismatch, "seed plan length mismatch");
        if (static_cast<int>(population.size()) < config.population_size)
            population.push_back(encode(plan));
    }
    while (static_cast<int>(population.size()) < config.population_size) {
        std::vector<std::uint8_t> chrom(static_cast<std::size_t>(chrom_len));
        for (auto& bit : chrom) bit = static_cast<std::uint8_t>(rng.next_u64() & 1);
        population.push_back(std::move(chrom));
    }
    population.resize(static_cast<std::size_t>(config.population_size));

    std::vector<int> best_epochs;
    Fitness best_fit;
    bool have_best = false;

    std::vector<Fitness> fits(population.size());
    std::vector<int> order(population.size());

    for (int gen = 0; gen <= config.generations; ++gen) {
        for (std::size_t i = 0; i < population.size(); ++i) {
            const std::vector<int> epochs = decode(population[i]);
            fits[i] = fitness_of(epochs);
            if (fits[i].feasible && (!have_best || fits[i] > best_fit)) {
                best_fit = fits[i];
                best_epochs = epochs;
                have_best = true;
            }
        }
        if (gen == config.generations) break;

        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fits[static_cast<std::size_t>(a)] > fits[static_cast<std::size_t>(b)]; });

        std::vector<std::vector<std::uint8_t>> next;
        next.reserve(population.size());
        for (int e = 0; e < config.elitism_count; ++e)
            next.push_back(population[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])]);

        auto tournament = [&]() -> const std::vector<std::uint8_t>& {
            const std::size_t a = rng.index(population.size());
            const std::size_t b = rng.index(population.size());
            return fits[a] > fits[b] ? population[a] : population[b];
        };
        while (next.size() < population.size()) {
            std::vector<std::uint8_t> c1 = tournament();
            std::vector<std::uint8_t> c2 = tournament();
            if (rng.uniform() < config.crossover_rate && chrom_len > 1) {
                const std::size_t point = 1 + rng.index(static_cast<std::size_t>(chrom_len - 1));
                for (std::size_t b = point; b < static_cast<std::size_t>(chrom_len); ++b)
                    std::swap(c1[b], c2[b]);
            }
            for (auto& bit : c1)
                if (rng.uniform() < config.mutation_rate) bit ^= 1;
            for (auto& bit : c2)
                if (rng.uniform() < config.mutation_rate) bit ^= 1;
            next.push_back(std::move(c1));
            if (next.size() < population.size()) next.push_back(std::move(c2));
        }
        population = std::move(next);
    }

    if (!have_best)
        throw Error(Errc::infeasible_problem, "no feasible individual found");
    return finish_plan(problem, ctx, best_epochs, AllocMethod::ga, config.seed);
}

AllocationPlan random_allocate(const AllocationProblem& problem, std::uint64_t seed) {
    problem.validate();
    require_base_feasible(problem);
    const ScoreContext ctx(problem);

    std::vector<int> epochs(problem.models.size(), problem.base_epochs);
    Rng rng(seed);
    std::vector<std::size_t> candidates;
    while (true) {
        candidates.clear();
        for (std::size_t m = 0; m < epochs.size(); ++m) {
            if (epochs[m] + problem.epoch_step > problem.max_epochs) continue;
            epochs[m] += problem.epoch_step;
            const double t = total_time(problem, epochs);
            epochs[m] -= problem.epoch_step;
            if (t <= problem.budget_hours + kBudgetSlack) candidates.push_back(m);
        }
        if (candidates.empty()) break;
        epochs[candidates[rng.index(candidates.size())]] += problem.epoch_step;
    }
    return finish_plan(problem, ctx, epochs, AllocMethod::random, seed);
}

AllocationPlan fcfs_allocate(const AllocationProblem& problem) {
    problem.validate();
    require_base_feasible(problem);
    const ScoreContext ctx(problem);

    std::vector<int> epochs(problem.models.size(), problem.base_epochs);
    for (std::size_t m = 0; m < epochs.size(); ++m) {
        while (epochs[m] + problem.epoch_step <= problem.max_epochs) {
            epochs[m] += problem.epoch_step;
            if (total_time(problem, epochs) > problem.budget_hours + kBudgetSlack) {
                epochs[m] -= problem.epoch_step;
                break;
            }
        }
    }
    return finish_plan(problem, ctx, epochs, AllocMethod::fcfs, 0);
}

AllocationPlan average_allocate(const AllocationProblem& problem) {
    problem.validate();
    require_base_feasible(problem);
    const ScoreContext ctx(problem);

    std::vector<int> epochs(problem.models.size(), problem.base_epochs);
    const double spare = problem.budget_hours - total_time(problem, epochs);
    const double share = spare / static_cast<double>(problem.models.size());
    for (std::size_t m = 0; m < epochs.size(); ++m) {
        const ModelMeta& meta = problem.models[m].curve.meta;
        const double step_cost =
            epoch_to_time(meta, problem.epoch_step, problem.max_epochs);
        const int cap_steps = (problem.max_epochs - problem.base_epochs) / problem.epoch_step;
        const int affordable =
            step_cost > 0.0 ? static_cast<int>(std::floor(share / step_cost + 1e-9)) : cap_steps;
        epochs[m] += std::min(cap_steps, std::max(0, affordable)) * problem.epoch_step;
    }
    return finish_plan(problem, ctx, epochs, AllocMethod::average, 0);
}

AllocationPlan exhaustive_allocate(const AllocationProblem& problem, int grid_step) {
    problem.validate();
    require_base_feasible(problem);
    if (grid_step < 1) throw Error(Errc::invalid_argument, "grid_step must be >= 1");

    std::vector<std::vector<int>> grid(problem.models.size());
    double combinations = 1.0;
    for (auto& points : grid) {
        for (int e = problem.base_epochs; e <= problem.max_epochs; e += grid_step)
            points.push_back(e);
        if (points.back() != problem.max_epochs) points.push_back(problem.max_epochs);
        combinations *= static_cast<double>(points.size());
    }
    if (combinations > 1e7)
        throw Error(Errc::grid_too_large,
                    std::to_string(combinations) + " grid points exceed the 1e7 cap");

    const ScoreContext ctx(problem);
    // Per-model, per-grid-point value and cost; the scan then only sums.
    std::vector<std::vector<std::pair<double, double>>> cell(problem.models.size());
    for (std::size_t m = 0; m < grid.size(); ++m) {
        for (int e : grid[m]) {
            const ModelAllocation alloc = ctx.score(m, e);
            cell[m].push_back({alloc.e_all, alloc.train_hours});
        }
    }

    std::vector<std::size_t> idx(problem.models.size(), 0);
    std::vector<std::size_t> best_idx;
    double best_total = -1.0;
    bool found = false;
    bool done = false;
    while (!done) {
        double total = 0.0, t = 0.0;
        for (std::size_t m = 0; m < idx.size(); ++m) {
            total += cell[m][idx[m]].first;
            t += cell[m][idx[m]].second;
        }
        if (t <= problem.budget_hours + kBudgetSlack && total > best_total) {
            best_total = total;
            best_idx = idx;
            found = true;
        }
        // odometer with the FIRST model as the fastest digit: on ties the
        // strict improvement test keeps the earliest-enumerated vector, which
        // tops up earlier-declared models first
        std::size_t pos = 0;
        while (true) {
            if (pos == idx.size()) {
                done = true;
                break;
            }
            if (++idx[pos] < grid[pos].size()) break;
            idx[pos] = 0;
            ++pos;
        }
    }
    if (!found) throw Error(Errc::infeasible_problem, "no feasible grid point");

    std::vector<int> epochs(problem.models.size());
    for (std::size_t m = 0; m < epochs.size(); ++m) epochs[m] = grid[m][best_idx[m]];
    return finish_plan(problem, ctx, epochs, AllocMethod::exhaustive, 0);
}

bool SweepTable::all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok; });
}

std::optional<double> SweepTable::mean_total(double budget, AllocMethod method) const {
    double sum = 0.0;
    int count = 0;
    for (const SweepRow& r : rows) {
        if (r.ok && r.method == method && r.budget_hours == budget) {
            sum += r.plan->total_experience;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

SweepTable sweep(const AllocationProblem& problem_template, const SweepRequest& request) {
    if (request.methods.empty()) throw Error(Errc::invalid_argument, "no methods requested");
    if (request.budgets.empty()) throw Error(Errc::invalid_argument, "no budgets requested");
    if (request.seeds.empty()) throw Error(Errc::invalid_argument, "no seeds requested");

    SweepTable table;
    for (const ModelEntry& entry : problem_template.models)
        table.model_names.push_back(entry.curve.meta.name);

    for (double budget : request.budgets) {
        AllocationProblem problem = problem_template;
        problem.budget_hours = budget;

        // Random-baseline plans for every requested seed feed the GA
        // population, so a GA row can never rank below a random row.
        std::vector<std::vector<int>> seed_plans;
        for (std::uint64_t s : request.seeds) {
            try {
                seed_plans.push_back(random_allocate(problem, s).models_epochs());
            } catch (const Error&) {
                break;  // infeasible budget; per-cell handling reports it
            }
        }

        for (AllocMethod method : request.methods) {
            const bool stochastic = method == AllocMethod::ga || method == AllocMethod::random;
            const std::vector<std::uint64_t> seeds =
                stochastic ? request.seeds : std::vector<std::uint64_t>{0};
            for (std::uint64_t seed : seeds) {
                SweepRow row;
                row.budget_hours = budget;
                row.method = method;
                row.seed = seed;
                try {
                    switch (method) {
                        case AllocMethod::ga: {
                            GaConfig ga = request.ga;
                            ga.seed = seed;
                            row.plan = ga_allocate(problem, ga, seed_plans);
                            break;
                        }
                        case AllocMethod::random:
                            row.plan = random_allocate(problem, seed);
                            break;
                        case AllocMethod::fcfs:
                            row.plan = fcfs_allocate(problem);
                            break;
                        case AllocMethod::average:
                            row.plan = average_allocate(problem);
                            break;
                        case AllocMethod::exhaustive:
                            row.plan = exhaustive_allocate(problem, request.exhaustive_grid_step);
                            break;
                        case AllocMethod::manual:
                            throw Error(Errc::invalid_argument, "manual is not sweepable");
                    }
                    row.ok = true;
                } catch (const Error& e) {
                    row.ok = false;
                    row.error = errc_name(e.code());
                }
                table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

std::string plan_to_json(const AllocationPlan& plan) {
    ordered_json j;
    j["method"] = alloc_method_name(plan.method);
    j["seed"] = plan.seed;
    j["budget_hours"] = plan.budget_hours;
    auto& models = j["models"] = ordered_json::array();
    for (const ModelAllocation& m : plan.models) {
        models.push_back(ordered_json{{"name", m.name},
                                      {"epochs", m.epochs},
                                      {"train_hours", m.train_hours},
                                      {"factors", ordered_json{{"mae", m.factors.mae},
                                                               {"mse", m.factors.mse},
                                                               {"train", m.factors.train},
                                                               {"load", m.factors.load},
                                                               {"test", m.factors.test}}},
                                      {"e_all", m.e_all}});
    }
    j["total_experience"] = plan.total_experience;
    return j.dump(2);
}

void save_plan(const AllocationPlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    out << plan_to_json(plan) << '\n';
}

void save_sweep_csv(const SweepTable& table, const std::filesystem::path& path,
                    bool with_variant_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    out << "budget_hours,method,seed,total_experience";
    for (const std::string& name : table.model_names) out << ',' << name << "_epochs";
    out << ",status";
    if (with_variant_column) out << ",w_variant";
    out << '\n';
    for (const SweepRow& row : table.rows) {
        out << format_double(row.budget_hours) << ',' << alloc_method_name(row.method) << ','
            << row.seed << ',';
        if (row.ok) {
            out << format_double(row.plan->total_experience);
            for (const ModelAllocation& m : row.plan->models) out << ',' << m.epochs;
            out << ",ok";
        } else {
            out << "";
            for (std::size_t i = 0; i < table.model_names.size(); ++i) out << ',';
            out << ",error:" << row.error;
        }
        if (with_variant_column) out << ',' << row.w_variant;
        out << '\n';
    }
    if (!out) throw Error(Errc::io_error, "failed writing " + path.string());
}

}  // namespace qoeplan

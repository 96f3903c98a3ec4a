#ifndef QOEPLAN_ALLOCATOR_HPP
#define QOEPLAN_ALLOCATOR_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qoeplan/curve.hpp"
#include "qoeplan/predictor.hpp"
#include "qoeplan/qoe.hpp"

namespace qoeplan {

// Per-epoch MAE/MSE series for one model, observed plus forecast continuation.
// Both series must cover [1, max_epochs] of the problem they enter.
struct ModelCurve {
    ModelMeta meta;
    std::vector<double> mae;
    std::vector<double> mse;
    int observed_epochs = 0;  // values past this index came from a forecast
};

struct ModelEntry {
    ModelCurve curve;
    QoeWeights weights;
    QoeScales scales;
};

// One instance of the budget-constrained allocation problem: pick per-model
// epoch counts in [base_epochs, max_epochs], spending at most budget_hours of
// training time, to maximize the summed experience value.
struct AllocationProblem {
    std::vector<ModelEntry> models;
    double budget_hours = 0.0;
    int base_epochs = 500;
    int max_epochs = kDefaultMaxEpochs;
    int epoch_step = 1;

    void validate() const;
    // Cost of running every model at base_epochs; budgets below this are infeasible.
    double min_feasible_budget() const;
};

enum class AllocMethod { manual, ga, random, fcfs, average, exhaustive };

const char* alloc_method_name(AllocMethod m);
AllocMethod alloc_method_from_name(const std::string& name);

struct ModelAllocation {
    std::string name;
    int epochs = 0;
    double train_hours = 0.0;
    FactorVector factors;
    double e_all = 0.0;
};

struct AllocationPlan {
    AllocMethod method = AllocMethod::manual;
    std::uint64_t seed = 0;
    double budget_hours = 0.0;
    std::vector<ModelAllocation> models;
    double total_train_hours = 0.0;
    double total_experience = 0.0;
    bool feasible = true;

    std::vector<int> models_epochs() const;
};

// Genetic-algorithm settings. bits_per_gene 0 means "smallest width that
// encodes (max_epochs - base_epochs) / epoch_step".
struct GaConfig {
    int population_size = 64;
    int generations = 200;
    double crossover_rate = 0.9;
    double mutation_rate = 0.02;  // per bit
    int bits_per_gene = 0;
    int elitism_count = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

// Scores one explicit epoch vector. Over-budget vectors come back with
// feasible=false rather than being repaired.
AllocationPlan evaluate_allocation(const AllocationProblem& problem, std::span<const int> epochs);

// Binary-chromosome GA: tournament selection (size 2), single-point
// crossover, per-bit mutation, elitism. The population is seeded with the
// random/FCFS/average baseline plans (plus any extra_seed_plans), so the
// result never ranks below them. Deterministic in (problem, config).
AllocationPlan ga_allocate(const AllocationProblem& problem, const GaConfig& config,
                           std::span<const std::vector<int>> extra_seed_plans = {});

// Baselines: uniform random epoch_step grants, declared-order fill, and an
// equal split of the spare time budget.
AllocationPlan random_allocate(const AllocationProblem& problem, std::uint64_t seed);
AllocationPlan fcfs_allocate(const AllocationProblem& problem);
AllocationPlan average_allocate(const AllocationProblem& problem);

// Brute-force oracle over the grid {base, base+grid_step, ..., max} per model.
// Ties break toward topping up earlier-declared models. The grid size
// (points^models) is capped at 10^7.
AllocationPlan exhaustive_allocate(const AllocationProblem& problem, int grid_step);

struct SweepRequest {
    std::vector<double> budgets;
    std::vector<AllocMethod> methods;
    std::vector<std::uint64_t> seeds = {0};
    int exhaustive_grid_step = 50;
    GaConfig ga;
};

struct SweepRow {
    double budget_hours = 0.0;
    AllocMethod method = AllocMethod::manual;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;  // errc name when !ok
    std::optional<AllocationPlan> plan;
    std::string w_variant;  // set by the CLI when sweeping weight variants
};

struct SweepTable {
    std::vector<std::string> model_names;
    std::vector<SweepRow> rows;

    bool all_ok() const;
    // Mean total over the ok rows of one (budget, method) cell; empty if none.
    std::optional<double> mean_total(double budget, AllocMethod method) const;
};

// Evaluates every requested (budget, method[, seed]) cell. Stochastic methods
// (ga, random) produce one row per seed; deterministic ones a single row.
// Per-cell failures become flagged rows; the sweep itself never throws for
// them. GA cells are additionally seeded with the random-baseline plans of
// every requested seed so the GA result dominates every emitted baseline row.
SweepTable sweep(const AllocationProblem& problem_template, const SweepRequest& request);

// Plan JSON / sweep CSV serialization.
std::string plan_to_json(const AllocationPlan& plan);
void save_plan(const AllocationPlan& plan, const std::filesystem::path& path);
void save_sweep_csv(const SweepTable& table, const std::filesystem::path& path,
                    bool with_variant_column = false);

}  // namespace qoeplan

#endif

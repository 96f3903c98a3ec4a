#include "qoeplan/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qoeplan/allocator.hpp"
#include "qoeplan/curve.hpp"
#include "qoeplan/predictor.hpp"
#include "qoeplan/problem_io.hpp"
#include "qoeplan/qoe.hpp"

namespace qoeplan {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_budget_range(const std::string& text) {
    // start:end:step in hours, or a comma list of explicit budgets
    if (text.find(':') == std::string::npos) {
        std::vector<double> budgets;
        for (const std::string& tok : split_list(text)) budgets.push_back(std::stod(tok));
        if (budgets.empty()) throw Error(Errc::invalid_argument, "empty budget list");
        return budgets;
    }
    const std::vector<std::string> parts = split_list([&] {
        std::string s = text;
        std::replace(s.begin(), s.end(), ':', ',');
        return s;
    }());
    if (parts.size() != 3)
        throw Error(Errc::invalid_argument, "budget range must be start:end:step");
    const double start = std::stod(parts[0]), end = std::stod(parts[1]),
                 step = std::stod(parts[2]);
    if (!(step > 0.0) || end < start)
        throw Error(Errc::invalid_argument, "budget range must satisfy start <= end, step > 0");
    std::vector<double> budgets;
    for (double b = start; b <= end + 1e-9; b += step) budgets.push_back(b);
    return budgets;
}

std::string sanitize_filename(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (c == ' ' || c == '/' || c == '\\') c = '_';
    return out;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed,
              bool seed_given) {
    const std::vector<ModelSpec> models = load_model_specs(spec_path);
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < models.size(); ++i) {
        ModelSpec spec = models[i];
        if (!spec.has_synth)
            throw Error(Errc::invalid_argument,
                        "model '" + spec.meta.name + "' has no synth section");
        if (seed_given) {
            spec.synth.mae.seed = seed + 3 * i;
            spec.synth.mse.seed = seed + 3 * i + 1;
            spec.synth.loss.seed = seed + 3 * i + 2;
        }
        const TrainingTrace trace = synth_trace(spec.synth, spec.meta, spec.synth.mae.length);
        const fs::path out = fs::path(out_dir) / (sanitize_filename(spec.meta.name) + ".csv");
        save_trace(trace, out, TraceFormat::csv);
        std::cout << out.string() << " (" << trace.size() << " epochs)\n";
    }
    return 0;
}

int cmd_predict(const std::string& trace_path, int observe, int horizon,
                const std::string& method_name, const std::string& metric_name_str,
                std::uint64_t seed, int train_iters, const std::string& out_path,
                const std::string& model_out) {
    const TrainingTrace trace =
        load_trace(trace_path, trace_format_from_path(trace_path));
    const Metric metric = metric_from_name(metric_name_str);
    const std::vector<double> series = trace.series(metric);
    if (observe < 1 || observe > trace.size())
        throw Error(Errc::prefix_too_short,
                    "observe " + std::to_string(observe) + " outside the trace length " +
                        std::to_string(trace.size()));

    const ForecastMethod method = forecast_method_from_name(method_name);
    PredictorConfig config;
    config.seed = seed;
    if (train_iters > 0) config.train_iters = train_iters;

    Forecast fc;
    if (method == ForecastMethod::lstm && !model_out.empty()) {
        const std::span<const double> prefix(series.data(), static_cast<std::size_t>(observe));
        const SequencePredictor predictor = train_predictor(prefix, config);
        save_predictor(predictor, model_out);
        fc = forecast(predictor, prefix, horizon);
    } else {
        fc = forecast_series(series, observe, horizon, method, config);
    }

    const int truth_end = std::min(trace.size(), observe + horizon);
    const int truth_count = std::max(0, truth_end - observe);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + out_path);
    out << "epoch,predicted";
    if (truth_count > 0) out << ",actual,abs_error";
    out << '\n';
    out.precision(17);
    for (int i = 0; i < horizon; ++i) {
        const int epoch = fc.start_epoch + i;
        out << epoch << ',' << fc.values[static_cast<std::size_t>(i)];
        if (i < truth_count) {
            const double actual = series[static_cast<std::size_t>(epoch - 1)];
            out << ',' << actual << ','
                << std::abs(fc.values[static_cast<std::size_t>(i)] - actual);
        } else if (truth_count > 0) {
            out << ",,";
        }
        out << '\n';
    }

    std::cout << "forecast: " << out_path << " (" << horizon << " epochs, method "
              << forecast_method_name(fc.method) << ")\n";
    if (truth_count > 0) {
        const double err =
            mape(std::span<const double>(fc.values.data(), static_cast<std::size_t>(truth_count)),
                 std::span<const double>(series.data() + observe,
                                         static_cast<std::size_t>(truth_count)));
        std::cout << "held-out MAPE over " << truth_count << " epochs: " << err * 100.0 << "%\n";
    }
    return 0;
}

struct PlanArgs {
    std::string problem_path;
    std::string method = "ga";
    double budget = 0.0;
    std::uint64_t seed = 0;
    int grid_step = 50;
    std::string fill = "lstm";
    std::string weights_override;
    std::string scales_override;
    std::string out_path;
    GaConfig ga;
};

AllocationProblem build_from_args(const std::string& problem_path, double budget,
                                  const std::string& fill, const std::string& weights_override,
                                  const std::string& scales_override) {
    const ProblemSpec spec = load_problem_spec(problem_path);
    ProblemBuildOptions options;
    options.budget_hours = budget;
    options.fill_method = forecast_method_from_name(fill);
    if (!weights_override.empty()) options.weights_override = weights_override;
    if (!scales_override.empty()) options.scales_override = scales_override;
    return build_problem(spec, options);
}

int cmd_plan(const PlanArgs& args) {
    const AllocationProblem problem = build_from_args(
        args.problem_path, args.budget, args.fill, args.weights_override, args.scales_override);

    AllocationPlan plan;
    const AllocMethod method = alloc_method_from_name(args.method);
    switch (method) {
        case AllocMethod::ga: {
            GaConfig ga = args.ga;
            ga.seed = args.seed;
            plan = ga_allocate(problem, ga);
            break;
        }
        case AllocMethod::random: plan = random_allocate(problem, args.seed); break;
        case AllocMethod::fcfs: plan = fcfs_allocate(problem); break;
        case AllocMethod::average: plan = average_allocate(problem); break;
        case AllocMethod::exhaustive: plan = exhaustive_allocate(problem, args.grid_step); break;
        case AllocMethod::manual:
            throw Error(Errc::invalid_argument, "choose ga|random|fcfs|average|exhaustive");
    }
    if (!args.out_path.empty()) save_plan(plan, args.out_path);
    std::cout << alloc_method_name(plan.method) << " budget=" << plan.budget_hours
              << "h total_experience=" << plan.total_experience << " epochs=[";
    for (std::size_t m = 0; m < plan.models.size(); ++m)
        std::cout << (m ? "," : "") << plan.models[m].epochs;
    std::cout << "]\n";
    return 0;
}

struct SweepArgs {
    std::string problem_path;
    std::string budgets_text;
    std::string methods_text;
    std::string seeds_text = "0";
    int grid_step = 50;
    std::string fill = "lstm";
    std::string weights_list;  // comma list => w_variant column
    std::string scales_override;
    std::string out_path;
    GaConfig ga;
};

int cmd_sweep(const SweepArgs& args) {
    SweepRequest request;
    request.budgets = parse_budget_range(args.budgets_text);
    for (const std::string& name : split_list(args.methods_text))
        request.methods.push_back(alloc_method_from_name(name));
    if (request.methods.empty())
        throw Error(Errc::invalid_argument, "no methods requested; use --methods ga,random,...");
    request.seeds.clear();
    for (const std::string& tok : split_list(args.seeds_text))
        request.seeds.push_back(std::stoull(tok));
    if (request.seeds.empty()) request.seeds.push_back(0);
    request.exhaustive_grid_step = args.grid_step;
    request.ga = args.ga;

    std::vector<std::string> weight_files = split_list(args.weights_list);
    const bool variants = weight_files.size() > 1;
    if (weight_files.empty()) weight_files.push_back("");

    SweepTable combined;
    for (const std::string& wfile : weight_files) {
        const AllocationProblem problem = build_from_args(args.problem_path, 0.0, args.fill,
                                                          wfile, args.scales_override);
        SweepTable table = sweep(problem, request);
        const std::string variant = wfile.empty() ? "" : fs::path(wfile).stem().string();
        for (SweepRow& row : table.rows) row.w_variant = variant;
        if (combined.model_names.empty()) combined.model_names = table.model_names;
        for (const AllocMethod method : request.methods) {
            for (double budget : request.budgets) {
                const auto mean = table.mean_total(budget, method);
                std::cout << (variant.empty() ? "" : variant + " ") << alloc_method_name(method)
                          << " budget=" << budget << "h mean_total=";
                if (mean)
                    std::cout << *mean << '\n';
                else
                    std::cout << "n/a\n";
            }
        }
        combined.rows.insert(combined.rows.end(), table.rows.begin(), table.rows.end());
    }

    save_sweep_csv(combined, args.out_path, variants);
    std::cout << "sweep: " << args.out_path << " (" << combined.rows.size() << " rows)\n";
    if (!combined.all_ok()) {
        std::cerr << "sweep finished with flagged rows\n";
        return 1;
    }
    return 0;
}

int cmd_score(const std::string& problem_path, const std::string& model_name, int epochs,
              const std::string& fill, const std::string& weights_override,
              const std::string& scales_override, const std::string& out_path) {
    const AllocationProblem problem =
        build_from_args(problem_path, 0.0, fill, weights_override, scales_override);
    const ModelEntry* entry = nullptr;
    for (const ModelEntry& m : problem.models)
        if (m.curve.meta.name == model_name) entry = &m;
    if (!entry) {
        std::string names;
        for (const ModelEntry& m : problem.models) names += " '" + m.curve.meta.name + "'";
        throw Error(Errc::invalid_argument, "model '" + model_name + "' not found; have" + names);
    }

    const auto [factors, e_all] =
        model_experience(entry->curve.mae, entry->curve.mse, entry->curve.meta, epochs,
                         entry->weights, entry->scales, problem.max_epochs);
    std::cout << model_name << " at " << epochs << " epochs: e_mae=" << factors.mae
              << " e_mse=" << factors.mse << " e_train=" << factors.train
              << " e_load=" << factors.load << " e_test=" << factors.test << " E_all=" << e_all
              << '\n';
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw Error(Errc::io_error, "cannot write " + out_path);
        out.precision(17);
        out << "{\n  \"model\": \"" << model_name << "\",\n  \"epochs\": " << epochs
            << ",\n  \"factors\": {\"mae\": " << factors.mae << ", \"mse\": " << factors.mse
            << ", \"train\": " << factors.train << ", \"load\": " << factors.load
            << ", \"test\": " << factors.test << "},\n  \"e_all\": " << e_all << "\n}\n";
    }
    return 0;
}

void add_ga_flags(CLI::App* cmd, GaConfig& ga) {
    cmd->add_option("--ga-population", ga.population_size, "GA population size");
    cmd->add_option("--ga-generations", ga.generations, "GA generations");
    cmd->add_option("--ga-crossover", ga.crossover_rate, "GA crossover rate");
    cmd->add_option("--ga-mutation", ga.mutation_rate, "GA per-bit mutation rate");
    cmd->add_option("--ga-elitism", ga.elitism_count, "GA elite count");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Training-budget planner: forecast curves, score experience, allocate time"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate synthetic training traces");
    std::string synth_spec, synth_out = ".";
    std::uint64_t synth_seed = 0;
    synth->add_option("--spec", synth_spec, "model spec JSON")->required();
    synth->add_option("--out", synth_out, "output directory")->required();
    auto* seed_opt = synth->add_option("--seed", synth_seed, "override generator seeds");

    // predict
    auto* predict = app.add_subcommand("predict", "Forecast a training curve");
    std::string p_trace, p_method = "lstm", p_metric = "mae", p_out = "forecast.csv", p_model_out;
    int p_observe = 500, p_horizon = 500, p_iters = 0;
    std::uint64_t p_seed = 0;
    predict->add_option("--trace", p_trace, "trace CSV/JSON")->required();
    predict->add_option("--observe", p_observe, "observed prefix length");
    predict->add_option("--horizon", p_horizon, "epochs to forecast");
    predict->add_option("--method", p_method, "lstm|curvefit");
    predict->add_option("--metric", p_metric, "mae|mse|loss");
    predict->add_option("--seed", p_seed, "training seed");
    predict->add_option("--train-iters", p_iters, "override training iterations");
    predict->add_option("--out", p_out, "forecast CSV path");
    predict->add_option("--save-model", p_model_out, "write trained weights JSON");

    // plan
    auto* plan = app.add_subcommand("plan", "Allocate a budget across models");
    PlanArgs plan_args;
    plan->add_option("--problem", plan_args.problem_path, "problem JSON")->required();
    plan->add_option("--method", plan_args.method, "ga|random|fcfs|average|exhaustive");
    plan->add_option("--budget", plan_args.budget, "total training hours")->required();
    plan->add_option("--seed", plan_args.seed, "seed for stochastic methods");
    plan->add_option("--grid-step", plan_args.grid_step, "exhaustive grid step");
    plan->add_option("--fill", plan_args.fill, "forecast fill method: lstm|curvefit");
    plan->add_option("--weights", plan_args.weights_override, "weights JSON override");
    plan->add_option("--scales", plan_args.scales_override, "scales JSON override");
    plan->add_option("--out", plan_args.out_path, "plan JSON path");
    add_ga_flags(plan, plan_args.ga);

    // sweep
    auto* sw = app.add_subcommand("sweep", "Run a budget x method sweep");
    SweepArgs sweep_args;
    sw->add_option("--problem", sweep_args.problem_path, "problem JSON")->required();
    sw->add_option("--budgets", sweep_args.budgets_text, "start:end:step or comma list")
        ->required();
    sw->add_option("--methods", sweep_args.methods_text, "comma list of methods")->required();
    sw->add_option("--seeds", sweep_args.seeds_text, "comma list of seeds");
    sw->add_option("--grid-step", sweep_args.grid_step, "exhaustive grid step");
    sw->add_option("--fill", sweep_args.fill, "forecast fill method");
    sw->add_option("--weights", sweep_args.weights_list,
                   "weights JSON (comma list adds a w_variant column)");
    sw->add_option("--scales", sweep_args.scales_override, "scales JSON override");
    sw->add_option("--out", sweep_args.out_path, "sweep CSV path")->required();
    add_ga_flags(sw, sweep_args.ga);

    // score
    auto* score = app.add_subcommand("score", "Experience value of one model at one budget");
    std::string s_problem, s_model, s_fill = "lstm", s_weights, s_scales, s_out;
    int s_epochs = 0;
    score->add_option("--problem", s_problem, "problem JSON")->required();
    score->add_option("--model", s_model, "model name")->required();
    score->add_option("--epochs", s_epochs, "epoch budget")->required();
    score->add_option("--fill", s_fill, "forecast fill method");
    score->add_option("--weights", s_weights, "weights JSON override");
    score->add_option("--scales", s_scales, "scales JSON override");
    score->add_option("--out", s_out, "score JSON path");

    std::vector<const char*> argv;
    argv.push_back("qoeplan");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*synth) return cmd_synth(synth_spec, synth_out, synth_seed, seed_opt->count() > 0);
        if (*predict)
            return cmd_predict(p_trace, p_observe, p_horizon, p_method, p_metric, p_seed, p_iters,
                               p_out, p_model_out);
        if (*plan) return cmd_plan(plan_args);
        if (*sw) return cmd_sweep(sweep_args);
        if (*score) return cmd_score(s_problem, s_model, s_epochs, s_fill, s_weights, s_scales, s_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace qoeplan

#include "qoeplan/problem_io.hpp"

#include <fstream>

#include <json.hpp>

namespace qoeplan {

namespace {

using nlohmann::ordered_json;

SynthCurveSpec synth_spec_from_json(const ordered_json& j, const std::string& model_name) {
    SynthCurveSpec spec;
    spec.m0 = j.at("m0").get<double>();
    spec.m_inf = j.at("m_inf").get<double>();
    spec.tau = j.at("tau").get<double>();
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.length = j.value("length", kDefaultMaxEpochs);
    spec.seed = j.value("seed", 0ULL);
    try {
        spec.validate();
    } catch (const Error& e) {
        throw Error(e.code(), "model '" + model_name + "': " + e.what());
    }
    return spec;
}

ModelSpec model_spec_from_json(const ordered_json& j, const std::filesystem::path& base_dir) {
    ModelSpec spec;
    const auto& mj = j.at("meta");
    spec.meta.name = mj.at("name").get<std::string>();
    spec.meta.total_train_hours_at_max = mj.at("total_train_hours_at_max").get<double>();
    spec.meta.t_load_s = mj.at("t_load_s").get<double>();
    spec.meta.t_test_s = mj.at("t_test_s").get<double>();
    spec.meta.model_size_mb = mj.value("model_size_mb", 0.0);
    spec.meta.validate();

    const bool has_trace = j.contains("trace") && !j["trace"].is_null();
    const bool has_synth = j.contains("synth") && !j["synth"].is_null();
    if (has_trace == has_synth)
        throw Error(Errc::parse_error,
                    "model '" + spec.meta.name + "': exactly one of trace/synth is required");

    if (has_trace) {
        std::filesystem::path p = j["trace"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        spec.trace_path = p;
    } else {
        const auto& sj = j["synth"];
        spec.has_synth = true;
        if (sj.contains("mae")) {
            spec.synth.mae = synth_spec_from_json(sj.at("mae"), spec.meta.name);
            spec.synth.mse = synth_spec_from_json(sj.at("mse"), spec.meta.name);
            spec.synth.loss = synth_spec_from_json(sj.at("loss"), spec.meta.name);
        } else {
            // flat single-metric spec: derive the MSE/loss analogs
            spec.synth = derive_trace_synth(synth_spec_from_json(sj, spec.meta.name));
        }
    }
    return spec;
}

ordered_json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }
    return j;
}

}  // namespace

ProblemSpec load_problem_spec(const std::filesystem::path& path) {
    const ordered_json j = read_json_file(path);
    const std::filesystem::path base_dir = path.parent_path();

    ProblemSpec spec;
    if (!j.contains("models") || !j["models"].is_array() || j["models"].empty())
        throw Error(Errc::parse_error, path.string() + ": no models");
    for (const auto& mj : j["models"]) spec.models.push_back(model_spec_from_json(mj, base_dir));
    spec.base_epochs = j.value("base_epochs", 500);
    spec.max_epochs = j.value("max_epochs", kDefaultMaxEpochs);
    spec.epoch_step = j.value("epoch_step", 1);
    if (j.contains("weights")) {
        std::filesystem::path p = j["weights"].get<std::string>();
        spec.weights_path = p.is_relative() ? base_dir / p : p;
    }
    if (j.contains("scales")) {
        std::filesystem::path p = j["scales"].get<std::string>();
        spec.scales_path = p.is_relative() ? base_dir / p : p;
    }
    return spec;
}

std::vector<ModelSpec> load_model_specs(const std::filesystem::path& path) {
    return load_problem_spec(path).models;
}

TrainingTrace materialize_trace(const ModelSpec& spec, int max_epochs) {
    if (spec.has_synth) return synth_trace(spec.synth, spec.meta, max_epochs);
    TrainingTrace trace =
        load_trace(spec.trace_path, trace_format_from_path(spec.trace_path));
    trace.meta = spec.meta;  // problem metadata wins over CSV placeholders
    trace.max_epochs = std::max(trace.max_epochs, max_epochs);
    return trace;
}

AllocationProblem build_problem(const ProblemSpec& spec, const ProblemBuildOptions& options) {
    const std::filesystem::path weights_path =
        options.weights_override.empty() ? spec.weights_path : options.weights_override;
    const std::filesystem::path scales_path =
        options.scales_override.empty() ? spec.scales_path : options.scales_override;
    if (weights_path.empty()) throw Error(Errc::parse_error, "problem declares no weights file");
    if (scales_path.empty()) throw Error(Errc::parse_error, "problem declares no scales file");

    const QoeConfig wcfg = load_qoe_config(weights_path);
    if (!wcfg.has_weights)
        throw Error(Errc::parse_error, weights_path.string() + " has no weights section");
    const QoeConfig scfg = load_qoe_config(scales_path);
    if (!scfg.has_scales)
        throw Error(Errc::parse_error, scales_path.string() + " has no scales section");

    AllocationProblem problem;
    problem.budget_hours = options.budget_hours;
    problem.base_epochs = spec.base_epochs;
    problem.max_epochs = spec.max_epochs;
    problem.epoch_step = spec.epoch_step;

    for (const ModelSpec& model : spec.models) {
        const TrainingTrace trace = materialize_trace(model, spec.max_epochs);
        ModelEntry entry;
        entry.curve.meta = model.meta;
        entry.curve.mae = trace.series(Metric::mae);
        entry.curve.mse = trace.series(Metric::mse);
        entry.curve.observed_epochs = trace.size();
        entry.weights = wcfg.weights;
        entry.scales = scfg.scales;

        // forecast continuation when the observed curve stops short
        const int missing = spec.max_epochs - trace.size();
        if (missing > 0) {
            for (std::vector<double>* series : {&entry.curve.mae, &entry.curve.mse}) {
                const Forecast fc = forecast_series(*series, trace.size(), missing,
                                                    options.fill_method, options.predictor);
                series->insert(series->end(), fc.values.begin(), fc.values.end());
            }
        }
        problem.models.push_back(std::move(entry));
    }
    problem.validate();
    return problem;
}

}  // namespace qoeplan

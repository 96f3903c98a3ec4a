#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qoeplan/allocator.hpp"
#include "qoeplan/curve.hpp"
#include "qoeplan/predictor.hpp"
#include "qoeplan/problem_io.hpp"
#include "qoeplan/qoe.hpp"

namespace py = pybind11;
using namespace qoeplan;

PYBIND11_MODULE(qoeplan_py, m) {
    m.doc() = "Training-budget planner: curve synthesis, forecasting, QoE scoring, allocation";

    py::register_exception<Error>(m, "QoeplanError");

    // curve
    py::class_<EpochRecord>(m, "EpochRecord")
        .def(py::init<>())
        .def_readwrite("epoch", &EpochRecord::epoch)
        .def_readwrite("loss", &EpochRecord::loss)
        .def_readwrite("mae", &EpochRecord::mae)
        .def_readwrite("mse", &EpochRecord::mse);

    py::class_<ModelMeta>(m, "ModelMeta")
        .def(py::init<>())
        .def(py::init([](const std::string& name, double hours, double t_load, double t_test,
                         double size_mb) {
                 return ModelMeta{name, hours, t_load, t_test, size_mb};
             }),
             py::arg("name"), py::arg("total_train_hours_at_max"), py::arg("t_load_s") = 0.0,
             py::arg("t_test_s") = 0.0, py::arg("model_size_mb") = 0.0)
        .def_readwrite("name", &ModelMeta::name)
        .def_readwrite("total_train_hours_at_max", &ModelMeta::total_train_hours_at_max)
        .def_readwrite("t_load_s", &ModelMeta::t_load_s)
        .def_readwrite("t_test_s", &ModelMeta::t_test_s)
        .def_readwrite("model_size_mb", &ModelMeta::model_size_mb);

    py::class_<TrainingTrace>(m, "TrainingTrace")
        .def(py::init<>())
        .def_readwrite("meta", &TrainingTrace::meta)
        .def_readwrite("records", &TrainingTrace::records)
        .def_readwrite("max_epochs", &TrainingTrace::max_epochs)
        .def("size", &TrainingTrace::size)
        .def("series",
             [](const TrainingTrace& t, const std::string& metric) {
                 return t.series(metric_from_name(metric));
             },
             py::arg("metric"));

    py::class_<SynthCurveSpec>(m, "SynthCurveSpec")
        .def(py::init([](double m0, double m_inf, double tau, double noise_sigma, int length,
                         std::uint64_t seed) {
                 return SynthCurveSpec{m0, m_inf, tau, noise_sigma, length, seed};
             }),
             py::arg("m0"), py::arg("m_inf"), py::arg("tau"), py::arg("noise_sigma") = 0.0,
             py::arg("length") = kDefaultMaxEpochs, py::arg("seed") = 0)
        .def_readwrite("m0", &SynthCurveSpec::m0)
        .def_readwrite("m_inf", &SynthCurveSpec::m_inf)
        .def_readwrite("tau", &SynthCurveSpec::tau)
        .def_readwrite("noise_sigma", &SynthCurveSpec::noise_sigma)
        .def_readwrite("length", &SynthCurveSpec::length)
        .def_readwrite("seed", &SynthCurveSpec::seed)
        .def("clean_value", &SynthCurveSpec::clean_value, py::arg("epoch"));

    m.def("synth_series", &synth_series, py::arg("spec"));
    m.def("synth_trace",
          [](const SynthCurveSpec& spec, const ModelMeta& meta, int max_epochs) {
              return synth_trace(spec, meta, max_epochs);
          },
          py::arg("spec"), py::arg("meta"), py::arg("max_epochs") = kDefaultMaxEpochs);
    m.def("load_trace",
          [](const std::filesystem::path& path) {
              return load_trace(path, trace_format_from_path(path));
          },
          py::arg("path"));
    m.def("save_trace",
          [](const TrainingTrace& trace, const std::filesystem::path& path) {
              save_trace(trace, path, trace_format_from_path(path));
          },
          py::arg("trace"), py::arg("path"));
    m.def("epoch_to_time", &epoch_to_time, py::arg("meta"), py::arg("epochs"),
          py::arg("max_epochs") = kDefaultMaxEpochs);
    m.def("best_so_far",
          [](const TrainingTrace& trace, int epoch, const std::string& metric) {
              return best_so_far(trace, epoch, metric_from_name(metric));
          },
          py::arg("trace"), py::arg("epoch"), py::arg("metric") = "mae");

    // predictor
    py::class_<PredictorConfig>(m, "PredictorConfig")
        .def(py::init<>())
        .def_readwrite("window", &PredictorConfig::window)
        .def_readwrite("hidden_size", &PredictorConfig::hidden_size)
        .def_readwrite("dropout_rate", &PredictorConfig::dropout_rate)
        .def_readwrite("learning_rate", &PredictorConfig::learning_rate)
        .def_readwrite("grad_clip_norm", &PredictorConfig::grad_clip_norm)
        .def_readwrite("train_iters", &PredictorConfig::train_iters)
        .def_readwrite("seed", &PredictorConfig::seed);

    py::class_<SequencePredictor>(m, "SequencePredictor")
        .def_readonly("window", &SequencePredictor::window)
        .def_readonly("hidden", &SequencePredictor::hidden)
        .def_readonly("norm_mean", &SequencePredictor::norm_mean)
        .def_readonly("norm_std", &SequencePredictor::norm_std)
        .def_readonly("final_train_rmse", &SequencePredictor::final_train_rmse);

    py::class_<Forecast>(m, "Forecast")
        .def_readonly("start_epoch", &Forecast::start_epoch)
        .def_readonly("values", &Forecast::values)
        .def_property_readonly("method",
                               [](const Forecast& f) { return forecast_method_name(f.method); });

    py::class_<SaturatingFit>(m, "SaturatingFit")
        .def_readonly("m0", &SaturatingFit::m0)
        .def_readonly("m_inf", &SaturatingFit::m_inf)
        .def_readonly("tau", &SaturatingFit::tau)
        .def_readonly("residual_rmse", &SaturatingFit::residual_rmse)
        .def_readonly("degenerate", &SaturatingFit::degenerate)
        .def("value_at", &SaturatingFit::value_at, py::arg("epoch"));

    m.def("train_predictor",
          [](const std::vector<double>& prefix, const PredictorConfig& config) {
              return train_predictor(prefix, config);
          },
          py::arg("prefix"), py::arg("config") = PredictorConfig{});
    m.def("forecast",
          [](const SequencePredictor& p, const std::vector<double>& prefix, int horizon) {
              return forecast(p, prefix, horizon);
          },
          py::arg("predictor"), py::arg("prefix"), py::arg("horizon"));
    m.def("gradient_check",
          [](const PredictorConfig& config, const std::vector<double>& probe) {
              return gradient_check(config, probe);
          },
          py::arg("config"), py::arg("probe"));
    m.def("fit_saturating_curve",
          [](const std::vector<double>& series) { return fit_saturating_curve(series); },
          py::arg("series"));
    m.def("forecast_series",
          [](const std::vector<double>& series, int observe, int horizon,
             const std::string& method, const PredictorConfig& config) {
              return forecast_series(series, observe, horizon, forecast_method_from_name(method),
                                     config);
          },
          py::arg("series"), py::arg("observe"), py::arg("horizon"), py::arg("method") = "lstm",
          py::arg("config") = PredictorConfig{});
    m.def("mape",
          [](const std::vector<double>& predicted, const std::vector<double>& actual) {
              return mape(predicted, actual);
          },
          py::arg("predicted"), py::arg("actual"));

    // qoe
    py::class_<QoeWeights>(m, "QoeWeights")
        .def(py::init<>())
        .def(py::init([](double mae, double mse, double train, double load, double test) {
                 return QoeWeights{mae, mse, train, load, test};
             }),
             py::arg("mae"), py::arg("mse"), py::arg("train"), py::arg("load"), py::arg("test"))
        .def_readwrite("mae", &QoeWeights::mae)
        .def_readwrite("mse", &QoeWeights::mse)
        .def_readwrite("train", &QoeWeights::train)
        .def_readwrite("load", &QoeWeights::load)
        .def_readwrite("test", &QoeWeights::test)
        .def("validate", &QoeWeights::validate);

    py::class_<ScalePair>(m, "ScalePair")
        .def(py::init([](double v0, double s) { return ScalePair{v0, s}; }), py::arg("v0"),
             py::arg("s"))
        .def_readwrite("v0", &ScalePair::v0)
        .def_readwrite("s", &ScalePair::s);

    py::class_<QoeScales>(m, "QoeScales")
        .def(py::init<>())
        .def_readwrite("mae", &QoeScales::mae)
        .def_readwrite("mse", &QoeScales::mse)
        .def_readwrite("train_hours", &QoeScales::train_hours)
        .def_readwrite("load_seconds", &QoeScales::load_seconds)
        .def_readwrite("test_seconds", &QoeScales::test_seconds);

    py::class_<FactorVector>(m, "FactorVector")
        .def_readonly("mae", &FactorVector::mae)
        .def_readonly("mse", &FactorVector::mse)
        .def_readonly("train", &FactorVector::train)
        .def_readonly("load", &FactorVector::load)
        .def_readonly("test", &FactorVector::test);

    m.def("factor_experience", &factor_experience, py::arg("value"), py::arg("v0"), py::arg("s"));
    m.def("total_experience", &total_experience, py::arg("factors"), py::arg("weights"));
    m.def("model_experience",
          [](const std::vector<double>& mae_series, const std::vector<double>& mse_series,
             const ModelMeta& meta, int epochs, const QoeWeights& weights, const QoeScales& scales,
             int max_epochs) {
              return model_experience(mae_series, mse_series, meta, epochs, weights, scales,
                                      max_epochs);
          },
          py::arg("mae_series"), py::arg("mse_series"), py::arg("meta"), py::arg("epochs"),
          py::arg("weights"), py::arg("scales"), py::arg("max_epochs") = kDefaultMaxEpochs);

    // allocator
    py::class_<ModelCurve>(m, "ModelCurve")
        .def(py::init<>())
        .def_readwrite("meta", &ModelCurve::meta)
        .def_readwrite("mae", &ModelCurve::mae)
        .def_readwrite("mse", &ModelCurve::mse)
        .def_readwrite("observed_epochs", &ModelCurve::observed_epochs);

    py::class_<ModelEntry>(m, "ModelEntry")
        .def(py::init<>())
        .def_readwrite("curve", &ModelEntry::curve)
        .def_readwrite("weights", &ModelEntry::weights)
        .def_readwrite("scales", &ModelEntry::scales);

    py::class_<AllocationProblem>(m, "AllocationProblem")
        .def(py::init<>())
        .def_readwrite("models", &AllocationProblem::models)
        .def_readwrite("budget_hours", &AllocationProblem::budget_hours)
        .def_readwrite("base_epochs", &AllocationProblem::base_epochs)
        .def_readwrite("max_epochs", &AllocationProblem::max_epochs)
        .def_readwrite("epoch_step", &AllocationProblem::epoch_step)
        .def("min_feasible_budget", &AllocationProblem::min_feasible_budget)
        .def("validate", &AllocationProblem::validate);

    py::class_<GaConfig>(m, "GaConfig")
        .def(py::init<>())
        .def_readwrite("population_size", &GaConfig::population_size)
        .def_readwrite("generations", &GaConfig::generations)
        .def_readwrite("crossover_rate", &GaConfig::crossover_rate)
        .def_readwrite("mutation_rate", &GaConfig::mutation_rate)
        .def_readwrite("bits_per_gene", &GaConfig::bits_per_gene)
        .def_readwrite("elitism_count", &GaConfig::elitism_count)
        .def_readwrite("seed", &GaConfig::seed);

    py::class_<ModelAllocation>(m, "ModelAllocation")
        .def_readonly("name", &ModelAllocation::name)
        .def_readonly("epochs", &ModelAllocation::epochs)
        .def_readonly("train_hours", &ModelAllocation::train_hours)
        .def_readonly("factors", &ModelAllocation::factors)
        .def_readonly("e_all", &ModelAllocation::e_all);

    py::class_<AllocationPlan>(m, "AllocationPlan")
        .def_property_readonly("method",
                               [](const AllocationPlan& p) { return alloc_method_name(p.method); })
        .def_readonly("seed", &AllocationPlan::seed)
        .def_readonly("budget_hours", &AllocationPlan::budget_hours)
        .def_readonly("models", &AllocationPlan::models)
        .def_readonly("total_train_hours", &AllocationPlan::total_train_hours)
        .def_readonly("total_experience", &AllocationPlan::total_experience)
        .def_readonly("feasible", &AllocationPlan::feasible)
        .def("models_epochs", &AllocationPlan::models_epochs)
        .def("to_json", &plan_to_json);

    m.def("evaluate_allocation",
          [](const AllocationProblem& problem, const std::vector<int>& epochs) {
              return evaluate_allocation(problem, epochs);
          },
          py::arg("problem"), py::arg("epochs"));
    m.def("ga_allocate",
          [](const AllocationProblem& problem, const GaConfig& config) {
              return ga_allocate(problem, config);
          },
          py::arg("problem"), py::arg("config") = GaConfig{});
    m.def("random_allocate", &random_allocate, py::arg("problem"), py::arg("seed") = 0);
    m.def("fcfs_allocate", &fcfs_allocate, py::arg("problem"));
    m.def("average_allocate", &average_allocate, py::arg("problem"));
    m.def("exhaustive_allocate", &exhaustive_allocate, py::arg("problem"),
          py::arg("grid_step") = 50);

    // problem files
    m.def("load_problem",
          [](const std::filesystem::path& path, double budget_hours, const std::string& fill,
             const PredictorConfig& predictor) {
              ProblemBuildOptions options;
              options.budget_hours = budget_hours;
              options.fill_method = forecast_method_from_name(fill);
              options.predictor = predictor;
              return build_problem(load_problem_spec(path), options);
          },
          py::arg("path"), py::arg("budget_hours"), py::arg("fill") = "lstm",
          py::arg("predictor") = PredictorConfig{});
}

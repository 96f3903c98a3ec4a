#ifndef QOEPLAN_PROBLEM_IO_HPP
#define QOEPLAN_PROBLEM_IO_HPP

#include <filesystem>
#include <vector>

#include "qoeplan/allocator.hpp"
#include "qoeplan/curve.hpp"
#include "qoeplan/predictor.hpp"

namespace qoeplan {

// One entry of a synth/problem file: metadata plus either a trace file
// reference or an inline generator spec (exactly one of the two).
struct ModelSpec {
    ModelMeta meta;
    std::filesystem::path trace_path;  // empty when synthetic
    bool has_synth = false;
    TraceSynthSpec synth;
};

struct ProblemSpec {
    std::vector<ModelSpec> models;
    int base_epochs = 500;
    int max_epochs = kDefaultMaxEpochs;
    int epoch_step = 1;
    std::filesystem::path weights_path;
    std::filesystem::path scales_path;
};

// Parses the problem JSON. Relative trace/weights/scales paths resolve
// against the problem file's directory.
ProblemSpec load_problem_spec(const std::filesystem::path& path);

// Same model-list format without weights/scales; used by the synth command.
std::vector<ModelSpec> load_model_specs(const std::filesystem::path& path);

struct ProblemBuildOptions {
    double budget_hours = 0.0;
    ForecastMethod fill_method = ForecastMethod::lstm;  // for traces shorter than max_epochs
    PredictorConfig predictor;
    // Optional overrides of the files referenced by the problem spec.
    std::filesystem::path weights_override;
    std::filesystem::path scales_override;
};

// Materializes an AllocationProblem: loads or synthesizes every trace, fills
// curves past the observed range with forecasts, and attaches weights/scales.
AllocationProblem build_problem(const ProblemSpec& spec, const ProblemBuildOptions& options);

TrainingTrace materialize_trace(const ModelSpec& spec, int max_epochs);

}  // namespace qoeplan

#endif

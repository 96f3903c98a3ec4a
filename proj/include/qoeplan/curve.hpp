#ifndef QOEPLAN_CURVE_HPP
#define QOEPLAN_CURVE_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qoeplan/error.hpp"

namespace qoeplan {

inline constexpr int kDefaultMaxEpochs = 1000;

// One measured training epoch. Epochs are 1-based and contiguous within a trace.
struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double mae = 0.0;
    double mse = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

// Per-model timing/size metadata. total_train_hours_at_max is the wall-clock
// cost of running max_epochs epochs; the per-epoch rate is assumed constant.
struct ModelMeta {
    std::string name;
    double total_train_hours_at_max = 1.0;
    double t_load_s = 0.0;
    double t_test_s = 0.0;
    double model_size_mb = 0.0;  // informational only

    void validate() const;
    bool operator==(const ModelMeta&) const = default;
};

enum class Metric { loss, mae, mse };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);

struct TrainingTrace {
    ModelMeta meta;
    std::vector<EpochRecord> records;
    int max_epochs = kDefaultMaxEpochs;

    int size() const { return static_cast<int>(records.size()); }
    std::vector<double> series(Metric m) const;

    // Checks record contiguity (1..N), nonnegativity and the length cap.
    void validate() const;
    bool operator==(const TrainingTrace&) const = default;
};

// Saturating-exponential generator for one metric series:
//   value(k) = m_inf + (m0 - m_inf) * exp(-k / tau) + noise_k,  clamped at 0.
struct SynthCurveSpec {
    double m0 = 1.0;
    double m_inf = 0.0;
    double tau = 1.0;
    double noise_sigma = 0.0;
    int length = kDefaultMaxEpochs;
    std::uint64_t seed = 0;

    void validate() const;
    double clean_value(int epoch) const;  // noiseless closed form at a 1-based epoch
};

// Generator triple for a full trace; seeds are independent per series.
struct TraceSynthSpec {
    SynthCurveSpec mae;
    SynthCurveSpec mse;
    SynthCurveSpec loss;

    void validate() const;
};

enum class TraceFormat { csv, json };

// Infers csv/json from the file extension, defaulting to csv.
TraceFormat trace_format_from_path(const std::filesystem::path& path);

// Reads a trace and validates every invariant. CSV files carry records only;
// the returned meta is a placeholder named after the file stem. JSON files
// round-trip meta and max_epochs as well.
TrainingTrace load_trace(const std::filesystem::path& path, TraceFormat format);

void save_trace(const TrainingTrace& trace, const std::filesystem::path& path,
                TraceFormat format);

// Generates one metric series from the spec. Deterministic in (spec).
std::vector<double> synth_series(const SynthCurveSpec& spec);

// Generates a full trace from three per-metric specs (all lengths must agree).
TrainingTrace synth_trace(const TraceSynthSpec& spec, const ModelMeta& meta,
                          int max_epochs = kDefaultMaxEpochs);

// Expands a single-metric spec into a trace triple: the MSE analog scales the
// MAE parameters by 1.7, the loss analog by 0.01; seeds offset by 1 and 2.
TraceSynthSpec derive_trace_synth(const SynthCurveSpec& mae_spec);

// Single-spec convenience: `spec` drives the MAE series; the MSE and loss
// series use derived analogs (x1.7 and x0.01 of the MAE parameters, seeds
// offset by 1 and 2). Deterministic in (spec, meta).
TrainingTrace synth_trace(const SynthCurveSpec& spec, const ModelMeta& meta,
                          int max_epochs = kDefaultMaxEpochs);

// Linear epoch -> wall-clock mapping: epochs * (hours_at_max / max_epochs).
double epoch_to_time(const ModelMeta& meta, int epochs, int max_epochs);

// Minimum of the chosen metric over records 1..epoch (best checkpoint so far).
double best_so_far(const TrainingTrace& trace, int epoch, Metric metric);

// Running minimum of a raw series; out[i] = min(values[0..i]).
std::vector<double> prefix_min(std::span<const double> values);

}  // namespace qoeplan

#endif

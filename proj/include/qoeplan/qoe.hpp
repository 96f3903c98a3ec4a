#ifndef QOEPLAN_QOE_HPP
#define QOEPLAN_QOE_HPP

#include <filesystem>
#include <span>
#include <utility>

#include "qoeplan/curve.hpp"

namespace qoeplan {

// User weights over the five experience factors, in the fixed order
// (mae, mse, train, load, test). Must be nonnegative and sum to 1.
struct QoeWeights {
    double mae = 0.2;
    double mse = 0.2;
    double train = 0.2;
    double load = 0.2;
    double test = 0.2;

    void validate() const;
    bool operator==(const QoeWeights&) const = default;
};

// Normalization of one factor: experience is 1 at values <= v0 and decays
// with tolerance width s beyond it.
struct ScalePair {
    double v0 = 0.0;
    double s = 1.0;
};

struct QoeScales {
    ScalePair mae;
    ScalePair mse;
    ScalePair train_hours;
    ScalePair load_seconds;
    ScalePair test_seconds;

    void validate() const;
};

// The five bounded experience factors, each in (0, 1].
struct FactorVector {
    double mae = 1.0;
    double mse = 1.0;
    double train = 1.0;
    double load = 1.0;
    double test = 1.0;
};

// Raw quantities a schedule produces for one model at one epoch budget.
struct RawQuantities {
    double best_mae = 0.0;
    double best_mse = 0.0;
    double train_hours = 0.0;
    double load_seconds = 0.0;
    double test_seconds = 0.0;
};

// exp(-max(0, value - v0) / s): 1 at or below the reference, strictly
// decreasing beyond it, never 0.
double factor_experience(double value, double v0, double s);

FactorVector score_factors(const RawQuantities& raw, const QoeScales& scales);

// Weighted sum of the five factors; in (0, 1] for valid inputs.
double total_experience(const FactorVector& factors, const QoeWeights& weights);

// Full per-model pipeline: best-so-far MAE/MSE over the first `epochs` values,
// linear train-time mapping, then factor scoring and aggregation. The series
// span epochs 1..len and must cover `epochs`.
std::pair<FactorVector, double> model_experience(std::span<const double> mae_series,
                                                 std::span<const double> mse_series,
                                                 const ModelMeta& meta, int epochs,
                                                 const QoeWeights& weights,
                                                 const QoeScales& scales, int max_epochs);

// {"weights": {...}, "scales": {"mae": {"v0":..,"s":..}, ...}} file handling.
// Both sections are optional per file; absent sections keep the defaults.
struct QoeConfig {
    QoeWeights weights;
    QoeScales scales;
    bool has_weights = false;
    bool has_scales = false;
};

QoeConfig load_qoe_config(const std::filesystem::path& path);
void save_qoe_config(const QoeConfig& config, const std::filesystem::path& path);

}  // namespace qoeplan

#endif

#ifndef QOEPLAN_PREDICTOR_HPP
#define QOEPLAN_PREDICTOR_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qoeplan/error.hpp"

namespace qoeplan {

// Hyperparameters of the two-layer recurrent forecaster. Defaults train a
// 500-epoch prefix in a few seconds and were validated against the
// saturating-curve fit.
struct PredictorConfig {
    int window = 20;          // input subsequence length
    int hidden_size = 16;     // units per recurrent layer
    int layers = 2;           // fixed; kept for serialization clarity
    double dropout_rate = 0.1;
    double learning_rate = 0.1;
    double grad_clip_norm = 1.0;
    int train_iters = 400;    // full-batch gradient steps
    std::uint64_t seed = 0;

    void validate() const;
};

enum class ForecastMethod { lstm, curvefit };

const char* forecast_method_name(ForecastMethod m);
ForecastMethod forecast_method_from_name(const std::string& name);

// Predicted continuation of a metric series. values[i] belongs to epoch
// start_epoch + i; all values are finite and >= 0.
struct Forecast {
    int start_epoch = 1;
    std::vector<double> values;
    ForecastMethod method = ForecastMethod::lstm;
};

// A trained two-layer LSTM with a ReLU feature map feeding the scalar output
// projection. Weights are flat row-major arrays, gate order (i, f, g, o).
// Immutable once trained; safe for concurrent forecasting.
struct SequencePredictor {
    int window = 0;
    int hidden = 0;
    std::vector<double> params;   // [w_ih1|w_hh1|b1|w_ih2|w_hh2|b2|w_out|b_out]
    double norm_mean = 0.0;
    double norm_std = 1.0;
    double final_train_rmse = 0.0;  // one-step RMSE on the training prefix, normalized units
};

// Full-batch gradient descent on one-step-ahead squared error over all
// sliding windows of the normalized prefix. Deterministic in (prefix, config).
SequencePredictor train_predictor(std::span<const double> prefix, const PredictorConfig& config);

// Closed-loop autoregressive rollout: each prediction (de-normalized, clamped
// at 0) is appended to the window for the next step. Dropout is off.
Forecast forecast(const SequencePredictor& predictor, std::span<const double> prefix,
                  int horizon);

// Compares analytic gradients of the one-step training loss against central
// finite differences (step 1e-5) for every parameter and returns the largest
// relative error, with the denominator floored at 1e-6.
double gradient_check(const PredictorConfig& config, std::span<const double> probe);

// Least-squares fit of m_inf + (m0 - m_inf) * exp(-k / tau) to a series
// indexed k = 1..n. Fit by log-spaced grid search over tau with a closed-form
// linear solve per candidate, then golden-section refinement.
struct SaturatingFit {
    double m0 = 0.0;
    double m_inf = 0.0;
    double tau = 1.0;
    double residual_rmse = 0.0;
    bool degenerate = false;  // all-equal input; tau is arbitrary

    double value_at(int epoch) const;
};

SaturatingFit fit_saturating_curve(std::span<const double> series);

// Forecast by evaluating a saturating fit past the observed range.
Forecast forecast_curvefit(const SaturatingFit& fit, int observed_len, int horizon);

// Trains on the first `observe` values of `series` with the chosen method and
// forecasts the next `horizon` epochs.
Forecast forecast_series(std::span<const double> series, int observe, int horizon,
                         ForecastMethod method, const PredictorConfig& config);

// Weight serialization. Layout documented in the README: w_ih/w_hh/b hold one
// flat array per layer; w_out carries the output bias as its last element.
void save_predictor(const SequencePredictor& predictor, const std::filesystem::path& path);
SequencePredictor load_predictor(const std::filesystem::path& path);

// Mean absolute percentage error of `predicted` against `actual` (same length,
// actual values must be nonzero). Returned as a fraction, not percent.
double mape(std::span<const double> predicted, std::span<const double> actual);

}  // namespace qoeplan

#endif

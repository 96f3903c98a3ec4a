#include "qoeplan/qoe.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace qoeplan {

namespace {

using nlohmann::ordered_json;

constexpr double kWeightSumTolerance = 1e-9;

ScalePair scale_from_json(const ordered_json& j, const char* key) {
    const auto& sj = j.at(key);
    return ScalePair{sj.at("v0").get<double>(), sj.at("s").get<double>()};
}

ordered_json scale_to_json(const ScalePair& p) {
    return ordered_json{{"v0", p.v0}, {"s", p.s}};
}

}  // namespace

void QoeWeights::validate() const {
    for (double w : {mae, mse, train, load, test}) {
        if (w < 0.0) throw Error(Errc::negative_value, "weights must be >= 0");
    }
    const double sum = mae + mse + train + load + test;
    if (std::abs(sum - 1.0) > kWeightSumTolerance)
        throw Error(Errc::weights_not_normalized,
                    "weights sum to " + std::to_string(sum) + ", expected 1");
}

void QoeScales::validate() const {
    for (const ScalePair* p : {&mae, &mse, &train_hours, &load_seconds, &test_seconds}) {
        if (!(p->s > 0.0)) throw Error(Errc::nonpositive_scale, "scale s must be > 0");
        if (p->v0 < 0.0) throw Error(Errc::negative_value, "scale v0 must be >= 0");
    }
}

double factor_experience(double value, double v0, double s) {
    if (!(s > 0.0)) throw Error(Errc::nonpositive_scale, "scale s must be > 0");
    // the clamp keeps the factor strictly positive when exp() underflows
    return std::max(std::exp(-std::max(0.0, value - v0) / s),
                    std::numeric_limits<double>::min());
}

FactorVector score_factors(const RawQuantities& raw, const QoeScales& scales) {
    scales.validate();
    FactorVector f;
    f.mae = factor_experience(raw.best_mae, scales.mae.v0, scales.mae.s);
    f.mse = factor_experience(raw.best_mse, scales.mse.v0, scales.mse.s);
    f.train = factor_experience(raw.train_hours, scales.train_hours.v0, scales.train_hours.s);
    f.load = factor_experience(raw.load_seconds, scales.load_seconds.v0, scales.load_seconds.s);
    f.test = factor_experience(raw.test_seconds, scales.test_seconds.v0, scales.test_seconds.s);
    return f;
}

double total_experience(const FactorVector& factors, const QoeWeights& weights) {
    weights.validate();
    return weights.mae * factors.mae + weights.mse * factors.mse + weights.train * factors.train +
           weights.load * factors.load + weights.test * factors.test;
}

std::pair<FactorVector, double> model_experience(std::span<const double> mae_series,
                                                 std::span<const double> mse_series,
                                                 const ModelMeta& meta, int epochs,
                                                 const QoeWeights& weights,
                                                 const QoeScales& scales, int max_epochs) {
    if (epochs < 1 || epochs > max_epochs)
        throw Error(Errc::epoch_out_of_range,
                    "epochs " + std::to_string(epochs) + " outside [1, " +
                        std::to_string(max_epochs) + "]");
    if (static_cast<int>(mae_series.size()) < epochs ||
        static_cast<int>(mse_series.size()) < epochs)
        throw Error(Errc::epoch_out_of_range,
                    "series for '" + meta.name + "' cover fewer than " + std::to_string(epochs) +
                        " epochs");

    RawQuantities raw;
    raw.best_mae = *std::min_element(mae_series.begin(), mae_series.begin() + epochs);
    raw.best_mse = *std::min_element(mse_series.begin(), mse_series.begin() + epochs);
    raw.train_hours = epoch_to_time(meta, epochs, max_epochs);
    raw.load_seconds = meta.t_load_s;
    raw.test_seconds = meta.t_test_s;

    const FactorVector factors = score_factors(raw, scales);
    return {factors, total_experience(factors, weights)};
}

QoeConfig load_qoe_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }

    QoeConfig config;
    if (j.contains("weights")) {
        const auto& wj = j["weights"];
        config.weights.mae = wj.at("mae").get<double>();
        config.weights.mse = wj.at("mse").get<double>();
        config.weights.train = wj.at("train").get<double>();
        config.weights.load = wj.at("load").get<double>();
        config.weights.test = wj.at("test").get<double>();
        config.weights.validate();
        config.has_weights = true;
    }
    if (j.contains("scales")) {
        const auto& sj = j["scales"];
        config.scales.mae = scale_from_json(sj, "mae");
        config.scales.mse = scale_from_json(sj, "mse");
        config.scales.train_hours = scale_from_json(sj, "train");
        config.scales.load_seconds = scale_from_json(sj, "load");
        config.scales.test_seconds = scale_from_json(sj, "test");
        config.scales.validate();
        config.has_scales = true;
    }
    return config;
}

void save_qoe_config(const QoeConfig& config, const std::filesystem::path& path) {
    ordered_json j;
    if (config.has_weights) {
        j["weights"] = ordered_json{{"mae", config.weights.mae},
                                    {"mse", config.weights.mse},
                                    {"train", config.weights.train},
                                    {"load", config.weights.load},
                                    {"test", config.weights.test}};
    }
    if (config.has_scales) {
        j["scales"] = ordered_json{{"mae", scale_to_json(config.scales.mae)},
                                   {"mse", scale_to_json(config.scales.mse)},
                                   {"train", scale_to_json(config.scales.train_hours)},
                                   {"load", scale_to_json(config.scales.load_seconds)},
                                   {"test", scale_to_json(config.scales.test_seconds)}};
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace qoeplan

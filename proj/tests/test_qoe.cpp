#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "qoeplan/qoe.hpp"
#include "qoeplan/random.hpp"

using namespace qoeplan;

namespace {

QoeWeights w1() { return QoeWeights{0.1, 0.1, 0.5, 0.05, 0.25}; }

QoeScales default_scales() {
    QoeScales s;
    s.mae = {80.0, 50.0};
    s.mse = {150.0, 100.0};
    s.train_hours = {10.0, 20.0};
    s.load_seconds = {10.0, 20.0};
    s.test_seconds = {0.1, 0.5};
    return s;
}

}  // namespace

TEST_CASE("factor_experience clamps at the reference and decays beyond it") {
    CHECK(factor_experience(7.0, 7.0, 2.0) == 1.0);
    CHECK(factor_experience(5.0, 7.0, 2.0) == 1.0);
    CHECK(factor_experience(9.0, 7.0, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK_THROWS_AS(factor_experience(1.0, 0.0, 0.0), Error);
    CHECK_THROWS_AS(factor_experience(1.0, 0.0, -2.0), Error);
}

TEST_CASE("total_experience is the weighted dot product") {
    const FactorVector ones{1, 1, 1, 1, 1};
    CHECK(total_experience(ones, w1()) == doctest::Approx(1.0).epsilon(1e-15));
    const FactorVector half{0.5, 0.5, 0.5, 0.5, 0.5};
    CHECK(total_experience(half, w1()) == doctest::Approx(0.5).epsilon(1e-15));

    const FactorVector f{0.8, 0.7, 0.5, 0.9, 0.6};
    CHECK(total_experience(f, w1()) == doctest::Approx(0.595).epsilon(1e-12));
}

TEST_CASE("weights must be a convex combination") {
    QoeWeights bad{0.5, 0.5, 0.5, 0.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), Error);
    QoeWeights negative{-0.1, 0.4, 0.4, 0.2, 0.1};
    CHECK_THROWS_AS(negative.validate(), Error);
    CHECK_NOTHROW(w1().validate());
}

TEST_CASE("model_experience on the published raw values") {
    // BL row: MAE 89.38, MSE 161.67, 14 h, 15 s load, 0.2335 s test.
    const ModelMeta meta{"BL", 14.0, 15.0, 0.2335, 82.0};
    const std::vector<double> mae(1000, 89.38);
    const std::vector<double> mse(1000, 161.67);
    const auto [factors, e_all] =
        model_experience(mae, mse, meta, 1000, w1(), default_scales(), 1000);

    const double expect_mae = std::exp(-(89.38 - 80.0) / 50.0);
    const double expect_mse = std::exp(-(161.67 - 150.0) / 100.0);
    const double expect_train = std::exp(-(14.0 - 10.0) / 20.0);
    const double expect_load = std::exp(-(15.0 - 10.0) / 20.0);
    const double expect_test = std::exp(-(0.2335 - 0.1) / 0.5);
    CHECK(factors.mae == doctest::Approx(expect_mae).epsilon(1e-12));
    CHECK(factors.mse == doctest::Approx(expect_mse).epsilon(1e-12));
    CHECK(factors.train == doctest::Approx(expect_train).epsilon(1e-12));
    CHECK(factors.load == doctest::Approx(expect_load).epsilon(1e-12));
    CHECK(factors.test == doctest::Approx(expect_test).epsilon(1e-12));

    const double expect_total = 0.1 * expect_mae + 0.1 * expect_mse + 0.5 * expect_train +
                                0.05 * expect_load + 0.25 * expect_test;
    CHECK(e_all == doctest::Approx(expect_total).epsilon(1e-12));
    CHECK(e_all == doctest::Approx(0.8116).epsilon(1e-4));
}

TEST_CASE("model_experience saturates to 1 when everything is within reference") {
    const ModelMeta meta{"tiny", 5.0, 1.0, 0.05, 1.0};
    const std::vector<double> mae(100, 50.0);
    const std::vector<double> mse(100, 100.0);
    const auto [factors, e_all] =
        model_experience(mae, mse, meta, 100, w1(), default_scales(), 1000);
    CHECK(factors.mae == 1.0);
    CHECK(e_all == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("performance factors are monotone in the epoch budget") {
    const ModelMeta meta{"m", 40.0, 5.0, 0.5, 1.0};
    std::vector<double> mae, mse;
    for (int k = 1; k <= 1000; ++k) {
        mae.push_back(300.0 * std::exp(-k / 400.0) + 50.0);
        mse.push_back(500.0 * std::exp(-k / 400.0) + 120.0);
    }
    double prev_mae = 0.0, prev_train = 2.0, prev_total_weighted = -1.0;
    for (int e = 100; e <= 1000; e += 100) {
        const auto [factors, e_all] =
            model_experience(mae, mse, meta, e, w1(), default_scales(), 1000);
        CHECK(factors.mae >= prev_mae);
        CHECK(factors.train <= prev_train);
        prev_mae = factors.mae;
        prev_train = factors.train;
        (void)prev_total_weighted;
        (void)e_all;
    }
}

TEST_CASE("randomized factor properties hold") {
    Rng rng(123);
    for (int i = 0; i < 2000; ++i) {
        const double v0 = rng.uniform(0.0, 100.0);
        const double s = rng.uniform(1e-3, 100.0);
        const double value = rng.uniform(0.0, 500.0);
        const double e = factor_experience(value, v0, s);
        CHECK(e > 0.0);
        CHECK(e <= 1.0);

        // nonincreasing in value
        const double e2 = factor_experience(value + rng.uniform(0.0, 50.0), v0, s);
        CHECK(e2 <= e + 1e-15);

        // nondecreasing in s past the reference
        if (value > v0) {
            const double wider = factor_experience(value, v0, s * rng.uniform(1.0, 4.0));
            CHECK(wider >= e - 1e-15);
        }
    }
}

TEST_CASE("total_experience is linear in the factor vector") {
    Rng rng(321);
    for (int i = 0; i < 500; ++i) {
        auto rand_factors = [&] {
            return FactorVector{rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0),
                                rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0),
                                rng.uniform(0.01, 1.0)};
        };
        const FactorVector a = rand_factors();
        const FactorVector b = rand_factors();
        const double alpha = rng.uniform(0.0, 1.0);
        const FactorVector mix{alpha * a.mae + (1 - alpha) * b.mae,
                               alpha * a.mse + (1 - alpha) * b.mse,
                               alpha * a.train + (1 - alpha) * b.train,
                               alpha * a.load + (1 - alpha) * b.load,
                               alpha * a.test + (1 - alpha) * b.test};
        const double lhs = total_experience(mix, w1());
        const double rhs =
            alpha * total_experience(a, w1()) + (1 - alpha) * total_experience(b, w1());
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("scaling every s preserves the order of two mae factors") {
    Rng rng(555);
    for (int i = 0; i < 500; ++i) {
        const double v0 = rng.uniform(0.0, 50.0);
        const double s = rng.uniform(0.1, 30.0);
        const double a = rng.uniform(v0, v0 + 200.0);
        const double b = rng.uniform(v0, v0 + 200.0);
        const double k = rng.uniform(0.1, 10.0);
        const double ea = factor_experience(a, v0, s), eb = factor_experience(b, v0, s);
        const double ea2 = factor_experience(a, v0, s * k), eb2 = factor_experience(b, v0, s * k);
        CHECK(((ea > eb) == (ea2 > eb2)));
    }
}

TEST_CASE("weights and scales round-trip through the config file") {
    QoeConfig config;
    config.weights = w1();
    config.scales = default_scales();
    config.has_weights = true;
    config.has_scales = true;
    const auto path = std::filesystem::temp_directory_path() / "qoeplan_qoe_config.json";
    save_qoe_config(config, path);
    const QoeConfig loaded = load_qoe_config(path);
    REQUIRE(loaded.has_weights);
    REQUIRE(loaded.has_scales);
    CHECK(loaded.weights == w1());
    CHECK(loaded.scales.mae.v0 == 80.0);
    CHECK(loaded.scales.test_seconds.s == 0.5);
}

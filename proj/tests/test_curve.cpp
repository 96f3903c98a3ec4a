#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qoeplan/curve.hpp"
#include "qoeplan/random.hpp"

using namespace qoeplan;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("qoeplan_curve_" + name);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

ModelMeta bl_meta() {
    return ModelMeta{"BL", 14.0, 15.0, 0.2335, 82.0};
}

TrainingTrace trace_from_mae(std::vector<double> mae) {
    TrainingTrace t;
    t.meta = bl_meta();
    for (std::size_t i = 0; i < mae.size(); ++i)
        t.records.push_back({static_cast<int>(i) + 1, 1.0, mae[i], 2.0 * mae[i]});
    return t;
}

}  // namespace

TEST_CASE("csv load parses rows in epoch order") {
    const fs::path p = temp_file("ok.csv");
    write_file(p, "epoch,loss,mae,mse\n1,2.0,300,400\n2,1.5,250,360\n3,1.2,220,330\n");
    const TrainingTrace t = load_trace(p, TraceFormat::csv);
    CHECK(t.size() == 3);
    CHECK(t.records[1].mae == 250.0);
    CHECK(t.records[2].epoch == 3);
    CHECK(t.meta.name == "qoeplan_curve_ok");  // placeholder meta from the file stem
}

TEST_CASE("csv load rejects bad inputs") {
    const fs::path gap = temp_file("gap.csv");
    write_file(gap, "epoch,loss,mae,mse\n1,1,1,1\n3,1,1,1\n4,1,1,1\n");
    CHECK_THROWS_WITH_AS(load_trace(gap, TraceFormat::csv),
                         doctest::Contains("epoch 3"), Error);
    try {
        load_trace(gap, TraceFormat::csv);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::non_contiguous_epochs);
    }

    const fs::path empty = temp_file("empty.csv");
    write_file(empty, "");
    CHECK_THROWS_AS(load_trace(empty, TraceFormat::csv), Error);
    try {
        load_trace(empty, TraceFormat::csv);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_trace);
    }

    const fs::path header_only = temp_file("header_only.csv");
    write_file(header_only, "epoch,loss,mae,mse\n");
    try {
        load_trace(header_only, TraceFormat::csv);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_trace);
    }

    const fs::path missing = temp_file("missing.csv");
    write_file(missing, "epoch,loss,mse\n1,1,1\n");
    try {
        load_trace(missing, TraceFormat::csv);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::missing_column);
        CHECK(std::string(e.what()).find("mae") != std::string::npos);
    }

    const fs::path negative = temp_file("negative.csv");
    write_file(negative, "epoch,loss,mae,mse\n1,1,-5,1\n");
    try {
        load_trace(negative, TraceFormat::csv);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::negative_value);
        CHECK(std::string(e.what()).find("mae") != std::string::npos);
    }
}

TEST_CASE("synth matches the closed form") {
    SynthCurveSpec spec;
    spec.m0 = 300.0;
    spec.m_inf = 100.0;
    spec.tau = 100.0;
    spec.noise_sigma = 0.0;
    spec.length = 1;
    const std::vector<double> one = synth_series(spec);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == doctest::Approx(100.0 + 200.0 * std::exp(-0.01)).epsilon(1e-12));

    spec.length = 1000;
    const std::vector<double> full = synth_series(spec);
    CHECK(std::abs(full[999] - spec.m_inf) < 0.01);
    // monotone decreasing when noiseless
    for (std::size_t i = 1; i < full.size(); ++i) CHECK(full[i] < full[i - 1]);
}

TEST_CASE("synth is deterministic and clamps noise at zero") {
    SynthCurveSpec spec;
    spec.m0 = 5.0;
    spec.m_inf = 0.0;
    spec.tau = 10.0;
    spec.noise_sigma = 3.0;
    spec.length = 200;
    spec.seed = 42;
    const TrainingTrace a = synth_trace(spec, bl_meta());
    const TrainingTrace b = synth_trace(spec, bl_meta());
    CHECK(a == b);
    for (const EpochRecord& r : a.records) {
        CHECK(r.mae >= 0.0);
        CHECK(r.mse >= 0.0);
        CHECK(r.loss >= 0.0);
    }

    spec.seed = 43;
    const TrainingTrace c = synth_trace(spec, bl_meta());
    CHECK(a.records != c.records);
}

TEST_CASE("epoch_to_time reproduces whole-hour values exactly") {
    CHECK(epoch_to_time(bl_meta(), 1000, 1000) == 14.0);
    CHECK(epoch_to_time(bl_meta(), 0, 1000) == 0.0);
    const ModelMeta sanet{"SANet", 50.0, 16.0, 0.8294, 5.3};
    CHECK(epoch_to_time(sanet, 500, 1000) == 25.0);
    CHECK_THROWS_AS(epoch_to_time(bl_meta(), 1001, 1000), Error);
}

TEST_CASE("epoch_to_time is additive up to float tolerance") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        ModelMeta meta = bl_meta();
        meta.total_train_hours_at_max = rng.uniform(0.1, 120.0);
        const int a = static_cast<int>(rng.index(500));
        const int b = static_cast<int>(rng.index(500));
        const double lhs = epoch_to_time(meta, a + b, 1000);
        const double rhs = epoch_to_time(meta, a, 1000) + epoch_to_time(meta, b, 1000);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("best_so_far is the running minimum") {
    const TrainingTrace t = trace_from_mae({5, 3, 4, 2});
    CHECK(best_so_far(t, 3, Metric::mae) == 3.0);
    CHECK(best_so_far(t, 1, Metric::mae) == 5.0);
    CHECK(best_so_far(t, 4, Metric::mae) == 2.0);
    CHECK_THROWS_AS(best_so_far(t, 5, Metric::mae), Error);
    CHECK_THROWS_AS(best_so_far(t, 0, Metric::mae), Error);

    Rng rng(11);
    std::vector<double> mae;
    for (int i = 0; i < 300; ++i) mae.push_back(rng.uniform(0.0, 100.0));
    const TrainingTrace r = trace_from_mae(mae);
    for (int e = 1; e < r.size(); ++e)
        CHECK(best_so_far(r, e + 1, Metric::mae) <= best_so_far(r, e, Metric::mae));
    const std::vector<double> mins = prefix_min(mae);
    for (int e = 1; e <= r.size(); ++e)
        CHECK(best_so_far(r, e, Metric::mae) == mins[static_cast<std::size_t>(e - 1)]);
}

TEST_CASE("traces round-trip through both formats") {
    SynthCurveSpec spec;
    spec.m0 = 317.25;
    spec.m_inf = 96.125;
    spec.tau = 83.0;
    spec.noise_sigma = 2.5;
    spec.length = 250;
    spec.seed = 99;
    const TrainingTrace original = synth_trace(spec, bl_meta());

    const fs::path jp = temp_file("roundtrip.json");
    save_trace(original, jp, TraceFormat::json);
    const TrainingTrace from_json = load_trace(jp, TraceFormat::json);
    CHECK(from_json == original);

    const fs::path cp = temp_file("roundtrip.csv");
    save_trace(original, cp, TraceFormat::csv);
    const TrainingTrace from_csv = load_trace(cp, TraceFormat::csv);
    CHECK(from_csv.records == original.records);  // csv carries records only
}

TEST_CASE("spec validation rejects bad generator parameters") {
    SynthCurveSpec spec;
    spec.tau = 0.0;
    CHECK_THROWS_AS(synth_series(spec), Error);
    spec.tau = 5.0;
    spec.m0 = 1.0;
    spec.m_inf = 2.0;  // m0 < m_inf
    CHECK_THROWS_AS(synth_series(spec), Error);
}

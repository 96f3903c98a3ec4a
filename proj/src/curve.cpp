#include "qoeplan/curve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qoeplan/random.hpp"

namespace qoeplan {

namespace {

using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error(Errc::io_error, "failed to format number");
    return std::string(buf, ptr);
}

double parse_double(const std::string& token, int row, const std::string& column) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw Error(Errc::parse_error,
                    "row " + std::to_string(row) + " column " + column + ": bad number '" +
                        token + "'");
    }
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    return out;
}

TrainingTrace load_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::empty_trace, path.string() + " is empty");

    const std::vector<std::string> header = split_csv_line(line);
    const std::vector<std::string> expected = {"epoch", "loss", "mae", "mse"};
    for (const auto& col : expected) {
        if (std::find(header.begin(), header.end(), col) == header.end())
            throw Error(Errc::missing_column, "column '" + col + "' missing in " + path.string());
    }
    std::vector<int> pos(expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        pos[i] = static_cast<int>(
            std::find(header.begin(), header.end(), expected[i]) - header.begin());
    }

    TrainingTrace trace;
    trace.meta.name = path.stem().string();
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (pos[i] >= static_cast<int>(fields.size()))
                throw Error(Errc::missing_column,
                            "row " + std::to_string(row) + " lacks column '" + expected[i] + "'");
        }
        EpochRecord rec;
        rec.epoch = static_cast<int>(parse_double(fields[pos[0]], row, "epoch"));
        rec.loss = parse_double(fields[pos[1]], row, "loss");
        rec.mae = parse_double(fields[pos[2]], row, "mae");
        rec.mse = parse_double(fields[pos[3]], row, "mse");
        trace.records.push_back(rec);
    }
    if (trace.records.empty()) throw Error(Errc::empty_trace, path.string() + " has no rows");

    std::sort(trace.records.begin(), trace.records.end(),
              [](const EpochRecord& a, const EpochRecord& b) { return a.epoch < b.epoch; });
    if (trace.size() > trace.max_epochs) trace.max_epochs = trace.size();
    trace.validate();
    return trace;
}

ordered_json meta_to_json(const ModelMeta& meta) {
    return ordered_json{{"name", meta.name},
                        {"total_train_hours_at_max", meta.total_train_hours_at_max},
                        {"t_load_s", meta.t_load_s},
                        {"t_test_s", meta.t_test_s},
                        {"model_size_mb", meta.model_size_mb}};
}

ModelMeta meta_from_json(const ordered_json& j) {
    ModelMeta meta;
    meta.name = j.at("name").get<std::string>();
    meta.total_train_hours_at_max = j.at("total_train_hours_at_max").get<double>();
    meta.t_load_s = j.at("t_load_s").get<double>();
    meta.t_test_s = j.at("t_test_s").get<double>();
    meta.model_size_mb = j.value("model_size_mb", 0.0);
    meta.validate();
    return meta;
}

TrainingTrace load_trace_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }
    TrainingTrace trace;
    trace.meta = meta_from_json(j.at("meta"));
    trace.max_epochs = j.value("max_epochs", kDefaultMaxEpochs);
    if (!j.contains("records") || !j["records"].is_array() || j["records"].empty())
        throw Error(Errc::empty_trace, path.string() + " has no records");
    for (const auto& rj : j["records"]) {
        EpochRecord rec;
        rec.epoch = rj.at("epoch").get<int>();
        rec.loss = rj.at("loss").get<double>();
        rec.mae = rj.at("mae").get<double>();
        rec.mse = rj.at("mse").get<double>();
        trace.records.push_back(rec);
    }
    std::sort(trace.records.begin(), trace.records.end(),
              [](const EpochRecord& a, const EpochRecord& b) { return a.epoch < b.epoch; });
    trace.validate();
    return trace;
}

}  // namespace

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::loss: return "loss";
        case Metric::mae: return "mae";
        case Metric::mse: return "mse";
    }
    return "?";
}

Metric metric_from_name(const std::string& name) {
    if (name == "loss") return Metric::loss;
    if (name == "mae") return Metric::mae;
    if (name == "mse") return Metric::mse;
    throw Error(Errc::invalid_argument, "unknown metric '" + name + "'");
}

void ModelMeta::validate() const {
    if (!(total_train_hours_at_max > 0.0))
        throw Error(Errc::invalid_argument,
                    "model '" + name + "': total_train_hours_at_max must be > 0");
    if (t_load_s < 0.0 || t_test_s < 0.0)
        throw Error(Errc::negative_value, "model '" + name + "': load/test times must be >= 0");
}

std::vector<double> TrainingTrace::series(Metric m) const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        switch (m) {
            case Metric::loss: out.push_back(r.loss); break;
            case Metric::mae: out.push_back(r.mae); break;
            case Metric::mse: out.push_back(r.mse); break;
        }
    }
    return out;
}

void TrainingTrace::validate() const {
    meta.validate();
    if (records.empty()) throw Error(Errc::empty_trace, "trace '" + meta.name + "' is empty");
    if (size() > max_epochs)
        throw Error(Errc::epoch_out_of_range,
                    "trace '" + meta.name + "' has " + std::to_string(size()) +
                        " records, max_epochs is " + std::to_string(max_epochs));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const EpochRecord& r = records[i];
        const int expected = static_cast<int>(i) + 1;
        if (r.epoch != expected)
            throw Error(Errc::non_contiguous_epochs,
                        "row " + std::to_string(i + 1) + ": epoch " + std::to_string(r.epoch) +
                            " where " + std::to_string(expected) + " was expected");
        if (r.loss < 0.0)
            throw Error(Errc::negative_value, "row " + std::to_string(i + 1) + " column loss");
        if (r.mae < 0.0)
            throw Error(Errc::negative_value, "row " + std::to_string(i + 1) + " column mae");
        if (r.mse < 0.0)
            throw Error(Errc::negative_value, "row " + std::to_string(i + 1) + " column mse");
    }
}

void SynthCurveSpec::validate() const {
    if (!(tau > 0.0)) throw Error(Errc::invalid_argument, "tau must be > 0");
    if (length < 1) throw Error(Errc::invalid_argument, "length must be >= 1");
    if (noise_sigma < 0.0) throw Error(Errc::negative_value, "noise_sigma must be >= 0");
    if (!(m0 >= m_inf) || m_inf < 0.0)
        throw Error(Errc::invalid_argument, "require m0 >= m_inf >= 0");
}

double SynthCurveSpec::clean_value(int epoch) const {
    return m_inf + (m0 - m_inf) * std::exp(-static_cast<double>(epoch) / tau);
}

void TraceSynthSpec::validate() const {
    mae.validate();
    mse.validate();
    loss.validate();
    if (mae.length != mse.length || mae.length != loss.length)
        throw Error(Errc::length_mismatch, "mae/mse/loss series lengths differ");
}

TraceFormat trace_format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".json" ? TraceFormat::json : TraceFormat::csv;
}

TrainingTrace load_trace(const std::filesystem::path& path, TraceFormat format) {
    return format == TraceFormat::csv ? load_trace_csv(path) : load_trace_json(path);
}

void save_trace(const TrainingTrace& trace, const std::filesystem::path& path,
                TraceFormat format) {
    trace.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    if (format == TraceFormat::csv) {
        out << "epoch,loss,mae,mse\n";
        for (const auto& r : trace.records) {
            out << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.mae) << ','
                << format_double(r.mse) << '\n';
        }
    } else {
        ordered_json j;
        j["meta"] = meta_to_json(trace.meta);
        j["max_epochs"] = trace.max_epochs;
        auto& records = j["records"] = ordered_json::array();
        for (const auto& r : trace.records) {
            records.push_back(ordered_json{
                {"epoch", r.epoch}, {"loss", r.loss}, {"mae", r.mae}, {"mse", r.mse}});
        }
        out << j.dump(2) << '\n';
    }
    if (!out) throw Error(Errc::io_error, "failed writing " + path.string());
}

std::vector<double> synth_series(const SynthCurveSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(spec.length));
    for (int k = 1; k <= spec.length; ++k) {
        double v = spec.clean_value(k);
        if (spec.noise_sigma > 0.0) v += rng.normal(0.0, spec.noise_sigma);
        out.push_back(std::max(0.0, v));
    }
    return out;
}

TrainingTrace synth_trace(const TraceSynthSpec& spec, const ModelMeta& meta, int max_epochs) {
    spec.validate();
    meta.validate();
    const std::vector<double> mae = synth_series(spec.mae);
    const std::vector<double> mse = synth_series(spec.mse);
    const std::vector<double> loss = synth_series(spec.loss);

    TrainingTrace trace;
    trace.meta = meta;
    trace.max_epochs = std::max(max_epochs, spec.mae.length);
    trace.records.reserve(mae.size());
    for (std::size_t i = 0; i < mae.size(); ++i) {
        trace.records.push_back(EpochRecord{static_cast<int>(i) + 1, loss[i], mae[i], mse[i]});
    }
    trace.validate();
    return trace;
}

TraceSynthSpec derive_trace_synth(const SynthCurveSpec& mae_spec) {
    TraceSynthSpec full;
    full.mae = mae_spec;
    full.mse = mae_spec;
    full.mse.m0 *= 1.7;
    full.mse.m_inf *= 1.7;
    full.mse.noise_sigma *= 1.7;
    full.mse.seed = mae_spec.seed + 1;
    full.loss = mae_spec;
    full.loss.m0 *= 0.01;
    full.loss.m_inf *= 0.01;
    full.loss.noise_sigma *= 0.01;
    full.loss.seed = mae_spec.seed + 2;
    return full;
}

TrainingTrace synth_trace(const SynthCurveSpec& spec, const ModelMeta& meta, int max_epochs) {
    return synth_trace(derive_trace_synth(spec), meta, max_epochs);
}

double epoch_to_time(const ModelMeta& meta, int epochs, int max_epochs) {
    if (epochs < 0 || epochs > max_epochs)
        throw Error(Errc::epoch_out_of_range,
                    "epochs " + std::to_string(epochs) + " outside [0, " +
                        std::to_string(max_epochs) + "]");
    // (epochs * hours) / max keeps the published whole-hour values exact.
    return (static_cast<double>(epochs) * meta.total_train_hours_at_max) /
           static_cast<double>(max_epochs);
}

double best_so_far(const TrainingTrace& trace, int epoch, Metric metric) {
    if (epoch < 1 || epoch > trace.size())
        throw Error(Errc::epoch_out_of_range,
                    "epoch " + std::to_string(epoch) + " outside [1, " +
                        std::to_string(trace.size()) + "]");
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < epoch; ++i) {
        const EpochRecord& r = trace.records[static_cast<std::size_t>(i)];
        const double v = metric == Metric::mae ? r.mae : metric == Metric::mse ? r.mse : r.loss;
        best = std::min(best, v);
    }
    return best;
}

std::vector<double> prefix_min(std::span<const double> values) {
    std::vector<double> out;
    out.reserve(values.size());
    double best = std::numeric_limits<double>::infinity();
    for (double v : values) {
        best = std::min(best, v);
        out.push_back(best);
    }
    return out;
}

}  // namespace qoeplan

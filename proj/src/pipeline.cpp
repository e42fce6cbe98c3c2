#include "geocloud/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geocloud/audio.hpp"
#include "geocloud/error.hpp"
#include "geocloud/ply_io.hpp"
#include "geocloud/reduction.hpp"
#include "geocloud/rng.hpp"
#include "geocloud/sampling.hpp"
#include "geocloud/shapes.hpp"
#include "geocloud/version.hpp"

namespace geocloud {

namespace {

// salts for derive_seed; both input branches share the same stage seeds so
// that identical inputs run identical pipelines
enum StageSalt : std::uint64_t {
    kSaltGenerate = 0,
    kSaltSampling = 1,
    kSaltSplit = 2,
    kSaltReductionInit = 3,
    kSaltReductionTrain = 4,
    kSaltGmm = 5,
    kSaltEmd = 6,
    kSaltDj = 7,
};

std::string path_stem(const std::string& path) {
    auto slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

class StageTimer {
public:
    explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}

    template <typename F>
    auto run(const std::string& stage, F&& fn) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(fn())>) {
                fn();
                record(stage, t0);
            } else {
                auto result = fn();
                record(stage, t0);
                return result;
            }
        } catch (const Error& e) {
            throw StageError(stage, e.what());
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
    }

private:
    void record(const std::string& stage,
                std::chrono::steady_clock::time_point t0) {
        sink_[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                           .count();
    }
    std::map<std::string, double>& sink_;
};

PointCloud load_input(const InputSpec& input, const PipelineConfig& cfg,
                      std::uint64_t default_gen_seed) {
    switch (input.kind) {
        case InputSpec::Kind::Ply: {
            PointCloud cloud = load_ply(input.value);
            cloud.set_label(path_stem(input.value));
            return cloud;
        }
        case InputSpec::Kind::Wav: {
            AudioSignal sig = load_wav(input.value);
            PointCloud cloud =
                normalize_axes(audio_to_cloud(sig, cfg.audio_n_fft, cfg.audio_hop));
            cloud.set_label(path_stem(input.value));
            return cloud;
        }
        case InputSpec::Kind::Shape: {
            ShapeSpec spec;
            spec.kind = shape_kind_from_name(input.value);
            spec.n = cfg.shape_n;
            spec.seed = input.has_gen_seed ? input.gen_seed : default_gen_seed;
            PointCloud cloud = generate_shape(spec);
            cloud.set_label(input.display_label());
            return cloud;
        }
    }
    throw Error("unreachable input kind");
}

nlohmann::json metric_to_json(const MetricValue& m) {
    return {{"value", m.value}, {"exact", m.exact}};
}

}  // namespace

InputSpec InputSpec::parse(const std::string& text) {
    InputSpec spec;
    auto ends_with = [&](const char* suffix) {
        std::string s = text;
        std::transform(s.begin(), s.end(), s.begin(), ::tolower);
        std::string suf(suffix);
        return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends_with(".ply")) {
        spec.kind = Kind::Ply;
        spec.value = text;
        return spec;
    }
    if (ends_with(".wav")) {
        spec.kind = Kind::Wav;
        spec.value = text;
        return spec;
    }
    std::string body = text.rfind("shape:", 0) == 0 ? text.substr(6) : text;
    spec.kind = Kind::Shape;
    auto colon = body.find(':');
    if (colon != std::string::npos) {
        spec.value = body.substr(0, colon);
        try {
            spec.gen_seed = std::stoull(body.substr(colon + 1));
        } catch (const std::exception&) {
            throw FormatError("bad shape seed in '" + text + "'");
        }
        spec.has_gen_seed = true;
    } else {
        spec.value = body;
    }
    shape_kind_from_name(spec.value);  // validates the name
    return spec;
}

std::string InputSpec::display_label() const {
    if (kind == Kind::Shape)
        return has_gen_seed ? value + ":" + std::to_string(gen_seed) : value;
    return path_stem(value);
}

std::string PipelineConfig::to_json_string(int indent) const {
    nlohmann::json j;
    j["a"] = input_a.kind == InputSpec::Kind::Shape ? input_a.display_label() : input_a.value;
    j["b"] = input_b.kind == InputSpec::Kind::Shape ? input_b.display_label() : input_b.value;
    j["shape_n"] = shape_n;
    j["count"] = sample_count;
    j["size"] = sample_size;
    j["reduction"] = reduction;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["k"] = gmm_k;
    j["cov_mode"] = cov_mode == CovMode::Diagonal ? "diagonal" : "full";
    j["grid_points"] = grid_points;
    j["pad"] = grid_pad;
    j["raw_sum"] = raw_sum;
    j["emd_size"] = emd_size;
    j["dj_size"] = dj_size;
    j["seed"] = seed;
    j["audio_n_fft"] = audio_n_fft;
    j["audio_hop"] = audio_hop;
    return j.dump(indent);
}

PipelineConfig PipelineConfig::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("invalid config JSON: ") + e.what());
    }
    PipelineConfig cfg;
    try {
        cfg.input_a = InputSpec::parse(j.at("a").get<std::string>());
        cfg.input_b = InputSpec::parse(j.at("b").get<std::string>());
        if (j.contains("shape_n")) cfg.shape_n = j["shape_n"].get<std::size_t>();
        if (j.contains("count")) cfg.sample_count = j["count"].get<std::size_t>();
        if (j.contains("size")) cfg.sample_size = j["size"].get<std::size_t>();
        if (j.contains("reduction")) cfg.reduction = j["reduction"].get<std::string>();
        if (j.contains("epochs")) cfg.epochs = j["epochs"].get<std::size_t>();
        if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
        if (j.contains("k")) cfg.gmm_k = j["k"].get<std::size_t>();
        if (j.contains("cov_mode"))
            cfg.cov_mode =
                j["cov_mode"].get<std::string>() == "full" ? CovMode::Full : CovMode::Diagonal;
        if (j.contains("grid_points")) cfg.grid_points = j["grid_points"].get<std::size_t>();
        if (j.contains("pad")) cfg.grid_pad = j["pad"].get<double>();
        if (j.contains("raw_sum")) cfg.raw_sum = j["raw_sum"].get<bool>();
        if (j.contains("emd_size")) cfg.emd_size = j["emd_size"].get<std::size_t>();
        if (j.contains("dj_size")) cfg.dj_size = j["dj_size"].get<std::size_t>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("audio_n_fft")) cfg.audio_n_fft = j["audio_n_fft"].get<std::size_t>();
        if (j.contains("audio_hop")) cfg.audio_hop = j["audio_hop"].get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("config JSON missing fields: ") + e.what());
    }
    if (cfg.reduction != "pca" && cfg.reduction != "ae")
        throw SchemaError("reduction must be 'pca' or 'ae'");
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

double ComparisonReport::metric(const std::string& name) const {
    for (const auto& m : metrics)
        if (m.name == name) return m.value;
    throw SchemaError("report has no metric '" + name + "'");
}

bool ComparisonReport::has_metric(const std::string& name) const {
    return std::any_of(metrics.begin(), metrics.end(),
                       [&](const MetricValue& m) { return m.name == name; });
}

std::string ComparisonReport::to_json_string(int indent) const {
    nlohmann::json j;
    j["version"] = version;
    j["label_a"] = label_a;
    j["label_b"] = label_b;
    j["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
    nlohmann::json metrics_j;
    for (const auto& m : metrics) metrics_j[m.name] = metric_to_json(m);
    j["metrics"] = metrics_j;
    j["divergence"] = nlohmann::json::parse(divergence.to_json_string());
    nlohmann::json seeds_j;
    for (const auto& [k, v] : stage_seeds) seeds_j[k] = v;
    j["stage_seeds"] = seeds_j;
    nlohmann::json timings_j;
    for (const auto& [k, v] : timings_sec) timings_j[k] = v;
    j["timings"] = timings_j;
    return j.dump(indent);
}

ComparisonReport ComparisonReport::from_json_string(const std::string& text) {
    validate_report_json(text);
    nlohmann::json j = nlohmann::json::parse(text);
    ComparisonReport r;
    r.version = j["version"].get<std::string>();
    r.label_a = j["label_a"].get<std::string>();
    r.label_b = j["label_b"].get<std::string>();
    r.config_json = j["config"].dump();
    for (const auto& [name, mj] : j["metrics"].items())
        r.metrics.push_back({name, mj.at("value").get<double>(), mj.at("exact").get<bool>()});
    const auto& dj = j["divergence"];
    r.divergence.mskl = dj.at("mskl").get<double>();
    r.divergence.kl_pq = dj.at("kl_pq").get<double>();
    r.divergence.kl_qp = dj.at("kl_qp").get<double>();
    r.divergence.weighted = dj.at("weighted").get<bool>();
    r.divergence.grid.dim = dj.at("grid").at("dim").get<std::size_t>();
    r.divergence.grid.lower = dj.at("grid").at("lower").get<std::vector<double>>();
    r.divergence.grid.upper = dj.at("grid").at("upper").get<std::vector<double>>();
    r.divergence.grid.points_per_axis = dj.at("grid").at("points_per_axis").get<std::size_t>();
    if (j.contains("stage_seeds"))
        for (const auto& [k, v] : j["stage_seeds"].items())
            r.stage_seeds[k] = v.get<std::uint64_t>();
    if (j.contains("timings"))
        for (const auto& [k, v] : j["timings"].items()) r.timings_sec[k] = v.get<double>();
    return r;
}

ComparisonReport ComparisonReport::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

void ComparisonReport::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << to_json_string() << "\n";
}

void validate_report_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("report is not valid JSON: ") + e.what());
    }
    for (const char* key : {"version", "label_a", "label_b", "config", "metrics", "divergence"})
        if (!j.contains(key)) throw SchemaError(std::string("report lacks '") + key + "'");
    if (!j["metrics"].is_object()) throw SchemaError("metrics must be an object");
    for (const char* key : {"hausdorff", "chamfer", "mskl"})
        if (!j["metrics"].contains(key))
            throw SchemaError(std::string("metrics lack '") + key + "'");
    for (const auto& [name, mj] : j["metrics"].items()) {
        if (!mj.contains("value") || !mj.contains("exact"))
            throw SchemaError("metric '" + name + "' lacks value/exact");
        double v = mj["value"].get<double>();
        if (!std::isfinite(v)) throw SchemaError("metric '" + name + "' is not finite");
    }
    const auto& dj = j["divergence"];
    for (const char* key : {"mskl", "kl_pq", "kl_qp", "weighted", "grid"})
        if (!dj.contains(key)) throw SchemaError(std::string("divergence lacks '") + key + "'");
}

ComparisonReport run_pipeline(const PipelineConfig& config) {
    ComparisonReport report;
    report.version = kVersion;
    report.config_json = config.to_json_string(-1);
    StageTimer timer(report.timings_sec);

    const std::uint64_t gen_seed = derive_seed(config.seed, kSaltGenerate);
    const std::uint64_t sampling_seed = derive_seed(config.seed, kSaltSampling);
    const std::uint64_t split_seed = derive_seed(config.seed, kSaltSplit);
    const std::uint64_t reduction_init_seed = derive_seed(config.seed, kSaltReductionInit);
    const std::uint64_t reduction_train_seed = derive_seed(config.seed, kSaltReductionTrain);
    const std::uint64_t gmm_seed = derive_seed(config.seed, kSaltGmm);
    report.stage_seeds = {{"generate", gen_seed},
                          {"sampling", sampling_seed},
                          {"split", split_seed},
                          {"reduction_init", reduction_init_seed},
                          {"reduction_train", reduction_train_seed},
                          {"gmm", gmm_seed}};

    PointCloud cloud_a =
        timer.run("load-a", [&] { return load_input(config.input_a, config, gen_seed); });
    PointCloud cloud_b =
        timer.run("load-b", [&] { return load_input(config.input_b, config, gen_seed); });
    report.label_a = config.input_a.display_label();
    report.label_b = config.input_b.display_label();

    timer.run("baselines", [&] {
        report.metrics.push_back(hausdorff(cloud_a, cloud_b));
        report.metrics.push_back(chamfer(cloud_a, cloud_b));
        if (config.emd_size > 0) {
            std::size_t n = std::min({config.emd_size, cloud_a.size(), cloud_b.size()});
            PointCloud a = fps(cloud_a, n, derive_seed(config.seed, kSaltEmd));
            PointCloud b = fps(cloud_b, n, derive_seed(config.seed, kSaltEmd));
            report.metrics.push_back(emd(a, b));
        }
        if (config.dj_size > 0) {
            std::size_t n = std::min({config.dj_size, cloud_a.size(), cloud_b.size()});
            PointCloud a = fps(cloud_a, n, derive_seed(config.seed, kSaltDj));
            PointCloud b = fps(cloud_b, n, derive_seed(config.seed, kSaltDj));
            report.metrics.push_back(dj(a, b, n <= 9 ? DjMode::Exact : DjMode::Greedy));
        }
    });

    SampleSet set_a = timer.run("sampling-a", [&] {
        return extract_samples(cloud_a, config.sample_count, config.sample_size, "First",
                               sampling_seed);
    });
    SampleSet set_b = timer.run("sampling-b", [&] {
        return extract_samples(cloud_b, config.sample_count, config.sample_size, "Second",
                               sampling_seed);
    });

    DataSplit split = timer.run(
        "split", [&] { return split_dataset(set_a, set_b, {0.7, 0.15, 0.15}, split_seed); });

    std::vector<PointCloud> train_clouds, val_clouds, test_clouds;
    for (auto& ls : split.train) {
        ls.cloud.set_label(ls.label);
        train_clouds.push_back(std::move(ls.cloud));
    }
    for (auto& ls : split.validation) {
        ls.cloud.set_label(ls.label);
        val_clouds.push_back(std::move(ls.cloud));
    }
    for (auto& ls : split.test) {
        ls.cloud.set_label(ls.label);
        test_clouds.push_back(std::move(ls.cloud));
    }

    const bool is_audio = config.input_a.kind == InputSpec::Kind::Wav ||
                          config.input_b.kind == InputSpec::Kind::Wav;
    LatentSet latent = timer.run("reduction", [&] {
        if (config.reduction == "ae") {
            TrainConfig tc;
            tc.epochs = config.epochs > 0 ? config.epochs : (is_audio ? 350 : 400);
            tc.batch_size = config.batch_size > 0 ? config.batch_size : (is_audio ? 4 : 16);
            tc.seed = reduction_train_seed;
            AutoencoderParams params =
                make_autoencoder(config.sample_size, reduction_init_seed);
            ae_train(params, train_clouds, val_clouds, tc);
            return embed(test_clouds, params);
        }
        auto fitted = pca_fit_transform(train_clouds);
        return embed(test_clouds, fitted.second);
    });

    EmConfig em_cfg;
    em_cfg.mode = config.cov_mode;
    em_cfg.seed = gmm_seed;
    GmmParams gmm_a = timer.run("gmm-a", [&] {
        return fit_em(latent.as_cloud("First"), config.gmm_k, em_cfg).first;
    });
    GmmParams gmm_b = timer.run("gmm-b", [&] {
        return fit_em(latent.as_cloud("Second"), config.gmm_k, em_cfg).first;
    });

    report.divergence = timer.run("divergence", [&] {
        EvalGrid grid = make_grid(gmm_a, gmm_b, config.grid_points, config.grid_pad);
        return mskl(gmm_a, gmm_b, grid, !config.raw_sum);
    });
    report.metrics.push_back({"mskl", report.divergence.mskl, true});
    return report;
}

std::string emit_table(const std::vector<ComparisonReport>& reports, TableFormat format) {
    if (reports.empty()) throw EmptyRequest("no reports to tabulate");

    // consistent metric sets across reports
    std::vector<std::string> metric_names;
    for (const auto& m : reports.front().metrics) metric_names.push_back(m.name);
    for (const auto& r : reports) {
        std::vector<std::string> names;
        for (const auto& m : r.metrics) names.push_back(m.name);
        if (names != metric_names)
            throw SchemaError("reports carry inconsistent metric sets");
    }

    std::vector<std::string> labels;
    auto label_index = [&](const std::string& l) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == l) return i;
        labels.push_back(l);
        return labels.size() - 1;
    };
    std::map<std::pair<std::size_t, std::size_t>, const ComparisonReport*> cell;
    for (const auto& r : reports) {
        std::size_t i = label_index(r.label_a);
        std::size_t j = label_index(r.label_b);
        cell[{std::max(i, j), std::min(i, j)}] = &r;
    }
    const std::size_t n = labels.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (!cell.count({i, j}))
                throw SchemaError("missing report for pair " + labels[i] + " / " + labels[j]);

    struct DisplayMetric {
        const char* key;
        const char* shown;
    };
    static const DisplayMetric kDisplay[] = {
        {"chamfer", "Ch"}, {"hausdorff", "H"}, {"emd", "EMD"}, {"dj", "dJ"}, {"mskl", "IGM"}};

    auto cell_value = [&](std::size_t i, std::size_t j, const std::string& key) -> double {
        auto it = cell.find({i, j});
        if (it != cell.end()) return it->second->metric(key);
        return 0.0;  // absent diagonal: identical inputs, all metrics zero
    };
    auto has_key = [&](const std::string& key) {
        return std::find(metric_names.begin(), metric_names.end(), key) != metric_names.end();
    };

    if (format == TableFormat::Csv) {
        std::ostringstream out;
        out << "label_a,label_b,metric,value\n";
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                for (const auto& dm : kDisplay) {
                    if (!has_key(dm.key)) continue;
                    out << labels[i] << "," << labels[j] << "," << dm.key << ","
                        << cell_value(i, j, dm.key) << "\n";
                }
        return out.str();
    }
    if (format == TableFormat::Json) {
        nlohmann::json j;
        j["labels"] = labels;
        nlohmann::json cells = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t jj = 0; jj <= i; ++jj) {
                nlohmann::json c;
                c["row"] = labels[i];
                c["col"] = labels[jj];
                for (const auto& dm : kDisplay)
                    if (has_key(dm.key)) c[dm.key] = cell_value(i, jj, dm.key);
                cells.push_back(c);
            }
        j["cells"] = cells;
        return j.dump(2);
    }

    // markdown, mirroring the lower-triangular layout with Ch/H/IGM per cell
    std::ostringstream out;
    out << "| |";
    for (const auto& l : labels) out << " " << l << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < n; ++i) out << "---|";
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < n; ++i) {
        out << "| " << labels[i] << " |";
        for (std::size_t j = 0; j < n; ++j) {
            if (j > i) {
                out << " |";
                continue;
            }
            std::string text;
            for (const auto& dm : kDisplay) {
                if (!has_key(dm.key)) continue;
                std::snprintf(buf, sizeof(buf), "%s = %.4g", dm.shown,
                              cell_value(i, j, dm.key));
                if (!text.empty()) text += "<br>";
                text += buf;
            }
            out << " " << text << " |";
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace geocloud

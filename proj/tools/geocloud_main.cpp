#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "geocloud/audio.hpp"
#include "geocloud/divergence.hpp"
#include "geocloud/error.hpp"
#include "geocloud/gmm.hpp"
#include "geocloud/metrics.hpp"
#include "geocloud/pipeline.hpp"
#include "geocloud/ply_io.hpp"
#include "geocloud/reduction.hpp"
#include "geocloud/sampling.hpp"
#include "geocloud/shapes.hpp"
#include "geocloud/version.hpp"

namespace fs = std::filesystem;
using namespace geocloud;

namespace {

PlyFormat parse_ply_format(const std::string& name) {
    if (name == "ascii") return PlyFormat::Ascii;
    if (name == "binary") return PlyFormat::BinaryLittleEndian;
    throw FormatError("unknown PLY format '" + name + "'");
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (text.empty() || text.back() != '\n') out << "\n";
}

struct SampleDir {
    std::string label;
    std::vector<PointCloud> samples;
};

SampleDir read_sample_dir(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw IoError("no manifest.json in '" + dir + "'");
    nlohmann::json j;
    try {
        mf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("bad manifest: ") + e.what());
    }
    SampleDir out;
    out.label = j.at("label").get<std::string>();
    for (const auto& f : j.at("files")) {
        PointCloud c = load_ply(dir + "/" + f.get<std::string>());
        c.set_label(out.label);
        out.samples.push_back(std::move(c));
    }
    return out;
}

int cmd_gen(const std::string& shape, std::size_t n, std::uint64_t seed,
            const std::string& out, const std::string& format) {
    ShapeSpec spec{shape_kind_from_name(shape), n, seed};
    write_ply(generate_shape(spec), out, parse_ply_format(format));
    std::cout << "wrote " << n << " " << shape << " points to " << out << "\n";
    return 0;
}

int cmd_sample(const std::string& in, std::size_t count, std::size_t size,
               const std::string& label, std::uint64_t seed, const std::string& out_dir) {
    PointCloud cloud = load_ply(in);
    SampleSet set = extract_samples(cloud, count, size, label, seed);
    fs::create_directories(out_dir);
    nlohmann::json manifest;
    manifest["label"] = label;
    manifest["count"] = count;
    manifest["size"] = size;
    manifest["seed"] = seed;
    manifest["source"] = in;
    std::vector<std::string> files;
    char name[32];
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
        std::snprintf(name, sizeof(name), "sample_%04zu.ply", i);
        write_ply(set.samples[i], out_dir + "/" + name, PlyFormat::BinaryLittleEndian);
        files.emplace_back(name);
    }
    manifest["files"] = files;
    write_text(out_dir + "/manifest.json", manifest.dump(2));
    std::cout << "wrote " << count << " samples to " << out_dir << "\n";
    return 0;
}

int cmd_reduce(const std::vector<std::string>& dirs, const std::string& method,
               std::size_t epochs, std::size_t batch, std::uint64_t seed,
               const std::string& out_csv, const std::string& model_out) {
    if (dirs.empty() || dirs.size() > 2) throw FormatError("reduce takes one or two --in dirs");

    std::vector<PointCloud> train, test;
    if (dirs.size() == 2) {
        SampleDir a = read_sample_dir(dirs[0]);
        SampleDir b = read_sample_dir(dirs[1]);
        SampleSet sa{std::move(a.samples), a.label};
        SampleSet sb{std::move(b.samples), b.label};
        DataSplit split = split_dataset(sa, sb, {0.7, 0.15, 0.15}, seed);
        for (auto& ls : split.train) {
            ls.cloud.set_label(ls.label);
            train.push_back(std::move(ls.cloud));
        }
        for (auto& ls : split.test) {
            ls.cloud.set_label(ls.label);
            test.push_back(std::move(ls.cloud));
        }
    } else {
        SampleDir a = read_sample_dir(dirs[0]);
        train = a.samples;
        test = std::move(a.samples);
    }

    LatentSet latent;
    if (method == "ae") {
        std::size_t s = train.front().size();
        AutoencoderParams params = make_autoencoder(s, derive_seed(seed, 100));
        TrainConfig tc;
        tc.epochs = epochs;
        tc.batch_size = batch;
        tc.seed = derive_seed(seed, 101);
        TrainHistory hist = ae_train(params, train, {}, tc);
        std::cout << "train loss " << hist.train_loss.front() << " -> "
                  << hist.train_loss.back() << "\n";
        if (!model_out.empty()) params.save(model_out);
        latent = embed(test, params);
    } else if (method == "pca") {
        auto fitted = pca_fit_transform(train);
        if (!model_out.empty()) write_text(model_out, fitted.second.to_json_string());
        latent = embed(test, fitted.second);
    } else {
        throw FormatError("method must be pca or ae");
    }
    latent.save_csv(out_csv);
    std::cout << "wrote " << latent.rows.size() << " latent rows to " << out_csv << "\n";
    return 0;
}

int cmd_fit(const std::string& in_csv, const std::string& label, std::size_t k,
            const std::string& mode, std::uint64_t seed, const std::string& out) {
    LatentSet latent = LatentSet::load_csv(in_csv);
    EmConfig cfg;
    cfg.mode = mode == "full" ? CovMode::Full : CovMode::Diagonal;
    cfg.seed = seed;
    auto [params, report] = fit_em(latent.as_cloud(label), k, cfg);
    params.save(out);
    std::cout << "fit K=" << k << " in " << report.iterations
              << " iterations, log-likelihood " << report.final_log_likelihood
              << (report.converged ? " (converged)" : " (max iterations)") << "\n";
    return 0;
}

int cmd_divergence(const std::string& p_path, const std::string& q_path, std::size_t grid_n,
                   double pad, bool raw_sum, const std::string& out) {
    GmmParams p = GmmParams::load(p_path);
    GmmParams q = GmmParams::load(q_path);
    EvalGrid grid = make_grid(p, q, grid_n, pad);
    DivergenceResult res = mskl(p, q, grid, !raw_sum);
    write_text(out, res.to_json_string());
    return 0;
}

int cmd_baseline(const std::string& a_path, const std::string& b_path,
                 const std::string& metrics_csv, bool squared, const std::string& dj_mode) {
    PointCloud a = load_ply(a_path);
    PointCloud b = load_ply(b_path);
    std::istringstream ss(metrics_csv);
    std::string name;
    nlohmann::json out;
    while (std::getline(ss, name, ',')) {
        MetricValue v;
        if (name == "hausdorff")
            v = hausdorff(a, b);
        else if (name == "chamfer")
            v = chamfer(a, b, squared);
        else if (name == "emd")
            v = emd(a, b);
        else if (name == "dj")
            v = dj(a, b, dj_mode == "exact" ? DjMode::Exact : DjMode::Greedy);
        else
            throw FormatError("unknown metric '" + name + "'");
        out[v.name] = {{"value", v.value}, {"exact", v.exact}};
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_audio2cloud(const std::string& in, std::size_t n_fft, std::size_t hop,
                    const std::string& out, const std::string& format) {
    AudioSignal sig = load_wav(in);
    PointCloud cloud = audio_to_cloud(sig, n_fft, hop);
    write_ply(cloud, out, parse_ply_format(format));
    std::cout << "wrote " << cloud.size() << " spectral points to " << out << "\n";
    return 0;
}

int cmd_compare(PipelineConfig cfg, const std::string& out) {
    if (const char* env_seed = std::getenv("GEOCLOUD_SEED")) {
        try {
            cfg.seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            throw FormatError("GEOCLOUD_SEED is not an integer");
        }
    }
    ComparisonReport report = run_pipeline(cfg);
    write_text(out, report.to_json_string());
    if (!out.empty() && out != "-") {
        std::cout << report.label_a << " vs " << report.label_b
                  << ": mskl=" << report.divergence.mskl
                  << " hausdorff=" << report.metric("hausdorff")
                  << " chamfer=" << report.metric("chamfer") << "\n";
    }
    return 0;
}

int cmd_table(const std::vector<std::string>& report_paths, const std::string& format,
              const std::string& out) {
    std::vector<ComparisonReport> reports;
    for (const auto& p : report_paths) reports.push_back(ComparisonReport::load(p));
    TableFormat fmt = TableFormat::Markdown;
    if (format == "csv") fmt = TableFormat::Csv;
    else if (format == "json") fmt = TableFormat::Json;
    else if (format != "markdown") throw FormatError("format must be json|csv|markdown");
    write_text(out, emit_table(reports, fmt));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geocloud: point-cloud comparison via GMM divergence and classical metrics"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a parametric shape cloud");
    std::string gen_shape = "cube", gen_out, gen_format = "ascii";
    std::size_t gen_n = 2048;
    std::uint64_t gen_seed = 0;
    gen->add_option("--shape", gen_shape, "cube|cone|sphere")->required();
    gen->add_option("--n", gen_n, "point count");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "output PLY")->required();
    gen->add_option("--format", gen_format, "ascii|binary");

    // sample
    auto* sample = app.add_subcommand("sample", "Extract FPS samples from a cloud");
    std::string sample_in, sample_label = "First", sample_out;
    std::size_t sample_count = 960, sample_size = 512;
    std::uint64_t sample_seed = 0;
    sample->add_option("--in", sample_in)->required();
    sample->add_option("--count", sample_count, "number of samples");
    sample->add_option("--size", sample_size, "points per sample");
    sample->add_option("--label", sample_label);
    sample->add_option("--seed", sample_seed);
    sample->add_option("--out", sample_out, "output directory")->required();

    // reduce
    auto* reduce = app.add_subcommand("reduce", "Embed samples into the 2D latent space");
    std::vector<std::string> reduce_in;
    std::string reduce_method = "pca", reduce_out, reduce_model;
    std::size_t reduce_epochs = 400, reduce_batch = 16;
    std::uint64_t reduce_seed = 0;
    reduce->add_option("--in", reduce_in, "sample dir (twice for train/test split)")
        ->required()
        ->expected(1, 2);
    reduce->add_option("--method", reduce_method, "pca|ae");
    reduce->add_option("--epochs", reduce_epochs);
    reduce->add_option("--batch", reduce_batch);
    reduce->add_option("--seed", reduce_seed);
    reduce->add_option("--out", reduce_out, "latent CSV")->required();
    reduce->add_option("--model", reduce_model, "optional model JSON output");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a GMM to latent rows");
    std::string fit_in, fit_label, fit_mode = "diagonal", fit_out;
    std::size_t fit_k = 5;
    std::uint64_t fit_seed = 0;
    fit->add_option("--in", fit_in, "latent CSV")->required();
    fit->add_option("--label", fit_label, "only rows with this label");
    fit->add_option("--k", fit_k);
    fit->add_option("--mode", fit_mode, "diagonal|full");
    fit->add_option("--seed", fit_seed);
    fit->add_option("--out", fit_out, "GMM JSON")->required();

    // divergence
    auto* div = app.add_subcommand("divergence", "Grid MSKL between two GMM files");
    std::string div_p, div_q, div_out;
    std::size_t div_grid = 200;
    double div_pad = 6.0;
    bool div_raw = false;
    div->add_option("--p", div_p)->required();
    div->add_option("--q", div_q)->required();
    div->add_option("--grid", div_grid, "points per axis");
    div->add_option("--pad", div_pad, "stddev padding");
    div->add_flag("--raw-sum", div_raw, "unweighted sums");
    div->add_option("--out", div_out, "output JSON (default stdout)");

    // baseline
    auto* base = app.add_subcommand("baseline", "Classical metrics between two PLY clouds");
    std::string base_a, base_b, base_metrics = "hausdorff,chamfer", base_dj_mode = "greedy";
    bool base_squared = false;
    base->add_option("--a", base_a)->required();
    base->add_option("--b", base_b)->required();
    base->add_option("--metrics", base_metrics, "comma list: hausdorff,chamfer,emd,dj");
    base->add_flag("--squared", base_squared, "squared-distance Chamfer variant");
    base->add_option("--dj-mode", base_dj_mode, "exact|greedy");

    // audio2cloud
    auto* audio = app.add_subcommand("audio2cloud", "Convert WAV to a spectral point cloud");
    std::string audio_in, audio_out, audio_format = "ascii";
    std::size_t audio_nfft = 1024, audio_hop = 256;
    audio->add_option("--in", audio_in)->required();
    audio->add_option("--nfft", audio_nfft);
    audio->add_option("--hop", audio_hop);
    audio->add_option("--out", audio_out)->required();
    audio->add_option("--format", audio_format, "ascii|binary");

    // compare
    auto* cmp = app.add_subcommand("compare", "Full comparison pipeline");
    std::string cmp_a, cmp_b, cmp_config, cmp_out, cmp_reduction, cmp_mode;
    std::size_t cmp_shape_n = 0, cmp_count = 0, cmp_size = 0, cmp_epochs = 0, cmp_batch = 0;
    std::size_t cmp_k = 0, cmp_grid = 0, cmp_emd = 0, cmp_dj = 0, cmp_nfft = 0, cmp_hop = 0;
    double cmp_pad = 0.0;
    std::uint64_t cmp_seed = 0;
    bool cmp_raw = false;
    cmp->add_option("--a", cmp_a, "PLY/WAV path or shape name");
    cmp->add_option("--b", cmp_b, "PLY/WAV path or shape name");
    cmp->add_option("--config", cmp_config, "pipeline config JSON");
    cmp->add_option("--shape-n", cmp_shape_n);
    cmp->add_option("--count", cmp_count);
    cmp->add_option("--size", cmp_size);
    cmp->add_option("--reduction", cmp_reduction, "pca|ae");
    cmp->add_option("--epochs", cmp_epochs);
    cmp->add_option("--batch", cmp_batch);
    cmp->add_option("--k", cmp_k);
    cmp->add_option("--mode", cmp_mode, "diagonal|full");
    cmp->add_option("--grid", cmp_grid);
    cmp->add_option("--pad", cmp_pad);
    cmp->add_flag("--raw-sum", cmp_raw);
    cmp->add_option("--emd-size", cmp_emd, "FPS size for the EMD baseline (0=off)");
    cmp->add_option("--dj-size", cmp_dj, "FPS size for the d_J baseline (0=off)");
    cmp->add_option("--seed", cmp_seed);
    cmp->add_option("--nfft", cmp_nfft);
    cmp->add_option("--hop", cmp_hop);
    cmp->add_option("--out", cmp_out, "report JSON (default stdout)");

    // table
    auto* table = app.add_subcommand("table", "Tabulate comparison reports");
    std::vector<std::string> table_reports;
    std::string table_format = "markdown", table_out;
    table->add_option("--reports", table_reports)->required()->expected(-1);
    table->add_option("--format", table_format, "json|csv|markdown");
    table->add_option("--out", table_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_shape, gen_n, gen_seed, gen_out, gen_format);
        if (sample->parsed())
            return cmd_sample(sample_in, sample_count, sample_size, sample_label, sample_seed,
                              sample_out);
        if (reduce->parsed())
            return cmd_reduce(reduce_in, reduce_method, reduce_epochs, reduce_batch,
                              reduce_seed, reduce_out, reduce_model);
        if (fit->parsed()) return cmd_fit(fit_in, fit_label, fit_k, fit_mode, fit_seed, fit_out);
        if (div->parsed())
            return cmd_divergence(div_p, div_q, div_grid, div_pad, div_raw, div_out);
        if (base->parsed())
            return cmd_baseline(base_a, base_b, base_metrics, base_squared, base_dj_mode);
        if (audio->parsed())
            return cmd_audio2cloud(audio_in, audio_nfft, audio_hop, audio_out, audio_format);
        if (cmp->parsed()) {
            // config file is the base; explicit flags override it
            PipelineConfig cfg;
            if (!cmp_config.empty()) cfg = PipelineConfig::load(cmp_config);
            if (!cmp_a.empty()) cfg.input_a = InputSpec::parse(cmp_a);
            if (!cmp_b.empty()) cfg.input_b = InputSpec::parse(cmp_b);
            if (cmp->count("--shape-n")) cfg.shape_n = cmp_shape_n;
            if (cmp->count("--count")) cfg.sample_count = cmp_count;
            if (cmp->count("--size")) cfg.sample_size = cmp_size;
            if (!cmp_reduction.empty()) cfg.reduction = cmp_reduction;
            if (cmp->count("--epochs")) cfg.epochs = cmp_epochs;
            if (cmp->count("--batch")) cfg.batch_size = cmp_batch;
            if (cmp->count("--k")) cfg.gmm_k = cmp_k;
            if (!cmp_mode.empty())
                cfg.cov_mode = cmp_mode == "full" ? CovMode::Full : CovMode::Diagonal;
            if (cmp->count("--grid")) cfg.grid_points = cmp_grid;
            if (cmp->count("--pad")) cfg.grid_pad = cmp_pad;
            if (cmp_raw) cfg.raw_sum = true;
            if (cmp->count("--emd-size")) cfg.emd_size = cmp_emd;
            if (cmp->count("--dj-size")) cfg.dj_size = cmp_dj;
            if (cmp->count("--seed")) cfg.seed = cmp_seed;
            if (cmp->count("--nfft")) cfg.audio_n_fft = cmp_nfft;
            if (cmp->count("--hop")) cfg.audio_hop = cmp_hop;
            if (cfg.input_a.value.empty() || cfg.input_b.value.empty())
                throw FormatError("compare needs --a and --b (or a config file)");
            return cmd_compare(cfg, cmp_out);
        }
        if (table->parsed()) return cmd_table(table_reports, table_format, table_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include "geocloud/reduction.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geocloud/error.hpp"
#include "geocloud/metrics.hpp"
#include "geocloud/rng.hpp"

namespace geocloud {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> weight_map(const AutoencoderParams::Layer& layer) {
    return {layer.W.data(), static_cast<Eigen::Index>(layer.out),
            static_cast<Eigen::Index>(layer.in)};
}

Eigen::Map<const Eigen::VectorXd> bias_map(const AutoencoderParams::Layer& layer) {
    return {layer.b.data(), static_cast<Eigen::Index>(layer.out)};
}

bool is_linear_layer(const AutoencoderParams& p, std::size_t li) {
    return li == p.encoder_layers - 1 || li == p.layers.size() - 1;
}

/// Forward pass over a batch; returns post-activation outputs per layer
/// (acts[0] is the input batch).
std::vector<RowMatrix> forward_batch(const AutoencoderParams& p, RowMatrix input) {
    std::vector<RowMatrix> acts;
    acts.reserve(p.layers.size() + 1);
    acts.push_back(std::move(input));
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        const auto& layer = p.layers[li];
        RowMatrix z = acts.back() * weight_map(layer).transpose();
        z.rowwise() += bias_map(layer).transpose();
        if (!is_linear_layer(p, li)) {
            if (li < p.encoder_layers)
                z = z.unaryExpr([](double v) { return v > 0.0 ? v : 0.01 * v; });
            else
                z = z.cwiseMax(0.0);
        }
        acts.push_back(std::move(z));
    }
    return acts;
}

/// Chamfer loss between one reconstruction row and its target, plus the
/// gradient with respect to the reconstruction. Assignments fixed, ties to
/// the lowest index.
double chamfer_value_and_grad(std::span<const double> recon, const PointCloud& target,
                              std::span<double> grad_out) {
    const std::size_t s = target.size();
    const std::size_t m = target.dim();
    double loss = 0.0;
    std::fill(grad_out.begin(), grad_out.end(), 0.0);

    // reconstruction -> target
    std::vector<std::size_t> nearest_t(s);
    for (std::size_t i = 0; i < s; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < s; ++j) {
            double d2 = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                double d = recon[i * m + a] - target.coord(j, a);
                d2 += d * d;
            }
            if (d2 < best) {
                best = d2;
                arg = j;
            }
        }
        nearest_t[i] = arg;
        double d = std::sqrt(best);
        loss += d / static_cast<double>(s);
        if (d > 1e-300)
            for (std::size_t a = 0; a < m; ++a)
                grad_out[i * m + a] +=
                    (recon[i * m + a] - target.coord(arg, a)) / (d * static_cast<double>(s));
    }
    // target -> reconstruction
    for (std::size_t j = 0; j < s; ++j) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < s; ++i) {
            double d2 = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                double d = recon[i * m + a] - target.coord(j, a);
                d2 += d * d;
            }
            if (d2 < best) {
                best = d2;
                arg = i;
            }
        }
        double d = std::sqrt(best);
        loss += d / static_cast<double>(s);
        if (d > 1e-300)
            for (std::size_t a = 0; a < m; ++a)
                grad_out[arg * m + a] +=
                    (recon[arg * m + a] - target.coord(j, a)) / (d * static_cast<double>(s));
    }
    return loss;
}

}  // namespace

std::vector<double> flatten_sample(const PointCloud& sample) {
    return sample.data();
}

AutoencoderParams make_autoencoder(std::size_t s, std::uint64_t seed,
                                   const std::vector<std::size_t>& encoder_hidden,
                                   const std::vector<std::size_t>& decoder_hidden) {
    const std::size_t d = 3 * s;
    std::vector<std::size_t> widths{d};
    widths.insert(widths.end(), encoder_hidden.begin(), encoder_hidden.end());
    widths.push_back(2);
    const std::size_t enc_count = widths.size() - 1;
    widths.insert(widths.end(), decoder_hidden.begin(), decoder_hidden.end());
    widths.push_back(d);

    AutoencoderParams params;
    params.points_per_sample = s;
    params.encoder_layers = enc_count;
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        AutoencoderParams::Layer layer;
        layer.in = widths[i];
        layer.out = widths[i + 1];
        double lim = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        layer.W.resize(layer.in * layer.out);
        for (double& w : layer.W) w = rng.uniform(-lim, lim);
        layer.b.assign(layer.out, 0.0);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

std::pair<LatentSet, PcaModel> pca_fit_transform(const std::vector<PointCloud>& samples,
                                                 std::size_t target_dim) {
    if (samples.size() < 2)
        throw InsufficientData("PCA needs at least 2 samples, got " +
                               std::to_string(samples.size()));
    const std::size_t d = samples.front().data().size();
    for (const auto& s : samples)
        if (s.data().size() != d) throw DimensionError("samples have differing flattened sizes");

    const auto n = static_cast<Eigen::Index>(samples.size());
    const auto dd = static_cast<Eigen::Index>(d);
    RowMatrix X(n, dd);
    for (Eigen::Index i = 0; i < n; ++i)
        X.row(i) = Eigen::Map<const Eigen::RowVectorXd>(
            samples[static_cast<std::size_t>(i)].data().data(), dd);

    Eigen::RowVectorXd mean = X.colwise().mean();
    RowMatrix centered = X.rowwise() - mean;
    Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");

    PcaModel model;
    model.input_dim = d;
    model.target_dim = target_dim;
    model.mean.assign(mean.data(), mean.data() + d);
    model.basis.assign(d * target_dim, 0.0);
    // eigenvalues ascend; take the top target_dim, fixing the sign so the
    // largest-magnitude entry is positive
    for (std::size_t c = 0; c < target_dim; ++c) {
        Eigen::VectorXd v = solver.eigenvectors().col(dd - 1 - static_cast<Eigen::Index>(c));
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        for (std::size_t r = 0; r < d; ++r)
            model.basis[r * target_dim + c] = v[static_cast<Eigen::Index>(r)];
    }

    LatentSet latent;
    latent.rows.reserve(samples.size());
    latent.labels.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto proj = model.project(samples[i].data());
        latent.rows.push_back({proj[0], target_dim > 1 ? proj[1] : 0.0});
        latent.labels.push_back(samples[i].label());
    }
    return {std::move(latent), std::move(model)};
}

std::vector<double> PcaModel::project(std::span<const double> flat) const {
    if (flat.size() != input_dim) throw DimensionError("PCA projection size mismatch");
    std::vector<double> out(target_dim, 0.0);
    for (std::size_t r = 0; r < input_dim; ++r) {
        double c = flat[r] - mean[r];
        for (std::size_t k = 0; k < target_dim; ++k) out[k] += c * basis[r * target_dim + k];
    }
    return out;
}

std::vector<double> PcaModel::reconstruct(std::span<const double> latent) const {
    if (latent.size() != target_dim) throw DimensionError("PCA latent size mismatch");
    std::vector<double> out(mean);
    for (std::size_t r = 0; r < input_dim; ++r)
        for (std::size_t k = 0; k < target_dim; ++k)
            out[r] += basis[r * target_dim + k] * latent[k];
    return out;
}

double chamfer_loss(std::span<const double> reconstruction, const PointCloud& target) {
    if (reconstruction.size() != target.size() * target.dim())
        throw DimensionError("reconstruction length does not match target shape");
    PointCloud recon(target.dim(),
                     std::vector<double>(reconstruction.begin(), reconstruction.end()));
    return chamfer(recon, target).value;
}

AeForwardResult ae_forward(const AutoencoderParams& params, const PointCloud& sample) {
    if (sample.size() * sample.dim() != params.input_dim())
        throw DimensionError("sample shape does not match autoencoder input");
    RowMatrix input(1, static_cast<Eigen::Index>(params.input_dim()));
    input.row(0) = Eigen::Map<const Eigen::RowVectorXd>(
        sample.data().data(), static_cast<Eigen::Index>(params.input_dim()));
    auto acts = forward_batch(params, std::move(input));
    AeForwardResult res;
    const auto& lat = acts[params.encoder_layers];
    res.latent = {lat(0, 0), lat(0, 1)};
    const auto& recon = acts.back();
    res.reconstruction.assign(recon.data(), recon.data() + recon.cols());
    return res;
}

double ae_loss_and_gradient(const AutoencoderParams& params,
                            const std::vector<const PointCloud*>& batch, AutoencoderGrad& grad) {
    const std::size_t B = batch.size();
    if (B == 0) throw EmptyRequest("empty training batch");
    const std::size_t d = params.input_dim();

    grad.resize(params.layers.size());
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        grad[li].in = params.layers[li].in;
        grad[li].out = params.layers[li].out;
        grad[li].W.assign(params.layers[li].W.size(), 0.0);
        grad[li].b.assign(params.layers[li].b.size(), 0.0);
    }

    RowMatrix input(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < B; ++i) {
        if (batch[i]->size() * batch[i]->dim() != d)
            throw DimensionError("sample shape does not match autoencoder input");
        input.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(
            batch[i]->data().data(), static_cast<Eigen::Index>(d));
    }
    auto acts = forward_batch(params, std::move(input));

    double total_loss = 0.0;
    RowMatrix g(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(d));
    std::vector<double> row_grad(d);
    for (std::size_t i = 0; i < B; ++i) {
        auto recon_row = acts.back().row(static_cast<Eigen::Index>(i));
        std::span<const double> recon{recon_row.data(), d};
        total_loss += chamfer_value_and_grad(recon, *batch[i], row_grad);
        for (std::size_t c = 0; c < d; ++c)
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                row_grad[c] / static_cast<double>(B);
    }

    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const auto& layer = params.layers[li];
        if (!is_linear_layer(params, li)) {
            const RowMatrix& out = acts[li + 1];
            if (li < params.encoder_layers)
                g = g.binaryExpr(out, [](double gv, double ov) {
                    return ov > 0.0 ? gv : 0.01 * gv;
                });
            else
                g = g.binaryExpr(out, [](double gv, double ov) { return ov > 0.0 ? gv : 0.0; });
        }
        Eigen::Map<RowMatrix> gW(grad[li].W.data(), static_cast<Eigen::Index>(layer.out),
                                 static_cast<Eigen::Index>(layer.in));
        gW = g.transpose() * acts[li];
        Eigen::Map<Eigen::VectorXd> gb(grad[li].b.data(), static_cast<Eigen::Index>(layer.out));
        gb = g.colwise().sum();
        if (li > 0) g = (g * weight_map(layer)).eval();
    }
    return total_loss / static_cast<double>(B);
}

TrainHistory ae_train(AutoencoderParams& params, const std::vector<PointCloud>& train,
                      const std::vector<PointCloud>& validation, const TrainConfig& config) {
    if (train.empty()) throw InsufficientData("empty training set");
    Rng rng(config.seed);
    TrainHistory history;

    struct Moments {
        std::vector<double> mW, vW, mb, vb;
    };
    std::vector<Moments> moments(params.layers.size());
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        moments[li].mW.assign(params.layers[li].W.size(), 0.0);
        moments[li].vW.assign(params.layers[li].W.size(), 0.0);
        moments[li].mb.assign(params.layers[li].b.size(), 0.0);
        moments[li].vb.assign(params.layers[li].b.size(), 0.0);
    }

    AutoencoderGrad grad;
    std::size_t step = 0;
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::vector<const PointCloud*> batch;
            for (std::size_t i = start; i < std::min(start + config.batch_size, order.size());
                 ++i)
                batch.push_back(&train[order[i]]);
            double loss = ae_loss_and_gradient(params, batch, grad);
            epoch_loss += loss * static_cast<double>(batch.size());
            ++step;
            double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            for (std::size_t li = 0; li < params.layers.size(); ++li) {
                auto& m = moments[li];
                auto& layer = params.layers[li];
                for (std::size_t w = 0; w < layer.W.size(); ++w) {
                    m.mW[w] = config.beta1 * m.mW[w] + (1.0 - config.beta1) * grad[li].W[w];
                    m.vW[w] = config.beta2 * m.vW[w] +
                              (1.0 - config.beta2) * grad[li].W[w] * grad[li].W[w];
                    layer.W[w] -= config.learning_rate * (m.mW[w] / bc1) /
                                  (std::sqrt(m.vW[w] / bc2) + config.adam_eps);
                }
                for (std::size_t w = 0; w < layer.b.size(); ++w) {
                    m.mb[w] = config.beta1 * m.mb[w] + (1.0 - config.beta1) * grad[li].b[w];
                    m.vb[w] = config.beta2 * m.vb[w] +
                              (1.0 - config.beta2) * grad[li].b[w] * grad[li].b[w];
                    layer.b[w] -= config.learning_rate * (m.mb[w] / bc1) /
                                  (std::sqrt(m.vb[w] / bc2) + config.adam_eps);
                }
            }
        }
        history.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));

        if (!validation.empty()) {
            double val = 0.0;
            for (const auto& sample : validation) {
                auto fwd = ae_forward(params, sample);
                val += chamfer_loss(fwd.reconstruction, sample);
            }
            history.val_loss.push_back(val / static_cast<double>(validation.size()));
        } else {
            history.val_loss.push_back(history.train_loss.back());
        }
    }
    return history;
}

LatentSet embed(const std::vector<PointCloud>& samples, const PcaModel& model) {
    LatentSet out;
    for (const auto& s : samples) {
        auto p = model.project(s.data());
        out.rows.push_back({p[0], model.target_dim > 1 ? p[1] : 0.0});
        out.labels.push_back(s.label());
    }
    return out;
}

LatentSet embed(const std::vector<PointCloud>& samples, const AutoencoderParams& model) {
    LatentSet out;
    for (const auto& s : samples) {
        auto fwd = ae_forward(model, s);
        out.rows.push_back(fwd.latent);
        out.labels.push_back(s.label());
    }
    return out;
}

PointCloud LatentSet::as_cloud(const std::string& label) const {
    PointCloud cloud(2, label);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!label.empty() && labels[i] != label) continue;
        double p[2] = {rows[i][0], rows[i][1]};
        cloud.push_back(p);
    }
    return cloud;
}

std::string LatentSet::to_csv() const {
    std::ostringstream out;
    out << "x,y,label\n";
    char buf[80];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,", rows[i][0], rows[i][1]);
        out << buf << labels[i] << "\n";
    }
    return out.str();
}

LatentSet LatentSet::from_csv_string(const std::string& text) {
    LatentSet set;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("x,", 0) == 0) continue;  // header
        std::istringstream ss(line);
        std::string xs, ys, label;
        if (!std::getline(ss, xs, ',') || !std::getline(ss, ys, ','))
            throw ParseError("malformed latent CSV row", lineno);
        std::getline(ss, label);
        try {
            set.rows.push_back({std::stod(xs), std::stod(ys)});
        } catch (const std::exception&) {
            throw ParseError("non-numeric latent coordinate", lineno);
        }
        set.labels.push_back(label);
    }
    return set;
}

LatentSet LatentSet::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_csv_string(text);
}

void LatentSet::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << to_csv();
}

namespace {

nlohmann::json layer_to_json(const AutoencoderParams::Layer& layer) {
    return {{"in", layer.in}, {"out", layer.out}, {"W", layer.W}, {"b", layer.b}};
}

AutoencoderParams::Layer layer_from_json(const nlohmann::json& j) {
    AutoencoderParams::Layer layer;
    layer.in = j.at("in").get<std::size_t>();
    layer.out = j.at("out").get<std::size_t>();
    layer.W = j.at("W").get<std::vector<double>>();
    layer.b = j.at("b").get<std::vector<double>>();
    if (layer.W.size() != layer.in * layer.out || layer.b.size() != layer.out)
        throw SchemaError("autoencoder layer shape mismatch");
    return layer;
}

}  // namespace

std::string AutoencoderParams::to_json_string(int indent) const {
    nlohmann::json j;
    j["points_per_sample"] = points_per_sample;
    j["encoder_layers"] = encoder_layers;
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : layers) j["layers"].push_back(layer_to_json(layer));
    return j.dump(indent);
}

AutoencoderParams AutoencoderParams::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("invalid autoencoder JSON: ") + e.what());
    }
    AutoencoderParams params;
    try {
        params.points_per_sample = j.at("points_per_sample").get<std::size_t>();
        params.encoder_layers = j.at("encoder_layers").get<std::size_t>();
        for (const auto& lj : j.at("layers")) params.layers.push_back(layer_from_json(lj));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("autoencoder JSON missing fields: ") + e.what());
    }
    return params;
}

AutoencoderParams AutoencoderParams::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

void AutoencoderParams::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << to_json_string() << "\n";
}

std::string PcaModel::to_json_string(int indent) const {
    nlohmann::json j;
    j["input_dim"] = input_dim;
    j["target_dim"] = target_dim;
    j["mean"] = mean;
    j["basis"] = basis;
    return j.dump(indent);
}

PcaModel PcaModel::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("invalid PCA JSON: ") + e.what());
    }
    PcaModel model;
    try {
        model.input_dim = j.at("input_dim").get<std::size_t>();
        model.target_dim = j.at("target_dim").get<std::size_t>();
        model.mean = j.at("mean").get<std::vector<double>>();
        model.basis = j.at("basis").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("PCA JSON missing fields: ") + e.what());
    }
    if (model.mean.size() != model.input_dim ||
        model.basis.size() != model.input_dim * model.target_dim)
        throw SchemaError("PCA model shape mismatch");
    return model;
}

}  // namespace geocloud

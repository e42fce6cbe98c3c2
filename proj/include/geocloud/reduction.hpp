#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "geocloud/point_cloud.hpp"

namespace geocloud {

/// One 2D row per embedded sample, with source labels aligned by index.
struct LatentSet {
    std::vector<std::array<double, 2>> rows;
    std::vector<std::string> labels;

    std::string to_csv() const;
    static LatentSet from_csv_string(const std::string& text);
    static LatentSet load_csv(const std::string& path);
    void save_csv(const std::string& path) const;

    /// Rows with the given label as a dim-2 cloud (all rows if label empty).
    PointCloud as_cloud(const std::string& label = {}) const;
};

/// Mean vector and orthonormal projection basis of a PCA fit on flattened
/// samples. basis is row-major (input_dim x target_dim).
struct PcaModel {
    std::size_t input_dim = 0;
    std::size_t target_dim = 2;
    std::vector<double> mean;
    std::vector<double> basis;

    std::vector<double> project(std::span<const double> flat) const;
    std::vector<double> reconstruct(std::span<const double> latent) const;

    std::string to_json_string(int indent = 2) const;
    static PcaModel from_json_string(const std::string& text);
};

/// Fully connected encoder/decoder. Encoder hiddens use leaky ReLU (slope
/// 0.01), decoder hiddens plain ReLU, both outputs linear.
struct AutoencoderParams {
    struct Layer {
        std::size_t in = 0;
        std::size_t out = 0;
        std::vector<double> W;  // row-major out x in
        std::vector<double> b;  // out
    };
    std::size_t points_per_sample = 0;  // s; input width is 3*s
    std::size_t encoder_layers = 0;     // layers[0..encoder_layers) form the encoder
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    std::size_t latent_dim() const { return encoder_layers == 0 ? 0 : layers[encoder_layers - 1].out; }

    std::string to_json_string(int indent = 2) const;
    static AutoencoderParams from_json_string(const std::string& text);
    static AutoencoderParams load(const std::string& path);
    void save(const std::string& path) const;
};

/// Gradient buffers shaped like the parameters.
using AutoencoderGrad = std::vector<AutoencoderParams::Layer>;

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t batch_size = 16;
    std::size_t epochs = 400;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct TrainHistory {
    std::vector<double> train_loss;  // mean Chamfer loss per epoch
    std::vector<double> val_loss;    // empty entries mirrored when no val set
};

/// Glorot-uniform initialized autoencoder for samples of s points. The
/// default hidden widths are (1024, 512, 256 | 256, 512).
AutoencoderParams make_autoencoder(std::size_t s, std::uint64_t seed,
                                   const std::vector<std::size_t>& encoder_hidden = {1024, 512,
                                                                                     256},
                                   const std::vector<std::size_t>& decoder_hidden = {256, 512});

/// Flattens cloud coordinates in point order into a 3s-vector.
std::vector<double> flatten_sample(const PointCloud& sample);

/// PCA on flattened samples: mean-centered projection onto the leading
/// principal directions.
std::pair<LatentSet, PcaModel> pca_fit_transform(const std::vector<PointCloud>& samples,
                                                 std::size_t target_dim = 2);

/// Chamfer distance between a flat reconstruction and the target cloud.
double chamfer_loss(std::span<const double> reconstruction, const PointCloud& target);

struct AeForwardResult {
    std::array<double, 2> latent{};
    std::vector<double> reconstruction;
};

AeForwardResult ae_forward(const AutoencoderParams& params, const PointCloud& sample);

/// Mean Chamfer loss over a batch plus its gradient with respect to every
/// weight and bias. Nearest-neighbor assignments inside the Chamfer loss are
/// held fixed per forward pass (subgradient convention; ties to lowest index).
double ae_loss_and_gradient(const AutoencoderParams& params,
                            const std::vector<const PointCloud*>& batch, AutoencoderGrad& grad);

/// Mini-batch Adam on the mean Chamfer reconstruction loss. Deterministic
/// given config.seed.
TrainHistory ae_train(AutoencoderParams& params, const std::vector<PointCloud>& train,
                      const std::vector<PointCloud>& validation, const TrainConfig& config);

LatentSet embed(const std::vector<PointCloud>& samples, const PcaModel& model);
LatentSet embed(const std::vector<PointCloud>& samples, const AutoencoderParams& model);

}  // namespace geocloud

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geocloud/point_cloud.hpp"

namespace geocloud {

enum class CovMode { Diagonal, Full };

/// Mixture parameters: K weights, K mean vectors, K covariance matrices.
/// Covariances are stored as row-major m x m matrices in both modes; in
/// diagonal mode the off-diagonal entries are exactly zero.
struct GmmParams {
    std::size_t K = 0;
    std::size_t dim = 0;
    CovMode mode = CovMode::Diagonal;
    std::vector<double> weights;               // K
    std::vector<std::vector<double>> means;    // K x m
    std::vector<std::vector<double>> covs;     // K x (m*m)

    /// Throws if weights do not sum to 1 (1e-9), shapes disagree, or any
    /// covariance is not positive-definite.
    void validate() const;

    std::string to_json_string(int indent = 2) const;
    static GmmParams from_json_string(const std::string& text);
    static GmmParams load(const std::string& path);
    void save(const std::string& path) const;
};

struct FitReport {
    std::size_t iterations = 0;
    double final_log_likelihood = 0.0;
    std::vector<double> trace;  // log-likelihood per EM iteration
    bool converged = false;
    std::size_t reseeded_components = 0;
};

enum class EmInit { KMeans, Random };

struct EmConfig {
    std::size_t max_iter = 500;
    double tol = 1e-6;       // absolute log-likelihood improvement
    double eps_reg = 1e-6;   // covariance floor added to variance estimates
    std::uint64_t seed = 0;
    CovMode mode = CovMode::Diagonal;
    EmInit init = EmInit::KMeans;
};

/// log N(x | mean, cov) evaluated in log space. Throws CovarianceError if the
/// covariance is not positive-definite.
double gaussian_log_pdf(std::span<const double> x, std::span<const double> mean,
                        std::span<const double> cov, std::size_t m, CovMode mode);

double gaussian_pdf(std::span<const double> x, std::span<const double> mean,
                    std::span<const double> cov, std::size_t m, CovMode mode);

/// Mixture log-density via log-sum-exp over components.
double gmm_log_pdf(std::span<const double> x, const GmmParams& params);

double gmm_pdf(std::span<const double> x, const GmmParams& params);

/// Standard EM: log-space E-step, weighted M-step with covariance floor,
/// k-means++ (+10 Lloyd iterations) or random initialization. A component
/// whose effective count collapses is re-seeded at the point of lowest
/// mixture density. Deterministic given config.seed.
std::pair<GmmParams, FitReport> fit_em(const PointCloud& data, std::size_t K,
                                       const EmConfig& config);

/// Components ordered by (trace of covariance, mean lexicographically,
/// weight). In one dimension this is exactly variance-then-mean ordering.
/// The represented density is unchanged.
GmmParams canonicalize(const GmmParams& params);

/// Number of free parameters of the mixture family.
std::size_t param_space_dim(std::size_t K, std::size_t m, CovMode mode);

}  // namespace geocloud

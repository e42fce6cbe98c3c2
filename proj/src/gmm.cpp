#include "geocloud/gmm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "geocloud/error.hpp"
#include "geocloud/rng.hpp"

namespace geocloud {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_sum_exp(std::span<const double> vals) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : vals) mx = std::max(mx, v);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double v : vals) s += std::exp(v - mx);
    return mx + std::log(s);
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
as_matrix(std::span<const double> cov, std::size_t m) {
    return {cov.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)};
}

}  // namespace

double gaussian_log_pdf(std::span<const double> x, std::span<const double> mean,
                        std::span<const double> cov, std::size_t m, CovMode mode) {
    if (x.size() != m || mean.size() != m || cov.size() != m * m)
        throw DimensionError("gaussian_log_pdf shape mismatch");
    if (mode == CovMode::Diagonal) {
        double logdet = 0.0, quad = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            double var = cov[a * m + a];
            if (!(var > 0.0)) throw CovarianceError("non-positive diagonal variance");
            logdet += std::log(var);
            double d = x[a] - mean[a];
            quad += d * d / var;
        }
        return -0.5 * (static_cast<double>(m) * kLog2Pi + logdet + quad);
    }
    Eigen::MatrixXd sigma = as_matrix(cov, m);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw CovarianceError("covariance matrix is not positive-definite");
    Eigen::VectorXd d(m);
    for (std::size_t a = 0; a < m; ++a) d[static_cast<Eigen::Index>(a)] = x[a] - mean[a];
    Eigen::VectorXd y = llt.matrixL().solve(d);
    double logdet = 0.0;
    for (std::size_t a = 0; a < m; ++a)
        logdet += 2.0 * std::log(llt.matrixL()(static_cast<Eigen::Index>(a),
                                               static_cast<Eigen::Index>(a)));
    return -0.5 * (static_cast<double>(m) * kLog2Pi + logdet + y.squaredNorm());
}

double gaussian_pdf(std::span<const double> x, std::span<const double> mean,
                    std::span<const double> cov, std::size_t m, CovMode mode) {
    return std::exp(gaussian_log_pdf(x, mean, cov, m, mode));
}

double gmm_log_pdf(std::span<const double> x, const GmmParams& params) {
    std::vector<double> terms(params.K);
    for (std::size_t k = 0; k < params.K; ++k)
        terms[k] = std::log(params.weights[k]) +
                   gaussian_log_pdf(x, params.means[k], params.covs[k], params.dim, params.mode);
    return log_sum_exp(terms);
}

double gmm_pdf(std::span<const double> x, const GmmParams& params) {
    return std::exp(gmm_log_pdf(x, params));
}

void GmmParams::validate() const {
    if (K == 0 || dim == 0) throw CovarianceError("empty mixture");
    if (weights.size() != K || means.size() != K || covs.size() != K)
        throw DimensionError("component count mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0 || w > 1.0) throw CovarianceError("weight outside [0,1]");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw CovarianceError("weights sum to " + std::to_string(sum));
    std::vector<double> probe(dim, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        if (means[k].size() != dim || covs[k].size() != dim * dim)
            throw DimensionError("component shape mismatch");
        // PD check falls out of evaluating the log-density once
        gaussian_log_pdf(probe, means[k], covs[k], dim, mode);
    }
}

namespace {

struct KMeansResult {
    std::vector<std::vector<double>> centers;  // K x m
    std::vector<std::size_t> assign;           // n
};

KMeansResult kmeans(const PointCloud& data, std::size_t K, Rng& rng, std::size_t iters) {
    const std::size_t n = data.size(), m = data.dim();
    KMeansResult res;
    res.centers.reserve(K);

    // k-means++ seeding
    auto first = data.point(rng.index(n));
    res.centers.emplace_back(first.begin(), first.end());
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(data.point(i), first);
    while (res.centers.size() < K) {
        double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.index(n);
        } else {
            double r = rng.uniform01() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        auto c = data.point(pick);
        res.centers.emplace_back(c.begin(), c.end());
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], squared_distance(data.point(i), c));
    }

    res.assign.resize(n);
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t k = 0; k < K; ++k) {
                double d = squared_distance(data.point(i), res.centers[k]);
                if (d < best) {
                    best = d;
                    arg = k;
                }
            }
            res.assign[i] = arg;
        }
        std::vector<std::vector<double>> sums(K, std::vector<double>(m, 0.0));
        std::vector<std::size_t> counts(K, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto p = data.point(i);
            for (std::size_t a = 0; a < m; ++a) sums[res.assign[i]][a] += p[a];
            ++counts[res.assign[i]];
        }
        for (std::size_t k = 0; k < K; ++k) {
            if (counts[k] == 0) {
                auto p = data.point(rng.index(n));
                res.centers[k].assign(p.begin(), p.end());
                continue;
            }
            for (std::size_t a = 0; a < m; ++a)
                res.centers[k][a] = sums[k][a] / static_cast<double>(counts[k]);
        }
    }
    // final assignment against the updated centers
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t k = 0; k < K; ++k) {
            double d = squared_distance(data.point(i), res.centers[k]);
            if (d < best) {
                best = d;
                arg = k;
            }
        }
        res.assign[i] = arg;
    }
    return res;
}

std::vector<double> per_axis_variance(const PointCloud& data) {
    const std::size_t n = data.size(), m = data.dim();
    std::vector<double> mean(m, 0.0), var(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) mean[a] += data.coord(i, a);
    for (std::size_t a = 0; a < m; ++a) mean[a] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) {
            double d = data.coord(i, a) - mean[a];
            var[a] += d * d;
        }
    for (std::size_t a = 0; a < m; ++a) var[a] /= static_cast<double>(n);
    return var;
}

void set_diag_cov(std::vector<double>& cov, std::size_t m, const std::vector<double>& var) {
    std::fill(cov.begin(), cov.end(), 0.0);
    for (std::size_t a = 0; a < m; ++a) cov[a * m + a] = var[a];
}

}  // namespace

std::pair<GmmParams, FitReport> fit_em(const PointCloud& data, std::size_t K,
                                       const EmConfig& config) {
    const std::size_t n = data.size(), m = data.dim();
    if (K == 0) throw EmptyRequest("K must be >= 1");
    if (n < K)
        throw InsufficientData("cannot fit " + std::to_string(K) + " components to " +
                               std::to_string(n) + " points");

    Rng rng(config.seed);
    GmmParams gp;
    gp.K = K;
    gp.dim = m;
    gp.mode = config.mode;
    gp.weights.assign(K, 1.0 / static_cast<double>(K));
    gp.means.assign(K, std::vector<double>(m, 0.0));
    gp.covs.assign(K, std::vector<double>(m * m, 0.0));

    const std::vector<double> global_var = per_axis_variance(data);
    std::vector<double> floored_global(m);
    for (std::size_t a = 0; a < m; ++a) floored_global[a] = global_var[a] + config.eps_reg;

    if (config.init == EmInit::KMeans) {
        KMeansResult km = kmeans(data, K, rng, 10);
        std::vector<std::size_t> counts(K, 0);
        for (std::size_t i = 0; i < n; ++i) ++counts[km.assign[i]];
        for (std::size_t k = 0; k < K; ++k) {
            gp.means[k] = km.centers[k];
            gp.weights[k] = std::max<std::size_t>(counts[k], 1) / static_cast<double>(n);
            if (counts[k] < 2) {
                set_diag_cov(gp.covs[k], m, floored_global);
                continue;
            }
            std::vector<double> var(m, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (km.assign[i] != k) continue;
                for (std::size_t a = 0; a < m; ++a) {
                    double d = data.coord(i, a) - km.centers[k][a];
                    var[a] += d * d;
                }
            }
            for (std::size_t a = 0; a < m; ++a)
                var[a] = var[a] / static_cast<double>(counts[k]) + config.eps_reg;
            set_diag_cov(gp.covs[k], m, var);
        }
        double wsum = std::accumulate(gp.weights.begin(), gp.weights.end(), 0.0);
        for (double& w : gp.weights) w /= wsum;
    } else {
        for (std::size_t k = 0; k < K; ++k) {
            auto p = data.point(rng.index(n));
            gp.means[k].assign(p.begin(), p.end());
            set_diag_cov(gp.covs[k], m, floored_global);
        }
    }

    FitReport report;
    std::vector<double> resp(n * K);
    std::vector<double> point_ll(n);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
        // E-step
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto x = data.point(i);
            double* row = resp.data() + i * K;
            for (std::size_t k = 0; k < K; ++k)
                row[k] = std::log(gp.weights[k]) +
                         gaussian_log_pdf(x, gp.means[k], gp.covs[k], m, gp.mode);
            double lse = log_sum_exp({row, K});
            point_ll[i] = lse;
            ll += lse;
            for (std::size_t k = 0; k < K; ++k) row[k] = std::exp(row[k] - lse);
        }
        report.trace.push_back(ll);
        report.iterations = iter + 1;
        report.final_log_likelihood = ll;
        if (iter > 0 && ll - prev_ll < config.tol) {
            report.converged = true;
            break;
        }
        prev_ll = ll;

        // M-step
        for (std::size_t k = 0; k < K; ++k) {
            double nk = 0.0;
            for (std::size_t i = 0; i < n; ++i) nk += resp[i * K + k];
            if (nk < 1e-10) {
                // dead component: re-seed it at the point the mixture explains worst
                std::size_t worst = 0;
                for (std::size_t i = 1; i < n; ++i)
                    if (point_ll[i] < point_ll[worst]) worst = i;
                auto p = data.point(worst);
                gp.means[k].assign(p.begin(), p.end());
                set_diag_cov(gp.covs[k], m, floored_global);
                gp.weights[k] = 1.0 / static_cast<double>(n);
                ++report.reseeded_components;
                continue;
            }
            for (std::size_t a = 0; a < m; ++a) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += resp[i * K + k] * data.coord(i, a);
                gp.means[k][a] = s / nk;
            }
            if (gp.mode == CovMode::Diagonal) {
                std::vector<double> var(m, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    double r = resp[i * K + k];
                    for (std::size_t a = 0; a < m; ++a) {
                        double d = data.coord(i, a) - gp.means[k][a];
                        var[a] += r * d * d;
                    }
                }
                for (std::size_t a = 0; a < m; ++a) var[a] = var[a] / nk + config.eps_reg;
                set_diag_cov(gp.covs[k], m, var);
            } else {
                std::vector<double> cov(m * m, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    double r = resp[i * K + k];
                    auto x = data.point(i);
                    for (std::size_t a = 0; a < m; ++a)
                        for (std::size_t b = a; b < m; ++b) {
                            double v = r * (x[a] - gp.means[k][a]) * (x[b] - gp.means[k][b]);
                            cov[a * m + b] += v;
                        }
                }
                for (std::size_t a = 0; a < m; ++a)
                    for (std::size_t b = a; b < m; ++b) {
                        double v = cov[a * m + b] / nk;
                        cov[a * m + b] = v;
                        cov[b * m + a] = v;
                    }
                for (std::size_t a = 0; a < m; ++a) cov[a * m + a] += config.eps_reg;
                gp.covs[k] = std::move(cov);
            }
            gp.weights[k] = nk / static_cast<double>(n);
        }
        double wsum = std::accumulate(gp.weights.begin(), gp.weights.end(), 0.0);
        for (double& w : gp.weights) w /= wsum;
    }
    return {std::move(gp), std::move(report)};
}

GmmParams canonicalize(const GmmParams& params) {
    std::vector<std::size_t> order(params.K);
    std::iota(order.begin(), order.end(), 0);
    auto trace_of = [&](std::size_t k) {
        double t = 0.0;
        for (std::size_t a = 0; a < params.dim; ++a) t += params.covs[k][a * params.dim + a];
        return t;
    };
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        double ti = trace_of(i), tj = trace_of(j);
        if (ti != tj) return ti < tj;
        if (params.means[i] != params.means[j]) return params.means[i] < params.means[j];
        return params.weights[i] < params.weights[j];
    });
    GmmParams out = params;
    for (std::size_t k = 0; k < params.K; ++k) {
        out.weights[k] = params.weights[order[k]];
        out.means[k] = params.means[order[k]];
        out.covs[k] = params.covs[order[k]];
    }
    return out;
}

std::size_t param_space_dim(std::size_t K, std::size_t m, CovMode mode) {
    std::size_t per_cov = mode == CovMode::Full ? m * (m + 1) / 2 : m;
    return K * (m + per_cov) + (K - 1);
}

std::string GmmParams::to_json_string(int indent) const {
    nlohmann::json j;
    j["K"] = K;
    j["dim"] = dim;
    j["mode"] = mode == CovMode::Diagonal ? "diagonal" : "full";
    j["weights"] = weights;
    j["means"] = means;
    nlohmann::json covs_j = nlohmann::json::array();
    for (const auto& c : covs) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t a = 0; a < dim; ++a)
            rows.push_back(std::vector<double>(c.begin() + static_cast<long>(a * dim),
                                               c.begin() + static_cast<long>((a + 1) * dim)));
        covs_j.push_back(rows);
    }
    j["covariances"] = covs_j;
    return j.dump(indent);
}

GmmParams GmmParams::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("invalid GMM JSON: ") + e.what());
    }
    GmmParams gp;
    try {
        gp.K = j.at("K").get<std::size_t>();
        gp.dim = j.at("dim").get<std::size_t>();
        std::string mode = j.at("mode").get<std::string>();
        if (mode == "diagonal")
            gp.mode = CovMode::Diagonal;
        else if (mode == "full")
            gp.mode = CovMode::Full;
        else
            throw SchemaError("unknown covariance mode '" + mode + "'");
        gp.weights = j.at("weights").get<std::vector<double>>();
        gp.means = j.at("means").get<std::vector<std::vector<double>>>();
        for (const auto& rows : j.at("covariances")) {
            std::vector<double> flat;
            for (const auto& row : rows)
                for (const auto& v : row) flat.push_back(v.get<double>());
            gp.covs.push_back(std::move(flat));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("GMM JSON missing fields: ") + e.what());
    }
    gp.validate();
    return gp;
}

GmmParams GmmParams::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

void GmmParams::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << to_json_string() << "\n";
}

}  // namespace geocloud

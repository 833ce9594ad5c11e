#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "narrinf/data.hpp"
#include "narrinf/exposure.hpp"
#include "narrinf/graph.hpp"

namespace narrinf {

/// Coefficients of the conditional Poisson outcome model
///   log lambda_i = tau z_i + sum_n (tau prod_{k<=n} gamma_k) s_i^(n)
///                  + beta' x_i + mu + eps_i.
struct ModelParams {
    double tau = 0.0;
    Eigen::VectorXd gamma;  // one decay per hop
    Eigen::VectorXd beta;   // one effect per covariate
    double mu = 0.0;
    double sigma_eps = 0.0;

    std::size_t n_hops() const noexcept { return static_cast<std::size_t>(gamma.size()); }
    std::size_t n_covariates() const noexcept { return static_cast<std::size_t>(beta.size()); }

    /// Number of regression coefficients (tau, gamma, beta, mu).
    std::size_t n_coefficients() const noexcept { return 2 + n_hops() + n_covariates(); }

    /// tau >= 0, gamma in [0,1], sigma_eps >= 0, everything finite.
    bool in_support() const;
    /// Throws InputError naming the first violated constraint.
    void validate() const;

    /// Coefficients packed as (tau, gamma_1..H, beta_1..m, mu).
    Eigen::VectorXd pack() const;
    /// Inverse of pack(); sigma_eps is taken from `sigma`.
    static ModelParams unpack(const Eigen::VectorXd& theta, std::size_t n_hops, std::size_t n_covariates,
                              double sigma = 0.0);
    /// Coefficient names in pack() order.
    std::vector<std::string> coefficient_names() const;
};

/// Per-vertex heterogeneity terms.
using LatentEffects = Eigen::VectorXd;

struct ModelConfig {
    std::size_t n_hops = 1;
    double eta_clamp = 30.0;
};

/// Hop-n exposure coefficient tau * prod_{k<=n} gamma_k, for n = 1..H.
Eigen::VectorXd hop_coefficients(const ModelParams& p);

/// eta for every vertex, clamped to [-clamp, clamp]. `eps` may be empty
/// (treated as zero). The number of clamped entries is added to `*clamped`.
Eigen::VectorXd linear_predictor(const ModelParams& p, const SourceVector& z, const ExposureTensor& s,
                                 const CovariateMatrix& x, const LatentEffects& eps,
                                 const ModelConfig& config = {}, std::size_t* clamped = nullptr);

/// lambda = exp(eta).
Eigen::VectorXd expected_outcomes(const Eigen::VectorXd& eta);

/// sum_i y_i eta_i - exp(eta_i) - log(y_i!).
double log_likelihood(const ModelParams& p, const LatentEffects& eps, const SourceVector& z,
                      const ExposureTensor& s, const CovariateMatrix& x, const OutcomeVector& y,
                      const ModelConfig& config = {});

/// Poisson log-likelihood of counts given a linear predictor.
double poisson_log_likelihood(const Eigen::VectorXd& eta, const OutcomeVector& y);

/// d eta_i / d theta for theta in pack() order; N x n_coefficients. Does not
/// account for clamping.
Eigen::MatrixXd predictor_jacobian(const ModelParams& p, const SourceVector& z, const ExposureTensor& s,
                                   const CovariateMatrix& x);

/// Gradient of log_likelihood with respect to pack() coefficients.
Eigen::VectorXd log_likelihood_gradient(const ModelParams& p, const LatentEffects& eps,
                                        const SourceVector& z, const ExposureTensor& s,
                                        const CovariateMatrix& x, const OutcomeVector& y,
                                        const ModelConfig& config = {});

struct SimulatedOutcomes {
    OutcomeVector y;
    LatentEffects eps;
};

/// eps ~ Normal(0, sigma_eps^2), y ~ Poisson(exp(eta)). Reproducible from the seed.
SimulatedOutcomes simulate_outcomes(const ModelParams& p, const InfluenceGraph& g, const SourceVector& z,
                                    const CovariateMatrix& x, const ModelConfig& config,
                                    std::uint64_t seed);

/// Directed Erdos-Renyi graph, edge probability mean_out_degree / (n - 1),
/// integer weights uniform on {1..weight_max}. Vertex ids are "u0".."u{n-1}".
InfluenceGraph simulate_graph(std::size_t n, double mean_out_degree, int weight_max, std::uint64_t seed);

/// A random design ready for simulate_outcomes: graph, sources drawn with
/// probability `source_fraction` (at least one), and a single popularity
/// covariate log(1 + out_degree).
struct SyntheticDesign {
    InfluenceGraph graph;
    SourceVector z;
    CovariateMatrix x;
};

SyntheticDesign simulate_design(std::size_t n, double mean_out_degree, int weight_max,
                                double source_fraction, std::uint64_t seed);

/// Maximum-likelihood coefficients with eps = 0, by Fisher scoring with step
/// halving. Coefficients are unconstrained.
struct MleResult {
    Eigen::VectorXd theta;  // pack() order
    double log_likelihood = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

MleResult fit_mle(const SourceVector& z, const ExposureTensor& s, const CovariateMatrix& x,
                  const OutcomeVector& y, const Eigen::VectorXd& start, const ModelConfig& config = {},
                  std::size_t max_iter = 100, double tol = 1e-10);

}  // namespace narrinf

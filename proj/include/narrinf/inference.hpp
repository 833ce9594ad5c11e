#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "narrinf/data.hpp"
#include "narrinf/exposure.hpp"
#include "narrinf/graph.hpp"
#include "narrinf/model.hpp"

namespace narrinf {

/// Everything the sampler conditions on. Exposure is precomputed from the
/// observed sources.
struct FitData {
    SourceVector z;
    ExposureTensor s;
    CovariateMatrix x;
    OutcomeVector y;

    std::size_t n_vertices() const noexcept { return z.size(); }
    std::size_t n_hops() const noexcept { return s.n_hops(); }
    std::size_t n_covariates() const noexcept { return x.n_cols(); }
    void validate() const;
};

FitData make_fit_data(const InfluenceGraph& g, SourceVector z, CovariateMatrix x, OutcomeVector y,
                      std::size_t n_hops);

/// tau ~ Normal(0, tau_sd^2) truncated to [0, inf); gamma_k ~ Uniform(0, 1);
/// beta_j ~ Normal(0, beta_sd^2); mu ~ Normal(0, mu_sd^2);
/// sigma_eps^2 ~ InverseGamma(sigma2_shape, sigma2_scale); eps_i ~ Normal(0, sigma_eps^2).
struct PriorSpec {
    double tau_sd = 10.0;
    double beta_sd = 10.0;
    double mu_sd = 10.0;
    double sigma2_shape = 2.0;
    double sigma2_scale = 1.0;

    void validate() const;
};

/// Log prior density of coefficients, sigma_eps^2 and the latent effects.
/// -inf outside the support.
double log_prior(const ModelParams& p, const LatentEffects& eps, const PriorSpec& priors);

/// log_likelihood + log_prior; -inf outside the support.
double log_posterior(const ModelParams& p, const LatentEffects& eps, const FitData& data,
                     const PriorSpec& priors, const ModelConfig& config = {});

struct ChainState {
    ModelParams params;
    LatentEffects eps;
};

struct ProposalScales {
    Eigen::VectorXd coef;  // ModelParams::pack() order
    Eigen::VectorXd eps;   // one per vertex
};

/// Acceptance indicators from one sweep: one per coefficient (pack() order)
/// and one per latent effect.
struct SweepAccepts {
    Eigen::VectorXd coef;
    Eigen::VectorXd eps;
};

using Rng = std::mt19937_64;

/// Draws sigma_eps^2 from its conjugate Inverse-Gamma full conditional
/// IG(shape + N/2, scale + sum(eps^2)/2).
double draw_sigma2(const LatentEffects& eps, const PriorSpec& priors, Rng& rng);

/// One Metropolis-within-Gibbs sweep: random-walk updates of tau, each
/// gamma_k, each beta_j, mu and each eps_i in turn (proposals outside the
/// support are rejected; a zero scale leaves the value unchanged and counts
/// as accepted), then a conjugate draw of sigma_eps^2.
ChainState gibbs_sweep(const ChainState& state, const FitData& data, const PriorSpec& priors,
                       const ProposalScales& scales, Rng& rng, SweepAccepts* accepts = nullptr,
                       const ModelConfig& config = {});

/// Redraws mu with every mu + eps_i held fixed. The likelihood is unchanged,
/// so mu comes exactly from its Gaussian conditional. No-op when sigma_eps
/// is zero or there are no latent effects.
void recenter_intercept(ChainState& state, const PriorSpec& priors, Rng& rng);

/// Joint random-walk Metropolis move of all coefficients with increments
/// chol * N(0, I). Returns true when accepted.
bool block_move(ChainState& state, const FitData& data, const PriorSpec& priors, const Eigen::MatrixXd& chol,
                Rng& rng, const ModelConfig& config = {});

/// Random-walk move of beta_j by delta with mu shifted by -delta * mean(x_j),
/// so the fit moves along the ridge left by an uncentred covariate.
/// Returns true when accepted.
bool centered_shift(ChainState& state, const FitData& data, const PriorSpec& priors, std::size_t j, double sd,
                    Rng& rng, const ModelConfig& config = {});

/// Joint rescaling of eps and sigma_eps by exp(N(0, log_scale_sd^2)),
/// accepted by Metropolis-Hastings. Returns true when accepted.
bool scale_move(ChainState& state, const FitData& data, const PriorSpec& priors, double log_scale_sd, Rng& rng,
                const ModelConfig& config = {});

struct McmcConfig {
    std::size_t n_chains = 4;
    std::size_t n_iters = 5000;
    std::size_t burn_in = 2500;
    std::size_t thin = 5;
    std::uint64_t seed = 1;
    double target_accept = 0.3;
    std::size_t adapt_every = 50;
    double initial_coef_scale = 0.1;
    double initial_eps_scale = 0.3;
    /// Keep latent effects with each draw (memory N per draw).
    bool keep_eps = false;
    /// After each sweep, also run recenter_intercept and a block_move whose
    /// shape is learned from burn-in draws.
    bool joint_moves = true;
    std::size_t threads = 1;

    void validate() const;
    std::size_t draws_per_chain() const { return (n_iters - burn_in) / thin; }
};

struct Draw {
    ModelParams params;
    LatentEffects eps;  // empty unless McmcConfig::keep_eps
};

struct PosteriorSamples {
    std::vector<std::vector<Draw>> chains;
    /// Post-burn-in acceptance rate per coefficient name plus "eps" (mean
    /// over vertices) and "sigma_eps" (always 1, Gibbs draw).
    std::map<std::string, double> acceptance_rates;
    McmcConfig config;
    std::size_t n_hops = 1;
    std::size_t n_covariates = 1;

    std::size_t total_draws() const;
    bool empty() const { return total_draws() == 0; }
    /// Draws of every chain concatenated in chain order.
    std::vector<const Draw*> flat() const;
    /// Coefficient names followed by "sigma_eps".
    std::vector<std::string> parameter_names() const;
    /// Per-chain trace of one parameter (index into parameter_names()).
    std::vector<std::vector<double>> trace(std::size_t param) const;
};

/// Runs config.n_chains independent chains from prior draws. Proposal scales
/// adapt every `adapt_every` iterations during burn-in only (x1.1 when the
/// window acceptance exceeds the target, x0.9 otherwise).
PosteriorSamples fit(const FitData& data, const PriorSpec& priors, const McmcConfig& config,
                     const ModelConfig& model_config = {});

/// Initial state drawn from the prior; retried up to 100 times until the
/// posterior is finite.
ChainState draw_initial_state(const FitData& data, const PriorSpec& priors, Rng& rng,
                              const ModelConfig& config = {});

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double lo = 0.0;  // 5% quantile
    double hi = 0.0;  // 95% quantile
    std::optional<double> rhat;
    bool zero_variance = false;
    bool flagged = false;  // rhat above the threshold
};

struct DiagnosticsSummary {
    std::vector<ParameterSummary> parameters;
    std::map<std::string, double> acceptance_rates;
    std::vector<std::string> notices;
    double rhat_threshold = 1.05;

    double max_rhat() const;
};

DiagnosticsSummary diagnostics(const PosteriorSamples& samples, double rhat_threshold = 1.05);

}  // namespace narrinf

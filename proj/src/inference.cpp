#include "narrinf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "narrinf/error.hpp"
#include "narrinf/parallel.hpp"
#include "narrinf/stats.hpp"

namespace narrinf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_density(double v, double sd) {
    return -0.5 * std::log(2.0 * std::numbers::pi * sd * sd) - 0.5 * (v / sd) * (v / sd);
}

double log_inverse_gamma_density(double v, double shape, double scale) {
    if (!(v > 0.0)) return kNegInf;
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(v) - scale / v;
}

// Prior of one packed coefficient; -inf outside its support.
double log_coefficient_prior(std::size_t k, double v, std::size_t n_hops, std::size_t n_covariates,
                             const PriorSpec& priors) {
    if (!std::isfinite(v)) return kNegInf;
    if (k == 0) return v < 0.0 ? kNegInf : std::numbers::ln2 + log_normal_density(v, priors.tau_sd);
    if (k <= n_hops) return (v < 0.0 || v > 1.0) ? kNegInf : 0.0;
    if (k <= n_hops + n_covariates) return log_normal_density(v, priors.beta_sd);
    return log_normal_density(v, priors.mu_sd);
}

// Unclamped linear predictor from packed coefficients.
Eigen::VectorXd raw_predictor(const Eigen::VectorXd& theta, const FitData& data, const LatentEffects& eps) {
    const auto h = static_cast<Eigen::Index>(data.n_hops());
    const auto m = static_cast<Eigen::Index>(data.n_covariates());
    Eigen::VectorXd coef(h);
    double running = theta[0];
    for (Eigen::Index k = 0; k < h; ++k) {
        running *= theta[1 + k];
        coef[k] = running;
    }
    Eigen::VectorXd eta = data.x.x * theta.segment(1 + h, m);
    eta.array() += theta[1 + h + m];
    eta += theta[0] * data.z.as_vector();
    eta += data.s.s.transpose() * coef;
    if (eps.size() != 0) eta += eps;
    return eta;
}

// d eta / d theta_k at theta. eta is linear in each coefficient separately.
Eigen::VectorXd coefficient_direction(const Eigen::VectorXd& theta, Eigen::Index k, const FitData& data) {
    const auto h = static_cast<Eigen::Index>(data.n_hops());
    const auto m = static_cast<Eigen::Index>(data.n_covariates());
    const auto n = static_cast<Eigen::Index>(data.n_vertices());
    if (k == 0) {
        Eigen::VectorXd decay(h);
        double running = 1.0;
        for (Eigen::Index j = 0; j < h; ++j) {
            running *= theta[1 + j];
            decay[j] = running;
        }
        return data.z.as_vector() + data.s.s.transpose() * decay;
    }
    if (k <= h) {
        const Eigen::Index g = k - 1;
        Eigen::VectorXd weights = Eigen::VectorXd::Zero(h);
        for (Eigen::Index hop = g; hop < h; ++hop) {
            double prod = theta[0];
            for (Eigen::Index j = 0; j <= hop; ++j) {
                if (j != g) prod *= theta[1 + j];
            }
            weights[hop] = prod;
        }
        return data.s.s.transpose() * weights;
    }
    if (k <= h + m) return data.x.x.col(k - 1 - h);
    return Eigen::VectorXd::Ones(n);
}

double clamp_eta(double v, double limit) { return std::clamp(v, -limit, limit); }

// Likelihood kernel without the log(y!) constant.
double kernel(const Eigen::VectorXd& eta, const Eigen::VectorXd& y, double limit) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double e = clamp_eta(eta[i], limit);
        ll += y[i] * e - std::exp(e);
    }
    return ll;
}

double kernel_at(double eta, double y, double limit) {
    const double e = clamp_eta(eta, limit);
    return y * e - std::exp(e);
}

std::seed_seq chain_seed(std::uint64_t seed, std::size_t chain) {
    return std::seed_seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(chain)};
}

// Scaled Cholesky factor of the covariance of the later half of `history`.
Eigen::MatrixXd proposal_shape(const std::vector<Eigen::VectorXd>& history) {
    const std::size_t start = history.size() / 2;
    const auto p = history.front().size();
    const double count = static_cast<double>(history.size() - start);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    for (std::size_t i = start; i < history.size(); ++i) mean += history[i];
    mean /= count;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = start; i < history.size(); ++i) {
        const Eigen::VectorXd d = history[i] - mean;
        cov += d * d.transpose();
    }
    cov /= count - 1.0;
    cov.diagonal().array() += 1e-10 + 1e-6 * cov.diagonal().array();
    const double scale = 2.38 * 2.38 / static_cast<double>(p);
    return Eigen::LLT<Eigen::MatrixXd>(scale * cov).matrixL();
}

}  // namespace

void FitData::validate() const {
    const std::size_t n = z.size();
    if (s.n_vertices() != n || x.n_rows() != n || y.size() != n) {
        throw InputError("fit data dimensions disagree: " + std::to_string(n) + " sources, " +
                         std::to_string(s.n_vertices()) + " exposure columns, " +
                         std::to_string(x.n_rows()) + " covariate rows, " + std::to_string(y.size()) +
                         " outcomes");
    }
    if (s.n_hops() < 1) throw InputError("fit data needs at least one exposure hop");
    x.validate();
    y.validate();
}

FitData make_fit_data(const InfluenceGraph& g, SourceVector z, CovariateMatrix x, OutcomeVector y,
                      std::size_t n_hops) {
    FitData d{std::move(z), {}, std::move(x), std::move(y)};
    d.s = exposure_profile(g, d.z, n_hops);
    d.validate();
    return d;
}

void PriorSpec::validate() const {
    if (!(tau_sd > 0.0 && beta_sd > 0.0 && mu_sd > 0.0)) throw InputError("prior scales must be positive");
    if (!(sigma2_shape > 0.0 && sigma2_scale > 0.0)) {
        throw InputError("inverse-gamma hyperparameters must be positive");
    }
}

double log_prior(const ModelParams& p, const LatentEffects& eps, const PriorSpec& priors) {
    const Eigen::VectorXd theta = p.pack();
    double lp = 0.0;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        lp += log_coefficient_prior(static_cast<std::size_t>(k), theta[k], p.n_hops(), p.n_covariates(), priors);
    }
    if (!std::isfinite(p.sigma_eps) || p.sigma_eps < 0.0) return kNegInf;
    const double sigma2 = p.sigma_eps * p.sigma_eps;
    lp += log_inverse_gamma_density(sigma2, priors.sigma2_shape, priors.sigma2_scale);
    if (!std::isfinite(lp)) return kNegInf;
    for (Eigen::Index i = 0; i < eps.size(); ++i) lp += log_normal_density(eps[i], p.sigma_eps);
    return std::isnan(lp) ? kNegInf : lp;
}

double log_posterior(const ModelParams& p, const LatentEffects& eps, const FitData& data,
                     const PriorSpec& priors, const ModelConfig& config) {
    if (!p.in_support()) return kNegInf;
    const double lp = log_prior(p, eps, priors);
    if (!std::isfinite(lp)) return kNegInf;
    const double ll = log_likelihood(p, eps, data.z, data.s, data.x, data.y, config);
    return std::isfinite(ll) ? ll + lp : kNegInf;
}

double draw_sigma2(const LatentEffects& eps, const PriorSpec& priors, Rng& rng) {
    const double shape = priors.sigma2_shape + 0.5 * static_cast<double>(eps.size());
    const double scale = priors.sigma2_scale + 0.5 * eps.squaredNorm();
    std::gamma_distribution<double> gamma(shape, 1.0);
    return scale / gamma(rng);
}

ChainState gibbs_sweep(const ChainState& state, const FitData& data, const PriorSpec& priors,
                       const ProposalScales& scales, Rng& rng, SweepAccepts* accepts,
                       const ModelConfig& config) {
    const std::size_t h = data.n_hops();
    const std::size_t m = data.n_covariates();
    const double limit = config.eta_clamp;
    std::normal_distribution<double> step(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    ChainState next = state;
    Eigen::VectorXd theta = state.params.pack();
    const Eigen::Index n_coef = theta.size();
    const auto n = static_cast<Eigen::Index>(data.n_vertices());
    if (next.eps.size() == 0) next.eps = LatentEffects::Zero(n);
    if (accepts) {
        accepts->coef = Eigen::VectorXd::Zero(n_coef);
        accepts->eps = Eigen::VectorXd::Zero(n);
    }

    Eigen::VectorXd eta = raw_predictor(theta, data, next.eps);
    double ll = kernel(eta, data.y.y, limit);

    for (Eigen::Index k = 0; k < n_coef; ++k) {
        const double scale = scales.coef[k];
        if (scale == 0.0) {
            if (accepts) accepts->coef[k] = 1.0;
            continue;
        }
        const double proposal = theta[k] + scale * step(rng);
        const double log_u = std::log(unif(rng));
        const double prior_new = log_coefficient_prior(static_cast<std::size_t>(k), proposal, h, m, priors);
        if (!std::isfinite(prior_new)) continue;
        const double prior_old = log_coefficient_prior(static_cast<std::size_t>(k), theta[k], h, m, priors);
        Eigen::VectorXd eta_new = eta + (proposal - theta[k]) * coefficient_direction(theta, k, data);
        const double ll_new = kernel(eta_new, data.y.y, limit);
        if (log_u < ll_new - ll + prior_new - prior_old) {
            theta[k] = proposal;
            eta.swap(eta_new);
            ll = ll_new;
            if (accepts) accepts->coef[k] = 1.0;
        }
    }

    const double sigma2 = state.params.sigma_eps * state.params.sigma_eps;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = scales.eps[i];
        if (scale == 0.0) {
            if (accepts) accepts->eps[i] = 1.0;
            continue;
        }
        const double delta = scale * step(rng);
        const double log_u = std::log(unif(rng));
        if (!(sigma2 > 0.0)) continue;
        const double old_eps = next.eps[i];
        const double new_eps = old_eps + delta;
        const double y = data.y.y[i];
        const double log_ratio = kernel_at(eta[i] + delta, y, limit) - kernel_at(eta[i], y, limit) -
                                 (new_eps * new_eps - old_eps * old_eps) / (2.0 * sigma2);
        if (log_u < log_ratio) {
            next.eps[i] = new_eps;
            eta[i] += delta;
            if (accepts) accepts->eps[i] = 1.0;
        }
    }

    next.params = ModelParams::unpack(theta, h, m, std::sqrt(draw_sigma2(next.eps, priors, rng)));
    return next;
}

void recenter_intercept(ChainState& state, const PriorSpec& priors, Rng& rng) {
    const auto n = state.eps.size();
    const double sigma2 = state.params.sigma_eps * state.params.sigma_eps;
    if (n == 0 || !(sigma2 > 0.0)) return;
    const Eigen::VectorXd c = state.eps.array() + state.params.mu;
    const double precision = 1.0 / (priors.mu_sd * priors.mu_sd) + static_cast<double>(n) / sigma2;
    const double mean = c.sum() / sigma2 / precision;
    std::normal_distribution<double> normal(mean, 1.0 / std::sqrt(precision));
    state.params.mu = normal(rng);
    state.eps = c.array() - state.params.mu;
}

bool block_move(ChainState& state, const FitData& data, const PriorSpec& priors, const Eigen::MatrixXd& chol,
                Rng& rng, const ModelConfig& config) {
    const std::size_t h = data.n_hops();
    const std::size_t m = data.n_covariates();
    const Eigen::VectorXd theta = state.params.pack();
    std::normal_distribution<double> step(0.0, 1.0);
    Eigen::VectorXd xi(theta.size());
    for (auto& v : xi) v = step(rng);
    const Eigen::VectorXd proposal = theta + chol * xi;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double log_u = std::log(unif(rng));

    double prior_delta = 0.0;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        const double pn = log_coefficient_prior(static_cast<std::size_t>(k), proposal[k], h, m, priors);
        if (!std::isfinite(pn)) return false;
        prior_delta += pn - log_coefficient_prior(static_cast<std::size_t>(k), theta[k], h, m, priors);
    }
    const double ll_old = kernel(raw_predictor(theta, data, state.eps), data.y.y, config.eta_clamp);
    const double ll_new = kernel(raw_predictor(proposal, data, state.eps), data.y.y, config.eta_clamp);
    if (!(log_u < ll_new - ll_old + prior_delta)) return false;
    state.params = ModelParams::unpack(proposal, h, m, state.params.sigma_eps);
    return true;
}

bool centered_shift(ChainState& state, const FitData& data, const PriorSpec& priors, std::size_t j, double sd,
                    Rng& rng, const ModelConfig& config) {
    const std::size_t h = data.n_hops();
    const std::size_t m = data.n_covariates();
    if (j >= m || !(sd > 0.0) || data.n_vertices() == 0) return false;
    std::normal_distribution<double> normal(0.0, sd);
    const double delta = normal(rng);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double log_u = std::log(unif(rng));
    const auto col = data.x.x.col(static_cast<Eigen::Index>(j));
    const double centre = col.mean();
    const Eigen::VectorXd theta = state.params.pack();
    Eigen::VectorXd proposal = theta;
    const auto kb = static_cast<Eigen::Index>(1 + h + j);
    const auto km = static_cast<Eigen::Index>(1 + h + m);
    proposal[kb] += delta;
    proposal[km] -= delta * centre;
    const double prior_delta = log_coefficient_prior(kb, proposal[kb], h, m, priors) +
                               log_coefficient_prior(km, proposal[km], h, m, priors) -
                               log_coefficient_prior(kb, theta[kb], h, m, priors) -
                               log_coefficient_prior(km, theta[km], h, m, priors);
    if (!std::isfinite(prior_delta)) return false;
    const Eigen::VectorXd eta = raw_predictor(theta, data, state.eps);
    const Eigen::VectorXd eta_new = eta + delta * (col.array() - centre).matrix();
    const double ll_delta = kernel(eta_new, data.y.y, config.eta_clamp) - kernel(eta, data.y.y, config.eta_clamp);
    if (!(log_u < ll_delta + prior_delta)) return false;
    state.params = ModelParams::unpack(proposal, h, m, state.params.sigma_eps);
    return true;
}

bool scale_move(ChainState& state, const FitData& data, const PriorSpec& priors, double log_scale_sd, Rng& rng,
                const ModelConfig& config) {
    const auto n = state.eps.size();
    const double sigma = state.params.sigma_eps;
    if (n == 0 || !(sigma > 0.0) || !(log_scale_sd > 0.0)) return false;
    std::normal_distribution<double> normal(0.0, log_scale_sd);
    const double log_c = normal(rng);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double log_u = std::log(unif(rng));
    const double c = std::exp(log_c);
    const Eigen::VectorXd theta = state.params.pack();
    const LatentEffects eps_new = c * state.eps;
    ModelParams p_new = state.params;
    p_new.sigma_eps = c * sigma;
    // eps / sigma is unchanged, so the latent prior only moves through its
    // normalizing constant. The state is (eps, sigma^2), so the map
    // eps -> c eps, sigma^2 -> c^2 sigma^2 has Jacobian c^(n+2).
    const double sigma2_old = sigma * sigma;
    const double sigma2_new = p_new.sigma_eps * p_new.sigma_eps;
    const double prior_delta =
        log_inverse_gamma_density(sigma2_new, priors.sigma2_shape, priors.sigma2_scale) -
        log_inverse_gamma_density(sigma2_old, priors.sigma2_shape, priors.sigma2_scale) -
        static_cast<double>(n) * log_c;
    if (!std::isfinite(prior_delta)) return false;
    const double ll_old = kernel(raw_predictor(theta, data, state.eps), data.y.y, config.eta_clamp);
    const double ll_new = kernel(raw_predictor(theta, data, eps_new), data.y.y, config.eta_clamp);
    const double jacobian = static_cast<double>(n + 2) * log_c;
    if (!(log_u < ll_new - ll_old + prior_delta + jacobian)) return false;
    state.eps = eps_new;
    state.params.sigma_eps = p_new.sigma_eps;
    return true;
}

void McmcConfig::validate() const {
    if (n_chains < 1) throw InputError("need at least one chain");
    if (thin < 1) throw InputError("thin must be >= 1");
    if (burn_in >= n_iters) {
        throw InputError("burn-in (" + std::to_string(burn_in) + ") must be smaller than the iteration count (" +
                         std::to_string(n_iters) + ")");
    }
    if (adapt_every < 1) throw InputError("adaptation window must be >= 1");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("target acceptance must lie in (0,1)");
    if (!(initial_coef_scale >= 0.0 && initial_eps_scale >= 0.0)) {
        throw InputError("initial proposal scales must be nonnegative");
    }
}

std::size_t PosteriorSamples::total_draws() const {
    std::size_t total = 0;
    for (const auto& c : chains) total += c.size();
    return total;
}

std::vector<const Draw*> PosteriorSamples::flat() const {
    std::vector<const Draw*> out;
    out.reserve(total_draws());
    for (const auto& c : chains) {
        for (const auto& d : c) out.push_back(&d);
    }
    return out;
}

std::vector<std::string> PosteriorSamples::parameter_names() const {
    ModelParams shape;
    shape.gamma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_hops));
    shape.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_covariates));
    auto names = shape.coefficient_names();
    names.push_back("sigma_eps");
    return names;
}

std::vector<std::vector<double>> PosteriorSamples::trace(std::size_t param) const {
    const std::size_t n_coef = 2 + n_hops + n_covariates;
    std::vector<std::vector<double>> out;
    for (const auto& c : chains) {
        std::vector<double> t;
        t.reserve(c.size());
        for (const auto& d : c) {
            t.push_back(param < n_coef ? d.params.pack()[static_cast<Eigen::Index>(param)] : d.params.sigma_eps);
        }
        out.push_back(std::move(t));
    }
    return out;
}

ChainState draw_initial_state(const FitData& data, const PriorSpec& priors, Rng& rng,
                              const ModelConfig& config) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto h = static_cast<Eigen::Index>(data.n_hops());
    const auto m = static_cast<Eigen::Index>(data.n_covariates());
    const auto n = static_cast<Eigen::Index>(data.n_vertices());
    std::optional<ChainState> fallback;
    for (int attempt = 0; attempt < 100; ++attempt) {
        ChainState st;
        st.params.tau = std::abs(priors.tau_sd * normal(rng));
        st.params.gamma.resize(h);
        for (Eigen::Index k = 0; k < h; ++k) st.params.gamma[k] = unif(rng);
        st.params.beta.resize(m);
        for (Eigen::Index j = 0; j < m; ++j) st.params.beta[j] = priors.beta_sd * normal(rng);
        st.params.mu = priors.mu_sd * normal(rng);
        std::gamma_distribution<double> gamma(priors.sigma2_shape, 1.0);
        st.params.sigma_eps = std::sqrt(priors.sigma2_scale / gamma(rng));
        st.eps.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) st.eps[i] = st.params.sigma_eps * normal(rng);
        if (!std::isfinite(log_posterior(st.params, st.eps, data, priors, config))) continue;
        // A saturated predictor has a flat likelihood, which a random walk
        // cannot climb out of; prefer draws inside the clamp.
        const Eigen::VectorXd eta = raw_predictor(st.params.pack(), data, st.eps);
        if (eta.size() == 0 || eta.cwiseAbs().maxCoeff() < config.eta_clamp) return st;
        if (!fallback) fallback = st;
    }
    if (fallback) return *fallback;
    throw InputError("could not find an initial state with finite posterior after 100 prior draws");
}

PosteriorSamples fit(const FitData& data, const PriorSpec& priors, const McmcConfig& config,
                     const ModelConfig& model_config) {
    config.validate();
    priors.validate();
    data.validate();

    PosteriorSamples out;
    out.config = config;
    out.n_hops = data.n_hops();
    out.n_covariates = data.n_covariates();
    out.chains.resize(config.n_chains);

    const auto n_coef = static_cast<Eigen::Index>(2 + data.n_hops() + data.n_covariates());
    const auto n = static_cast<Eigen::Index>(data.n_vertices());
    std::vector<Eigen::VectorXd> coef_rates(config.n_chains);
    std::vector<double> eps_rates(config.n_chains, 0.0);

    parallel_for(config.n_chains, config.threads, [&](std::size_t c) {
        auto seq = chain_seed(config.seed, c);
        Rng rng(seq);
        ChainState state = draw_initial_state(data, priors, rng, model_config);
        ProposalScales scales{Eigen::VectorXd::Constant(n_coef, config.initial_coef_scale),
                              Eigen::VectorXd::Constant(n, config.initial_eps_scale)};

        SweepAccepts acc;
        SweepAccepts window{Eigen::VectorXd::Zero(n_coef), Eigen::VectorXd::Zero(n)};
        SweepAccepts kept{Eigen::VectorXd::Zero(n_coef), Eigen::VectorXd::Zero(n)};
        auto& draws = out.chains[c];
        draws.reserve(config.draws_per_chain());

        // Joint-move shape: empirical covariance of the second half of the
        // burn-in draws so far, scaled by 2.38^2 / P and an adapted factor.
        std::vector<Eigen::VectorXd> history;
        Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(n_coef, n_coef);
        double block_factor = 1.0;
        double block_window = 0.0;
        bool block_ready = false;
        double scale_sd = 0.1;
        double scale_window = 0.0;
        std::vector<double> shift_sd(data.n_covariates(), config.initial_coef_scale);
        std::vector<double> shift_window(data.n_covariates(), 0.0);

        for (std::size_t t = 0; t < config.n_iters; ++t) {
            state = gibbs_sweep(state, data, priors, scales, rng, &acc, model_config);
            bool block_hit = false;
            if (config.joint_moves) {
                recenter_intercept(state, priors, rng);
                if (block_ready) block_hit = block_move(state, data, priors, block_factor * chol, rng, model_config);
                if (scale_move(state, data, priors, scale_sd, rng, model_config)) scale_window += 1.0;
                for (std::size_t j = 0; j < shift_sd.size(); ++j) {
                    if (centered_shift(state, data, priors, j, shift_sd[j], rng, model_config)) shift_window[j] += 1.0;
                }
            }
            if (t < config.burn_in) {
                window.coef += acc.coef;
                window.eps += acc.eps;
                block_window += block_hit ? 1.0 : 0.0;
                if (config.joint_moves) history.push_back(state.params.pack());
                if ((t + 1) % config.adapt_every == 0) {
                    const double len = static_cast<double>(config.adapt_every);
                    auto adapt = [&](Eigen::VectorXd& sc, const Eigen::VectorXd& hits) {
                        for (Eigen::Index k = 0; k < sc.size(); ++k) {
                            sc[k] *= hits[k] / len > config.target_accept ? 1.1 : 0.9;
                        }
                    };
                    adapt(scales.coef, window.coef);
                    adapt(scales.eps, window.eps);
                    window.coef.setZero();
                    window.eps.setZero();
                    if (block_ready) block_factor *= block_window / len > config.target_accept ? 1.1 : 0.9;
                    block_window = 0.0;
                    scale_sd *= scale_window / len > config.target_accept ? 1.1 : 0.9;
                    scale_window = 0.0;
                    for (std::size_t j = 0; j < shift_sd.size(); ++j) {
                        shift_sd[j] *= shift_window[j] / len > config.target_accept ? 1.1 : 0.9;
                        shift_window[j] = 0.0;
                    }
                    if (config.joint_moves && history.size() >= 4 * config.adapt_every) {
                        chol = proposal_shape(history);
                        block_ready = true;
                    }
                }
                continue;
            }
            kept.coef += acc.coef;
            kept.eps += acc.eps;
            if ((t - config.burn_in + 1) % config.thin == 0) {
                Draw d{state.params, {}};
                if (config.keep_eps) d.eps = state.eps;
                draws.push_back(std::move(d));
            }
        }
        const double post = static_cast<double>(config.n_iters - config.burn_in);
        coef_rates[c] = kept.coef / post;
        eps_rates[c] = n > 0 ? kept.eps.mean() / post : 1.0;
    });

    const auto names = out.parameter_names();
    for (Eigen::Index k = 0; k < n_coef; ++k) {
        double sum = 0.0;
        for (const auto& r : coef_rates) sum += r[k];
        out.acceptance_rates[names[static_cast<std::size_t>(k)]] = sum / static_cast<double>(config.n_chains);
    }
    double eps_sum = 0.0;
    for (double r : eps_rates) eps_sum += r;
    out.acceptance_rates["eps"] = eps_sum / static_cast<double>(config.n_chains);
    out.acceptance_rates["sigma_eps"] = 1.0;
    return out;
}

double DiagnosticsSummary::max_rhat() const {
    double worst = 1.0;
    for (const auto& p : parameters) {
        if (p.rhat) worst = std::max(worst, *p.rhat);
    }
    return worst;
}

DiagnosticsSummary diagnostics(const PosteriorSamples& samples, double rhat_threshold) {
    DiagnosticsSummary out;
    out.rhat_threshold = rhat_threshold;
    out.acceptance_rates = samples.acceptance_rates;
    if (samples.chains.size() < 2) out.notices.push_back("split-Rhat omitted: fewer than two chains");

    const auto names = samples.parameter_names();
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto traces = samples.trace(k);
        std::vector<double> all;
        for (const auto& t : traces) all.insert(all.end(), t.begin(), t.end());
        ParameterSummary ps;
        ps.name = names[k];
        ps.mean = stats::mean(all);
        ps.sd = stats::sd(all);
        ps.lo = stats::quantile(all, 0.05);
        ps.hi = stats::quantile(all, 0.95);
        if (auto r = stats::split_rhat(traces)) {
            ps.rhat = r->value;
            ps.zero_variance = r->zero_variance;
            ps.flagged = r->value > rhat_threshold;
        } else {
            ps.zero_variance = ps.sd == 0.0;
        }
        out.parameters.push_back(std::move(ps));
    }
    return out;
}

}  // namespace narrinf

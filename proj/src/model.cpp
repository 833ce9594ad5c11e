#include "narrinf/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "narrinf/error.hpp"

namespace narrinf {

bool ModelParams::in_support() const {
    if (!std::isfinite(tau) || !std::isfinite(mu) || !std::isfinite(sigma_eps)) return false;
    if (tau < 0.0 || sigma_eps < 0.0) return false;
    for (Eigen::Index k = 0; k < gamma.size(); ++k) {
        if (!(gamma[k] >= 0.0 && gamma[k] <= 1.0)) return false;
    }
    return beta.allFinite();
}

void ModelParams::validate() const {
    if (!std::isfinite(tau) || tau < 0.0) throw InputError("tau must be finite and >= 0");
    for (Eigen::Index k = 0; k < gamma.size(); ++k) {
        if (!(gamma[k] >= 0.0 && gamma[k] <= 1.0)) {
            throw InputError("gamma_" + std::to_string(k + 1) + " must lie in [0,1]");
        }
    }
    if (!beta.allFinite()) throw InputError("beta must be finite");
    if (!std::isfinite(mu)) throw InputError("mu must be finite");
    if (!std::isfinite(sigma_eps) || sigma_eps < 0.0) throw InputError("sigma_eps must be finite and >= 0");
}

Eigen::VectorXd ModelParams::pack() const {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(n_coefficients()));
    theta[0] = tau;
    theta.segment(1, gamma.size()) = gamma;
    theta.segment(1 + gamma.size(), beta.size()) = beta;
    theta[theta.size() - 1] = mu;
    return theta;
}

ModelParams ModelParams::unpack(const Eigen::VectorXd& theta, std::size_t n_hops, std::size_t n_covariates,
                                double sigma) {
    const auto h = static_cast<Eigen::Index>(n_hops);
    const auto m = static_cast<Eigen::Index>(n_covariates);
    if (theta.size() != 2 + h + m) throw InputError("coefficient vector has the wrong length");
    ModelParams p;
    p.tau = theta[0];
    p.gamma = theta.segment(1, h);
    p.beta = theta.segment(1 + h, m);
    p.mu = theta[1 + h + m];
    p.sigma_eps = sigma;
    return p;
}

std::vector<std::string> ModelParams::coefficient_names() const {
    std::vector<std::string> names{"tau"};
    for (std::size_t k = 0; k < n_hops(); ++k) names.push_back("gamma_" + std::to_string(k + 1));
    for (std::size_t j = 0; j < n_covariates(); ++j) names.push_back("beta_" + std::to_string(j + 1));
    names.push_back("mu");
    return names;
}

namespace {

void check_dimensions(const ModelParams& p, const SourceVector& z, const ExposureTensor& s,
                      const CovariateMatrix& x) {
    const std::size_t n = z.size();
    if (s.n_vertices() != n || x.n_rows() != n) {
        throw InputError("dimension mismatch: " + std::to_string(n) + " sources, " +
                         std::to_string(s.n_vertices()) + " exposure columns, " +
                         std::to_string(x.n_rows()) + " covariate rows");
    }
    if (s.n_hops() != p.n_hops()) {
        throw InputError("exposure has " + std::to_string(s.n_hops()) + " hops, parameters have " +
                         std::to_string(p.n_hops()));
    }
    if (x.n_cols() != p.n_covariates()) {
        throw InputError("covariates have " + std::to_string(x.n_cols()) + " columns, parameters have " +
                         std::to_string(p.n_covariates()));
    }
}

}  // namespace

Eigen::VectorXd hop_coefficients(const ModelParams& p) {
    Eigen::VectorXd c(p.gamma.size());
    double running = p.tau;
    for (Eigen::Index n = 0; n < p.gamma.size(); ++n) {
        running *= p.gamma[n];
        c[n] = running;
    }
    return c;
}

Eigen::VectorXd linear_predictor(const ModelParams& p, const SourceVector& z, const ExposureTensor& s,
                                 const CovariateMatrix& x, const LatentEffects& eps,
                                 const ModelConfig& config, std::size_t* clamped) {
    check_dimensions(p, z, s, x);
    const auto n = static_cast<Eigen::Index>(z.size());
    if (eps.size() != 0 && eps.size() != n) throw InputError("latent effects have the wrong length");

    Eigen::VectorXd eta = x.x * p.beta;
    eta.array() += p.mu;
    eta += p.tau * z.as_vector();
    eta += s.s.transpose() * hop_coefficients(p);
    if (eps.size() != 0) eta += eps;

    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (eta[i] > config.eta_clamp) {
            eta[i] = config.eta_clamp;
            ++hits;
        } else if (eta[i] < -config.eta_clamp) {
            eta[i] = -config.eta_clamp;
            ++hits;
        }
    }
    if (clamped) *clamped += hits;
    return eta;
}

Eigen::VectorXd expected_outcomes(const Eigen::VectorXd& eta) { return eta.array().exp(); }

double poisson_log_likelihood(const Eigen::VectorXd& eta, const OutcomeVector& y) {
    if (eta.size() != y.y.size()) throw InputError("outcome vector has the wrong length");
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += y.y[i] * eta[i] - std::exp(eta[i]) - std::lgamma(y.y[i] + 1.0);
    }
    return ll;
}

double log_likelihood(const ModelParams& p, const LatentEffects& eps, const SourceVector& z,
                      const ExposureTensor& s, const CovariateMatrix& x, const OutcomeVector& y,
                      const ModelConfig& config) {
    return poisson_log_likelihood(linear_predictor(p, z, s, x, eps, config), y);
}

Eigen::MatrixXd predictor_jacobian(const ModelParams& p, const SourceVector& z, const ExposureTensor& s,
                                   const CovariateMatrix& x) {
    check_dimensions(p, z, s, x);
    const auto n = static_cast<Eigen::Index>(z.size());
    const auto h = p.gamma.size();
    const auto m = p.beta.size();
    Eigen::MatrixXd jac(n, 2 + h + m);

    // d/dtau: z + sum_n (prod_{k<=n} gamma_k) s^(n)
    Eigen::VectorXd decay(h);
    double running = 1.0;
    for (Eigen::Index k = 0; k < h; ++k) {
        running *= p.gamma[k];
        decay[k] = running;
    }
    jac.col(0) = z.as_vector() + s.s.transpose() * decay;

    // d/dgamma_k: sum_{n>=k} tau prod_{j<=n, j!=k} gamma_j s^(n)
    for (Eigen::Index k = 0; k < h; ++k) {
        Eigen::VectorXd weights = Eigen::VectorXd::Zero(h);
        for (Eigen::Index nn = k; nn < h; ++nn) {
            double prod = p.tau;
            for (Eigen::Index j = 0; j <= nn; ++j) {
                if (j != k) prod *= p.gamma[j];
            }
            weights[nn] = prod;
        }
        jac.col(1 + k) = s.s.transpose() * weights;
    }
    jac.middleCols(1 + h, m) = x.x;
    jac.col(1 + h + m).setOnes();
    return jac;
}

Eigen::VectorXd log_likelihood_gradient(const ModelParams& p, const LatentEffects& eps,
                                        const SourceVector& z, const ExposureTensor& s,
                                        const CovariateMatrix& x, const OutcomeVector& y,
                                        const ModelConfig& config) {
    const Eigen::VectorXd eta = linear_predictor(p, z, s, x, eps, config);
    if (y.y.size() != eta.size()) throw InputError("outcome vector has the wrong length");
    Eigen::VectorXd resid = y.y - expected_outcomes(eta);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (std::abs(eta[i]) >= config.eta_clamp) resid[i] = 0.0;
    }
    return predictor_jacobian(p, z, s, x).transpose() * resid;
}

SimulatedOutcomes simulate_outcomes(const ModelParams& p, const InfluenceGraph& g, const SourceVector& z,
                                    const CovariateMatrix& x, const ModelConfig& config,
                                    std::uint64_t seed) {
    p.validate();
    const ExposureTensor s = exposure_profile(g, z, p.n_hops());
    const auto n = static_cast<Eigen::Index>(g.n_vertices());

    std::mt19937_64 rng(seed);
    SimulatedOutcomes out;
    out.eps = LatentEffects::Zero(n);
    if (p.sigma_eps > 0.0) {
        std::normal_distribution<double> normal(0.0, p.sigma_eps);
        for (Eigen::Index i = 0; i < n; ++i) out.eps[i] = normal(rng);
    }
    const Eigen::VectorXd lambda = expected_outcomes(linear_predictor(p, z, s, x, out.eps, config));
    out.y.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::poisson_distribution<long long> poisson(lambda[i]);
        out.y.y[i] = static_cast<double>(poisson(rng));
    }
    return out;
}

InfluenceGraph simulate_graph(std::size_t n, double mean_out_degree, int weight_max, std::uint64_t seed) {
    if (n == 0) throw InputError("graph needs at least one vertex");
    if (weight_max < 1) throw InputError("weight_max must be >= 1");
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back("u" + std::to_string(i));
    const auto nn = static_cast<Eigen::Index>(n);
    SparseMatrix a(nn, nn);
    if (n == 1) return InfluenceGraph(std::move(ids), std::move(a));

    const double prob = mean_out_degree / static_cast<double>(n - 1);
    if (!(prob >= 0.0 && prob <= 1.0)) {
        throw InputError("edge probability " + std::to_string(prob) + " outside [0,1]");
    }
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution edge(prob);
    std::uniform_int_distribution<int> weight(1, weight_max);
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index i = 0; i < nn; ++i) {
        for (Eigen::Index j = 0; j < nn; ++j) {
            if (i == j) continue;
            if (edge(rng)) triplets.emplace_back(i, j, static_cast<double>(weight(rng)));
        }
    }
    a.setFromTriplets(triplets.begin(), triplets.end());
    return InfluenceGraph(std::move(ids), std::move(a));
}

SyntheticDesign simulate_design(std::size_t n, double mean_out_degree, int weight_max,
                                double source_fraction, std::uint64_t seed) {
    if (!(source_fraction >= 0.0 && source_fraction <= 1.0)) {
        throw InputError("source fraction must lie in [0,1]");
    }
    SyntheticDesign d;
    d.graph = simulate_graph(n, mean_out_degree, weight_max, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::bernoulli_distribution pick(source_fraction);
    d.z = SourceVector(n);
    for (std::size_t i = 0; i < n; ++i) d.z.set(i, pick(rng));
    if (d.z.count() == 0) {
        std::uniform_int_distribution<std::size_t> any(0, n - 1);
        d.z.set(any(rng), true);
    }
    d.x.x = degrees(d.graph).out_degree.array().log1p().matrix();
    d.x.column_names = {"popularity"};
    return d;
}

MleResult fit_mle(const SourceVector& z, const ExposureTensor& s, const CovariateMatrix& x,
                  const OutcomeVector& y, const Eigen::VectorXd& start, const ModelConfig& config,
                  std::size_t max_iter, double tol) {
    const std::size_t h = s.n_hops();
    const std::size_t m = x.n_cols();
    const LatentEffects none;
    auto at = [&](const Eigen::VectorXd& theta) { return ModelParams::unpack(theta, h, m); };
    auto loglik = [&](const Eigen::VectorXd& theta) {
        return poisson_log_likelihood(linear_predictor(at(theta), z, s, x, none, config), y);
    };

    MleResult out;
    out.theta = start;
    out.log_likelihood = loglik(start);
    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        out.iterations = iter;
        const ModelParams p = at(out.theta);
        const Eigen::VectorXd lambda = expected_outcomes(linear_predictor(p, z, s, x, none, config));
        const Eigen::MatrixXd jac = predictor_jacobian(p, z, s, x);
        const Eigen::VectorXd grad = jac.transpose() * (y.y - lambda);
        const Eigen::MatrixXd info = jac.transpose() * lambda.asDiagonal() * jac;
        const Eigen::VectorXd step = info.completeOrthogonalDecomposition().solve(grad);

        double scale = 1.0;
        Eigen::VectorXd candidate = out.theta + step;
        double ll = loglik(candidate);
        while (!(ll >= out.log_likelihood) && scale > 1e-10) {
            scale *= 0.5;
            candidate = out.theta + scale * step;
            ll = loglik(candidate);
        }
        if (!(ll >= out.log_likelihood)) {
            out.converged = grad.norm() < 1e-6 * (1.0 + std::abs(out.log_likelihood));
            return out;
        }
        const double gain = ll - out.log_likelihood;
        out.theta = candidate;
        out.log_likelihood = ll;
        if (gain < tol * (1.0 + std::abs(ll)) && (scale * step).norm() < 1e-6) {
            out.converged = true;
            return out;
        }
    }
    return out;
}

}  // namespace narrinf

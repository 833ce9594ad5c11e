#include <cmath>
#include <random>

#include <doctest.h>

#include "narrinf/error.hpp"
#include "narrinf/model.hpp"
#include "oracles.hpp"

using namespace narrinf;

namespace {

ModelParams params(double tau, std::vector<double> gamma, std::vector<double> beta, double mu, double sigma = 0) {
    ModelParams p;
    p.tau = tau;
    p.gamma = Eigen::Map<Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
    p.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    p.mu = mu;
    p.sigma_eps = sigma;
    return p;
}

CovariateMatrix covariates(const Eigen::MatrixXd& x) {
    CovariateMatrix c;
    c.x = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) c.column_names.push_back("x" + std::to_string(j));
    return c;
}

struct Instance {
    InfluenceGraph g;
    SourceVector z;
    ExposureTensor s;
    CovariateMatrix x;
    OutcomeVector y;
    ModelParams p;
    LatentEffects eps;
};

Instance random_instance(std::mt19937_64& rng, std::size_t max_n = 30) {
    Instance in;
    const std::size_t n = 2 + rng() % (max_n - 1);
    const std::size_t hops = 1 + rng() % 3;
    const std::size_t m = 1 + rng() % 3;
    in.g = build_influence_graph(oracle::ids(n), oracle::random_edges(n, 0.2, rng)).graph;
    in.z = SourceVector(n);
    for (std::size_t i = 0; i < n; ++i) in.z.set(i, rng() % 4 == 0);
    in.s = exposure_profile(in.g, in.z, hops);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd x(n, m);
    for (auto& v : x.reshaped()) v = normal(rng);
    in.x = covariates(x);
    in.p.tau = unif(rng) * 1.5;
    in.p.gamma.resize(static_cast<Eigen::Index>(hops));
    for (auto& v : in.p.gamma) v = unif(rng);
    in.p.beta.resize(static_cast<Eigen::Index>(m));
    for (auto& v : in.p.beta) v = 0.5 * normal(rng);
    in.p.mu = normal(rng) * 0.5;
    in.p.sigma_eps = 0.2;
    in.eps.resize(static_cast<Eigen::Index>(n));
    for (auto& v : in.eps) v = 0.2 * normal(rng);
    std::poisson_distribution<int> pois(2.0);
    in.y.y.resize(static_cast<Eigen::Index>(n));
    for (auto& v : in.y.y) v = pois(rng);
    return in;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("linear predictor hand examples") {
    SourceVector z(1);
    ExposureTensor s{Eigen::MatrixXd::Constant(1, 1, std::log(3.0))};
    auto x = covariates(Eigen::MatrixXd::Constant(1, 1, 2.0));
    auto eta = linear_predictor(params(1.0, {0.5}, {0.2}, -1.0), z, s, x, {});
    CHECK(eta[0] == doctest::Approx(0.5 * std::log(3.0) + 0.4 - 1.0).epsilon(1e-14));
    CHECK(eta[0] == doctest::Approx(-0.0507).epsilon(1e-3));
    CHECK(expected_outcomes(eta)[0] == doctest::Approx(0.9506).epsilon(1e-4));

    auto zero = linear_predictor(params(0, {0}, {0}, 0), z, s, x, Eigen::VectorXd::Zero(1));
    CHECK(zero[0] == 0.0);
    CHECK(expected_outcomes(zero)[0] == 1.0);

    SourceVector src(std::vector<unsigned char>{1});
    ExposureTensor s0{Eigen::MatrixXd::Zero(1, 1)};
    auto x0 = covariates(Eigen::MatrixXd::Zero(1, 1));
    auto one = linear_predictor(params(1, {0}, {0}, 0), src, s0, x0, {});
    CHECK(one[0] == 1.0);
    CHECK(expected_outcomes(one)[0] == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("clamp and dimension errors") {
    SourceVector z(2);
    ExposureTensor s{Eigen::MatrixXd::Zero(1, 2)};
    auto x = covariates(Eigen::MatrixXd::Zero(2, 1));
    std::size_t clamped = 0;
    auto eta = linear_predictor(params(0, {0}, {0}, 100), z, s, x, {}, {}, &clamped);
    CHECK(eta[0] == 30.0);
    CHECK(clamped == 2);
    CHECK_THROWS_AS(linear_predictor(params(0, {0}, {0}, 0), SourceVector(3), s, x, {}), InputError);
    CHECK_THROWS_AS(linear_predictor(params(0, {0, 0}, {0}, 0), z, s, x, {}), InputError);
    CHECK_THROWS_AS(linear_predictor(params(0, {0}, {0, 1}, 0), z, s, x, {}), InputError);
}

TEST_CASE("log likelihood examples and scalar oracle") {
    SourceVector z(1);
    ExposureTensor s{Eigen::MatrixXd::Zero(1, 1)};
    auto x = covariates(Eigen::MatrixXd::Zero(1, 1));
    OutcomeVector y0{Eigen::VectorXd::Zero(1)};
    OutcomeVector y1{Eigen::VectorXd::Ones(1)};
    CHECK(log_likelihood(params(0, {0}, {0}, 0), {}, z, s, x, y0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(log_likelihood(params(0, {0}, {0}, 0), {}, z, s, x, y1) == doctest::Approx(-1.0).epsilon(1e-15));

    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        auto in = random_instance(rng, 12);
        const auto d = oracle::design_of(in.z, in.s, in.x, &in.y);
        const Eigen::VectorXd theta = in.p.pack();
        const double want = oracle::log_likelihood({theta.data(), theta.data() + theta.size()}, d);
        const double got = log_likelihood(in.p, {}, in.z, in.s, in.x, in.y);
        CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
        CHECK(std::isfinite(got));
    }
}

TEST_CASE("gradient matches central differences") {
    std::mt19937_64 rng(31);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        auto in = random_instance(rng);
        const Eigen::VectorXd theta = in.p.pack();
        const std::size_t h = in.p.n_hops();
        const std::size_t m = in.p.n_covariates();
        auto f = [&](const std::vector<double>& t) {
            Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
            return log_likelihood(ModelParams::unpack(v, h, m, in.p.sigma_eps), in.eps, in.z, in.s, in.x, in.y);
        };
        const auto fd = oracle::gradient(f, {theta.data(), theta.data() + theta.size()}, 1e-5);
        const Eigen::VectorXd num = Eigen::Map<const Eigen::VectorXd>(fd.data(), theta.size());
        const Eigen::VectorXd an = log_likelihood_gradient(in.p, in.eps, in.z, in.s, in.x, in.y);
        worst = std::max(worst, (an - num).norm() / std::max(num.norm(), 1e-12));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("tau derivative reduces to phi at one hop") {
    SourceVector z(std::vector<unsigned char>{1, 0});
    ExposureTensor s{(Eigen::MatrixXd(1, 2) << 0.0, 0.7).finished()};
    auto x = covariates(Eigen::MatrixXd::Zero(2, 1));
    auto j = predictor_jacobian(params(0.8, {0.4}, {0}, 0), z, s, x);
    CHECK(j(0, 0) == doctest::Approx(1.0));
    CHECK(j(1, 0) == doctest::Approx(0.4 * 0.7));
    CHECK(j(1, 1) == doctest::Approx(0.8 * 0.7));
}

TEST_CASE("pack and unpack") {
    auto p = params(1.0, {0.5, 0.25}, {0.3, -0.1}, -0.5, 0.1);
    auto back = ModelParams::unpack(p.pack(), 2, 2, 0.1);
    CHECK(back.pack() == p.pack());
    CHECK(p.coefficient_names() == std::vector<std::string>{"tau", "gamma_1", "gamma_2", "beta_1", "beta_2", "mu"});
    CHECK(p.in_support());
    CHECK(!params(-1, {0.5}, {0}, 0).in_support());
    CHECK(!params(1, {1.5}, {0}, 0).in_support());
    CHECK_THROWS_AS(params(1, {0.5}, {0}, 0, -1).validate(), InputError);
}

TEST_CASE("simulate outcomes: law of large numbers and determinism") {
    const std::size_t n = 100000;
    auto g = build_influence_graph(oracle::ids(n), {}).graph;
    SourceVector z(n);
    auto x = covariates(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 1));
    auto p = params(0, {0}, {0}, 0);
    auto sim = simulate_outcomes(p, g, z, x, {}, 42);
    // lambda = 1, so the standard error of the mean is 1/sqrt(n).
    CHECK(std::abs(sim.y.y.mean() - 1.0) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(sim.y.y.mean() - 1.0) < 0.01);
    auto again = simulate_outcomes(p, g, z, x, {}, 42);
    CHECK(again.y.y == sim.y.y);
    CHECK(again.eps == sim.eps);
}

TEST_CASE("simulate outcomes: sources stand out on an edgeless graph") {
    const std::size_t n = 50;
    auto g = build_influence_graph(oracle::ids(n), {}).graph;
    SourceVector z(n);
    for (std::size_t i = 0; i < n; i += 10) z.set(i, true);
    auto x = covariates(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 1));
    auto sim = simulate_outcomes(params(8, {0.5}, {0}, -3), g, z, x, {}, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double yi = sim.y.y[static_cast<Eigen::Index>(i)];
        if (z[i]) {
            CHECK(yi > 20);
        } else {
            CHECK(yi < 5);
        }
    }
}

TEST_CASE("simulate graph") {
    auto one = simulate_graph(1, 5, 3, 1);
    CHECK(one.n_vertices() == 1);
    CHECK(one.edge_count() == 0);
    CHECK_THROWS_AS(simulate_graph(3, 5, 3, 1), InputError);

    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto g = simulate_graph(200, 5, 3, seed);
        total += static_cast<double>(g.edge_count()) / 200.0;
        const Eigen::MatrixXd a = oracle::dense(g);
        CHECK(a.maxCoeff() <= 3.0);
        CHECK(a.diagonal().isZero());
    }
    CHECK(std::abs(total / 20.0 - 5.0) < 0.5);
    CHECK(oracle::max_abs(oracle::dense(simulate_graph(50, 4, 3, 9)) - oracle::dense(simulate_graph(50, 4, 3, 9))) ==
          0.0);
}

TEST_CASE("maximum likelihood recovers a large-sample truth") {
    auto design = simulate_design(3000, 5, 3, 0.1, 4);
    auto p = params(1.0, {0.5}, {0.3}, -0.5);
    auto sim = simulate_outcomes(p, design.graph, design.z, design.x, {}, 5);
    auto s = exposure_profile(design.graph, design.z, 1);
    auto fit = fit_mle(design.z, s, design.x, sim.y, Eigen::Vector4d(0.5, 0.5, 0, 0));
    CHECK(fit.converged);
    CHECK(fit.theta[0] == doctest::Approx(1.0).epsilon(0.15));
    CHECK(fit.theta[2] == doctest::Approx(0.3).epsilon(0.15));
    CHECK(fit.theta[3] == doctest::Approx(-0.5).epsilon(0.15));
}

}  // TEST_SUITE

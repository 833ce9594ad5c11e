// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "narrinf/cli.hpp"
#include "narrinf/error.hpp"
#include "narrinf/estimand.hpp"
#include "narrinf/fisher.hpp"
#include "narrinf/inference.hpp"
#include "narrinf/io.hpp"
#include "narrinf/stats.hpp"
#include "oracles.hpp"

using namespace narrinf;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("[%s] %2d %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

ModelParams truth(double tau = 1.0, double sigma = 0.1) {
    ModelParams p;
    p.tau = tau;
    p.gamma = Eigen::VectorXd::Constant(1, 0.5);
    p.beta = Eigen::VectorXd::Constant(1, 0.3);
    p.mu = -0.5;
    p.sigma_eps = sigma;
    return p;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "narrinf");
    std::ostringstream out, err;
    return cli::run(args, out, err);
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("narrinf_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Outcome exposure_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(1);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 1 + rng() % 20;
        const int hops = 1 + static_cast<int>(rng() % 3);
        auto g = build_influence_graph(oracle::ids(n), oracle::random_edges(n, 0.25, rng)).graph;
        SourceVector z(n);
        std::vector<double> zd(n);
        for (std::size_t i = 0; i < n; ++i) {
            z.set(i, rng() % 3 == 0);
            zd[i] = z[i] ? 1.0 : 0.0;
        }
        const auto s = exposure_profile(g, z, static_cast<std::size_t>(hops));
        worst = std::max(worst, oracle::max_abs(s.s - oracle::exposure(oracle::dense(g), zd, hops)));
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    return {worst <= 1e-12 && secs < 1.0, "max |diff| " + fmt("%.2e", worst) + " over 100 graphs"};
}

Outcome fisher_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_outer = 0.0;
    double worst_hessian = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + rng() % 40;
        auto g = build_influence_graph(oracle::ids(n), oracle::random_edges(n, 0.15, rng)).graph;
        ModelParams p = truth(1.5 * u(rng), 0.0);
        p.gamma[0] = u(rng);
        p.beta[0] = u(rng) - 0.5;
        p.mu = u(rng) - 1.0;
        SourceVector z(n);
        oracle::Design d;
        std::vector<double> sv, xv;
        for (std::size_t i = 0; i < n; ++i) z.set(i, u(rng) < 0.3);
        const auto s = exposure_profile(g, z, 1);
        Eigen::VectorXd x(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            x[static_cast<Eigen::Index>(i)] = 2.0 * u(rng);
            d.z.push_back(z[i] ? 1.0 : 0.0);
            d.x.push_back({x[static_cast<Eigen::Index>(i)]});
            sv.push_back(s.s(0, static_cast<Eigen::Index>(i)));
            xv.push_back(x[static_cast<Eigen::Index>(i)]);
        }
        d.s.push_back(sv);
        const auto f = fisher_information(p, z, s.s.row(0).transpose(), x);

        const Eigen::Matrix4d outer = oracle::fisher_outer(p.tau, p.gamma[0], p.beta[0], p.mu, d.z, sv, xv);
        worst_outer = std::max(worst_outer, oracle::max_abs(f.matrix - outer));

        const Eigen::VectorXd theta = p.pack();
        const std::vector<double> t0(theta.data(), theta.data() + theta.size());
        std::vector<double> lambda0;
        for (std::size_t i = 0; i < n; ++i) lambda0.push_back(std::exp(oracle::eta(t0, d, i)));
        const auto h = oracle::hessian(
            [&](const std::vector<double>& t) { return oracle::expected_log_likelihood(t, d, lambda0); }, t0, 1e-3);
        worst_hessian = std::max(worst_hessian, oracle::max_abs(f.matrix + h) / oracle::max_abs(f.matrix));
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    return {worst_outer <= 1e-12 && worst_hessian < 1e-6 && secs < 5.0,
            "outer-product max |diff| " + fmt("%.2e", worst_outer) + ", Hessian max rel err " +
                fmt("%.2e", worst_hessian) + " over 50 points"};
}

Outcome gradient_check() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + rng() % 29;
        const std::size_t hops = 1 + rng() % 3;
        const std::size_t m = 1 + rng() % 3;
        auto g = build_influence_graph(oracle::ids(n), oracle::random_edges(n, 0.2, rng)).graph;
        SourceVector z(n);
        for (std::size_t i = 0; i < n; ++i) z.set(i, u(rng) < 0.25);
        const auto s = exposure_profile(g, z, hops);
        CovariateMatrix x;
        x.x = Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
        for (auto& v : x.x.reshaped()) v = normal(rng);
        for (std::size_t j = 0; j < m; ++j) x.column_names.push_back("x" + std::to_string(j));
        ModelParams p;
        p.tau = 1.5 * u(rng);
        p.gamma = Eigen::VectorXd(static_cast<Eigen::Index>(hops));
        for (auto& v : p.gamma) v = u(rng);
        p.beta = Eigen::VectorXd(static_cast<Eigen::Index>(m));
        for (auto& v : p.beta) v = 0.5 * normal(rng);
        p.mu = 0.5 * normal(rng);
        p.sigma_eps = 0.2;
        LatentEffects eps(static_cast<Eigen::Index>(n));
        for (auto& v : eps) v = 0.2 * normal(rng);
        OutcomeVector y;
        y.y = Eigen::VectorXd(static_cast<Eigen::Index>(n));
        std::poisson_distribution<int> pois(2.0);
        for (auto& v : y.y) v = pois(rng);

        const Eigen::VectorXd theta = p.pack();
        auto f = [&](const std::vector<double>& t) {
            const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
            return log_likelihood(ModelParams::unpack(v, hops, m, p.sigma_eps), eps, z, s, x, y);
        };
        const auto fd = oracle::gradient(f, {theta.data(), theta.data() + theta.size()}, 1e-5);
        const Eigen::VectorXd num = Eigen::Map<const Eigen::VectorXd>(fd.data(), theta.size());
        const Eigen::VectorXd an = log_likelihood_gradient(p, eps, z, s, x, y);
        worst = std::max(worst, (an - num).norm() / std::max(num.norm(), 1e-12));
    }
    return {worst < 1e-5, "max relative error " + fmt("%.2e", worst) + " over 50 instances"};
}

Outcome calibration() {
    const auto p = truth();
    const std::vector<double> true_values{p.tau, p.gamma[0], p.beta[0], p.mu, p.sigma_eps};
    std::vector<int> covered(true_values.size(), 0);
    std::vector<std::string> names;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto design = simulate_design(200, 5, 3, 0.1, seed);
        auto sim = simulate_outcomes(p, design.graph, design.z, design.x, {}, seed + 1000);
        auto data = make_fit_data(design.graph, design.z, design.x, sim.y, 1);
        McmcConfig c;
        c.seed = seed;
        const auto diag = diagnostics(fit(data, {}, c));
        names.clear();
        for (std::size_t k = 0; k < diag.parameters.size(); ++k) {
            const auto& ps = diag.parameters[k];
            names.push_back(ps.name);
            if (ps.lo <= true_values[k] && true_values[k] <= ps.hi) ++covered[k];
        }
    }
    bool pass = true;
    std::string detail = "90% interval coverage out of 20:";
    for (std::size_t k = 0; k < names.size(); ++k) {
        detail += " " + names[k] + "=" + std::to_string(covered[k]);
        pass = pass && covered[k] >= 15;
    }
    return {pass, detail};
}

Outcome crlb_consistency() {
    const auto p = truth(1.0, 0.0);
    auto design = simulate_design(500, 5, 3, 0.1, 500);
    const auto s = exposure_profile(design.graph, design.z, 1);
    const auto bound = crlb(fisher_information(p, design.z, s, design.x));
    std::vector<double> tau_hat;
    std::size_t unconverged = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        auto sim = simulate_outcomes(p, design.graph, design.z, design.x, {}, 10000 + rep);
        auto mle = fit_mle(design.z, s, design.x, sim.y, p.pack());
        if (!mle.converged) ++unconverged;
        tau_hat.push_back(mle.theta[0]);
    }
    const double var = stats::sd(tau_hat) * stats::sd(tau_hat);
    const double ratio = var / bound.covariance_bound(0, 0);
    return {ratio >= 0.8 && ratio <= 5.0 && unconverged == 0,
            "var(tau_hat) " + fmt("%.4g", var) + ", CRLB " + fmt("%.4g", bound.covariance_bound(0, 0)) + ", ratio " +
                fmt("%.3f", ratio) + ", unconverged fits " + std::to_string(unconverged)};
}

Outcome estimand_closed_form() {
    auto g = build_influence_graph({"1", "2"}, {}).graph;
    CovariateMatrix x{Eigen::VectorXd::Zero(2), {"popularity"}};
    ModelParams p = truth(std::log(2.0), 0.0);
    p.beta[0] = 0.0;
    p.mu = 0.0;
    const auto ln2 = impact(0, std::vector<ModelParams>(50, p), g, x);
    ModelParams zero = truth(0.0, 0.1);
    bool all_zero = true;
    for (const auto& e : rank_impacts(std::vector<ModelParams>(50, zero), g, x)) {
        all_zero = all_zero && e.zeta_mean == 0.0 && e.zeta_lo == 0.0 && e.zeta_hi == 0.0;
    }
    return {ln2.zeta_mean == 0.5 && all_zero,
            "zeta_1 = " + fmt("%.17g", ln2.zeta_mean) + ", tau=0 impacts all exactly 0: " + (all_zero ? "yes" : "no")};
}

Outcome null_effect() {
    const auto p = truth(0.0, 0.1);
    auto design = simulate_design(200, 5, 3, 0.1, 77);
    auto sim = simulate_outcomes(p, design.graph, design.z, design.x, {}, 78);
    auto data = make_fit_data(design.graph, design.z, design.x, sim.y, 1);
    McmcConfig c;
    c.seed = 77;
    const auto draws = posterior_params(fit(data, {}, c));
    const auto impacts = rank_impacts(draws, design.graph, design.x);
    std::size_t contains = 0;
    double max_lo = 0.0;
    for (const auto& e : impacts) {
        if (e.zeta_lo <= 0.0 && 0.0 <= e.zeta_hi) ++contains;
        max_lo = std::max(max_lo, e.zeta_lo);
    }
    const double frac = static_cast<double>(contains) / static_cast<double>(impacts.size());
    return {frac >= 0.9, "intervals containing 0: " + fmt("%.3f", frac) + " of " + std::to_string(impacts.size()) +
                             " vertices (largest lower bound " + fmt("%.2e", max_lo) + ")"};
}

Outcome star_geometry() {
    std::vector<WeightedEdge> edges;
    for (int k = 1; k <= 10; ++k) edges.push_back({"hub", "leaf" + std::to_string(k), 1.0});
    auto star = build_influence_graph(edges).graph;
    CovariateMatrix x{degrees(star).out_degree.array().log1p().matrix(), {"popularity"}};
    auto f22 = [&](std::size_t source) {
        SourceVector z(star.n_vertices());
        z.set(source, true);
        return design_diagnostics(fisher_information(truth(1.0, 0.0), z, exposure_profile(star, z, 1), x)).f22;
    };
    const double hub = f22(0);
    double best_leaf = 0.0;
    for (std::size_t leaf = 1; leaf <= 10; ++leaf) best_leaf = std::max(best_leaf, f22(leaf));
    return {hub > best_leaf, "F22 hub " + fmt("%.6g", hub) + " vs leaf " + fmt("%.6g", best_leaf)};
}

Outcome determinism() {
    const auto dir = scratch("determinism");
    io::AtomicOutputs params(dir);
    params.add("params.json", R"({"tau":1.0,"gamma":[0.5],"beta":[0.3],"mu":-0.5,"sigma_eps":0.1})");
    params.commit();
    auto pipeline = [&](const std::string& tag) {
        const auto root = dir / tag;
        const std::string p = (dir / "params.json").string();
        int rc = cli({"simulate", "--n", "120", "--params", p, "--seed", "9", "--out", (root / "sim").string()});
        rc |= cli({"ingest", "--input", (root / "sim" / "records.jsonl").string(), "--narrative",
                   (root / "sim" / "narrative.json").string(), "--out", (root / "data").string()});
        rc |= cli({"fit", "--data", (root / "data").string(), "--out", (root / "fit").string(), "--seed", "7"});
        rc |= cli({"impact", "--data", (root / "data").string(), "--posterior", (root / "fit" / "posterior.csv").string(),
                   "--out", (root / "impact.csv").string()});
        return rc;
    };
    const int rc_a = pipeline("a");
    const int rc_b = pipeline("b");
    std::size_t compared = 0;
    std::size_t differing = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
        if (!e.is_regular_file() || e.path().filename().string().find("manifest") != std::string::npos) continue;
        const auto other = dir / "b" / fs::relative(e.path(), dir / "a");
        ++compared;
        if (!fs::exists(other) || io::read_file(e.path()) != io::read_file(other)) ++differing;
    }
    fs::remove_all(dir);
    return {rc_a == 0 && rc_b == 0 && differing == 0 && compared >= 12,
            "simulate->ingest->fit->impact twice: " + std::to_string(compared) + " files compared, " +
                std::to_string(differing) + " differ, exit codes " + std::to_string(rc_a) + "/" + std::to_string(rc_b)};
}

Outcome report_fidelity() {
    const auto dir = scratch("report");
    const std::string fx = NARRINF_FIXTURES;
    int rc = cli({"ingest", "--input", fx + "/synthetic/records.jsonl", "--narrative", fx + "/synthetic/narrative.json",
                  "--out", (dir / "data").string()});
    rc |= cli({"fit", "--data", (dir / "data").string(), "--out", (dir / "fit").string(), "--seed", "3"});
    rc |= cli({"impact", "--data", (dir / "data").string(), "--posterior", (dir / "fit" / "posterior.csv").string(),
               "--out", (dir / "impact.csv").string(), "--report", (dir / "report.csv").string()});
    if (rc != 0) return {false, "pipeline exit code " + std::to_string(rc)};
    const auto report = io::read_csv_file(dir / "report.csv");
    const auto impact = io::read_csv_file(dir / "impact.csv");
    const std::vector<std::string> want{"screen_name", "T", "TRT", "MRT", "F", "first_time", "PR", "impact"};
    bool sorted = true;
    const auto col = impact.column("zeta_mean");
    const auto rcol = report.column("impact");
    for (std::size_t k = 1; k < impact.rows.size(); ++k) {
        sorted = sorted && io::parse_double(impact.rows[k - 1][col], "z") >= io::parse_double(impact.rows[k][col], "z");
        sorted = sorted &&
                 io::parse_double(report.rows[k - 1][rcol], "i") >= io::parse_double(report.rows[k][rcol], "i");
    }
    fs::remove_all(dir);
    return {report.header == want && sorted && report.rows.size() == impact.rows.size() && !report.rows.empty(),
            "columns " + std::string(report.header == want ? "match" : "differ") + ", " +
                std::to_string(report.rows.size()) + " rows " + (sorted ? "sorted" : "not sorted") +
                " by impact descending"};
}

}  // namespace

int main() {
    report(1, "exposure vs dense matrix powers", exposure_oracle);
    report(2, "Fisher closed form vs outer product and Hessian", fisher_oracle);
    report(3, "likelihood gradient vs central differences", gradient_check);
    report(4, "parameter recovery coverage", calibration);
    report(5, "CRLB consistency of the MLE", crlb_consistency);
    report(6, "impact closed form", estimand_closed_form);
    report(7, "null-effect impact intervals", null_effect);
    report(8, "star design geometry", star_geometry);
    report(9, "determinism", determinism);
    report(10, "report fidelity", report_fidelity);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures;
}

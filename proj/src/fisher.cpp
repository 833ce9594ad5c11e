#include "narrinf/fisher.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "narrinf/error.hpp"

namespace narrinf {

namespace {

constexpr double kSingularCondition = 1e12;

}  // namespace

FisherInfo fisher_information(const ModelParams& p, const SourceVector& z, const Eigen::VectorXd& s1,
                              const Eigen::VectorXd& x, const ModelConfig& config) {
    if (p.n_hops() != 1 || p.n_covariates() != 1) {
        throw UnsupportedError(
            "closed-form Fisher information needs one exposure hop and one covariate; "
            "use the general (predictor-gradient) path");
    }
    const auto n = static_cast<Eigen::Index>(z.size());
    if (s1.size() != n || x.size() != n) throw InputError("Fisher inputs have mismatched lengths");

    ExposureTensor s{s1.transpose()};
    CovariateMatrix cov{x, {"x"}};
    const Eigen::VectorXd lambda = expected_outcomes(linear_predictor(p, z, s, cov, LatentEffects{}, config));

    const double tau = p.tau;
    const double gamma = p.gamma[0];
    FisherInfo out;
    out.names = {"tau", "gamma_1", "beta_1", "mu"};
    out.lambdas = lambda;
    out.phi.resize(n);
    Eigen::Matrix4d f = Eigen::Matrix4d::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double phi = (z[static_cast<std::size_t>(i)] ? 1.0 : 0.0) + gamma * s1[i];
        const double ts = tau * s1[i];
        const double xi = x[i];
        const double l = lambda[i];
        out.phi[i] = phi;
        f(0, 0) += l * phi * phi;
        f(0, 1) += l * phi * ts;
        f(0, 2) += l * phi * xi;
        f(0, 3) += l * phi;
        f(1, 1) += l * ts * ts;
        f(1, 2) += l * ts * xi;
        f(1, 3) += l * ts;
        f(2, 2) += l * xi * xi;
        f(2, 3) += l * xi;
        f(3, 3) += l;
    }
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < r; ++c) f(r, c) = f(c, r);
    }
    out.matrix = f;
    return out;
}

FisherInfo fisher_information(const ModelParams& p, const SourceVector& z, const ExposureTensor& s,
                              const CovariateMatrix& x, const ModelConfig& config) {
    if (s.n_hops() != 1 || x.n_cols() != 1 || p.n_hops() != 1 || p.n_covariates() != 1) {
        throw UnsupportedError("closed-form Fisher information supports exactly one hop and one covariate (got " +
                               std::to_string(s.n_hops()) + " hops, " + std::to_string(x.n_cols()) +
                               " covariates); use the general (predictor-gradient) path");
    }
    return fisher_information(p, z, Eigen::VectorXd(s.hop(0).transpose()), Eigen::VectorXd(x.x.col(0)), config);
}

FisherInfo fisher_information_general(const ModelParams& p, const SourceVector& z, const ExposureTensor& s,
                                      const CovariateMatrix& x, const ModelConfig& config) {
    FisherInfo out;
    out.names = p.coefficient_names();
    out.lambdas = expected_outcomes(linear_predictor(p, z, s, x, LatentEffects{}, config));
    const Eigen::MatrixXd jac = predictor_jacobian(p, z, s, x);
    out.matrix = jac.transpose() * out.lambdas.asDiagonal() * jac;
    out.phi = jac.col(0);
    return out;
}

CrlbResult crlb(const FisherInfo& f, double ridge) {
    if (!(ridge >= 0.0)) throw InputError("ridge must be nonnegative");
    const auto k = f.matrix.rows();
    if (k == 0 || f.matrix.cols() != k) throw InputError("Fisher matrix must be square and non-empty");

    const Eigen::MatrixXd m = f.matrix + ridge * Eigen::MatrixXd::Identity(k, k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const Eigen::VectorXd ev = eig.eigenvalues();
    const double largest = ev.cwiseAbs().maxCoeff();
    const double smallest = ev.minCoeff();
    const double cond = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();

    if (!(cond <= kSingularCondition)) {
        std::ostringstream msg;
        msg << "singular design: condition number " << cond << " exceeds " << kSingularCondition
            << "; deficient directions:";
        for (Eigen::Index j = 0; j < k; ++j) {
            if (ev[j] > largest / kSingularCondition) continue;
            msg << " [";
            bool first = true;
            for (Eigen::Index r = 0; r < k; ++r) {
                const double w = eig.eigenvectors()(r, j);
                if (std::abs(w) < 1e-6) continue;
                msg << (first ? "" : " ") << (w < 0 ? "-" : (first ? "" : "+")) << std::abs(w) << "*"
                    << (static_cast<std::size_t>(r) < f.names.size() ? f.names[static_cast<std::size_t>(r)] : "p");
                first = false;
            }
            msg << "]";
        }
        throw SingularDesignError(msg.str());
    }

    CrlbResult out;
    out.names = f.names;
    out.ridge = ridge;
    out.condition_number = cond;
    out.covariance_bound = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    out.covariance_bound = 0.5 * (out.covariance_bound + out.covariance_bound.transpose()).eval();
    out.f11 = f.matrix(0, 0);
    out.f22 = k > 1 ? f.matrix(1, 1) : 0.0;
    return out;
}

DesignDiagnostics design_diagnostics(const FisherInfo& f, double floor) {
    DesignDiagnostics d;
    d.f11 = f.matrix(0, 0);
    d.f22 = f.matrix.rows() > 1 ? f.matrix(1, 1) : 0.0;
    d.weak_tau = d.f11 < floor;
    d.weak_gamma = d.f22 < floor;
    if (d.weak_tau) d.notes.push_back("little information on tau: sources carry small expected outcomes");
    if (d.weak_gamma) {
        d.notes.push_back("little information on gamma_1: few high-outcome vertices receive peer exposure");
    }
    return d;
}

}  // namespace narrinf

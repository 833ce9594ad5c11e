#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "narrinf/data.hpp"
#include "narrinf/exposure.hpp"
#include "narrinf/graph.hpp"
#include "narrinf/model.hpp"

namespace narrinf {

/// Expected Fisher information of the Poisson model with eps = 0.
struct FisherInfo {
    Eigen::MatrixXd matrix;           // parameter order given by `names`
    std::vector<std::string> names;   // (tau, gamma_1, beta, mu) for the closed form
    Eigen::VectorXd phi;              // z_i + gamma_1 s_i (closed form only)
    Eigen::VectorXd lambdas;
};

/// Closed form for one exposure hop and one scalar covariate:
///   F = sum_i lambda_i g_i g_i',  g_i = (phi_i, tau s_i, x_i, 1),  phi_i = z_i + gamma_1 s_i,
/// assembled entry by entry. lambda_i comes from the model's linear predictor.
FisherInfo fisher_information(const ModelParams& p, const SourceVector& z, const Eigen::VectorXd& s1,
                              const Eigen::VectorXd& x, const ModelConfig& config = {});

/// Same, from the model's data types. Throws UnsupportedError when there is
/// more than one hop or covariate; use fisher_information_general for those.
FisherInfo fisher_information(const ModelParams& p, const SourceVector& z, const ExposureTensor& s,
                              const CovariateMatrix& x, const ModelConfig& config = {});

/// J' diag(lambda) J with J the predictor Jacobian, for any hop count and
/// covariate count. Parameter order follows ModelParams::pack().
FisherInfo fisher_information_general(const ModelParams& p, const SourceVector& z, const ExposureTensor& s,
                                      const CovariateMatrix& x, const ModelConfig& config = {});

struct CrlbResult {
    Eigen::MatrixXd covariance_bound;
    std::vector<std::string> names;
    double condition_number = 0.0;
    double f11 = 0.0;
    double f22 = 0.0;
    double ridge = 0.0;
};

/// Inverts F + ridge * I. With ridge 0, a condition number above 1e12 throws
/// SingularDesignError listing the near-null parameter directions.
CrlbResult crlb(const FisherInfo& f, double ridge = 0.0);

struct DesignDiagnostics {
    double f11 = 0.0;  // information on tau
    double f22 = 0.0;  // information on gamma_1
    bool weak_tau = false;
    bool weak_gamma = false;
    std::vector<std::string> notes;

    bool weak() const { return weak_tau || weak_gamma; }
};

/// F11 = sum lambda phi^2 and F22 = sum lambda (tau s)^2, flagged when below `floor`.
DesignDiagnostics design_diagnostics(const FisherInfo& f, double floor = 1e-6);

}  // namespace narrinf

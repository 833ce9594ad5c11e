#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "narrinf/data.hpp"
#include "narrinf/graph.hpp"
#include "narrinf/inference.hpp"
#include "narrinf/model.hpp"

namespace narrinf {

/// Posterior summary of a vertex's causal impact: the average, over all N
/// vertices, of the expected extra tweets when the vertex is a source versus
/// when it is not.
struct ImpactEstimate {
    std::size_t vertex = 0;
    std::string vertex_id;
    double zeta_mean = 0.0;
    double zeta_lo = 0.0;  // 5% quantile over draws
    double zeta_hi = 0.0;  // 95% quantile over draws
    std::size_t n_draws = 0;
};

/// Expected outcomes under source vector `z`: exposure recomputed for z,
/// eps set to 0, and the lognormal mean factor exp(sigma_eps^2 / 2) applied.
Eigen::VectorXd impute_expected_outcomes(const ModelParams& p, const SourceVector& z, const InfluenceGraph& g,
                                         const CovariateMatrix& x, const ModelConfig& config = {});

/// Parameter draws of a fitted posterior, in chain order.
std::vector<ModelParams> posterior_params(const PosteriorSamples& samples);

/// Impact of vertex i with the two arms derived from `base_z`. Only vertices
/// whose source flag or exposure differs between the arms contribute, since
/// every other term of the difference is exactly zero.
ImpactEstimate impact(std::size_t i, const std::vector<ModelParams>& draws, const InfluenceGraph& g,
                      const CovariateMatrix& x, const SourceVector& base_z, const ModelConfig& config = {});

/// Impact with the default all-zero base vector (each vertex as the unique source).
ImpactEstimate impact(std::size_t i, const std::vector<ModelParams>& draws, const InfluenceGraph& g,
                      const CovariateMatrix& x, const ModelConfig& config = {});

/// Impacts for `subset` (all vertices when empty), sorted by zeta_mean
/// descending with ties broken by vertex id ascending. Vertices are
/// evaluated on up to `threads` workers.
std::vector<ImpactEstimate> rank_impacts(const std::vector<ModelParams>& draws, const InfluenceGraph& g,
                                         const CovariateMatrix& x,
                                         const std::optional<SourceVector>& base_z = std::nullopt,
                                         const std::vector<std::size_t>& subset = {},
                                         const ModelConfig& config = {}, std::size_t threads = 1);

}  // namespace narrinf

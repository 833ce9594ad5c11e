#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "narrinf/data.hpp"
#include "narrinf/estimand.hpp"
#include "narrinf/fisher.hpp"
#include "narrinf/graph.hpp"
#include "narrinf/inference.hpp"
#include "narrinf/ingest.hpp"
#include "narrinf/io.hpp"
#include "narrinf/model.hpp"

namespace narrinf::formats {

/// The on-disk dataset consumed by fit, impact and crlb.
///   edges.csv       src,dst,weight
///   covariates.csv  vertex_id,<column names>   (defines vertex order)
///   outcomes.csv    vertex_id,y
///   sources.csv     vertex_id,z
///   vertices.csv    vertex_id,screen_name,tweets,total_retweets,most_retweeted,followers,first_time
struct Dataset {
    InfluenceGraph graph;
    CovariateMatrix x;
    OutcomeVector y;
    SourceVector z;
    std::vector<VertexStats> stats;  // empty when vertices.csv is absent
};

inline constexpr const char* kDatasetFiles[] = {"edges.csv", "covariates.csv", "outcomes.csv", "sources.csv",
                                                "vertices.csv"};

std::string edges_csv(const InfluenceGraph& g);
std::string covariates_csv(const InfluenceGraph& g, const CovariateMatrix& x);
std::string outcomes_csv(const InfluenceGraph& g, const OutcomeVector& y);
std::string sources_csv(const InfluenceGraph& g, const SourceVector& z);
std::string vertices_csv(const InfluenceGraph& g, const std::vector<VertexStats>& stats);

/// Stages all dataset files (vertices.csv only when stats are present).
void add_dataset(io::AtomicOutputs& out, const Dataset& d);

/// Reads and cross-checks a dataset directory; InputError on any mismatch.
Dataset read_dataset(const std::filesystem::path& dir);

nlohmann::json params_to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);
ModelParams read_params(const std::filesystem::path& path);

/// chain,draw,tau,gamma_1..,beta_1..,mu,sigma_eps
std::string posterior_csv(const PosteriorSamples& samples);

struct PosteriorTable {
    std::vector<ModelParams> draws;
    std::vector<std::size_t> chain;
    std::size_t n_hops = 0;
    std::size_t n_covariates = 0;
};
PosteriorTable read_posterior_csv(const std::filesystem::path& path);

nlohmann::json diagnostics_json(const DiagnosticsSummary& d);

/// vertex_id,screen_name,zeta_mean,zeta_lo,zeta_hi,n_draws
std::string impact_csv(const std::vector<ImpactEstimate>& impacts, const std::vector<VertexStats>& stats);

/// Table-style report: screen_name then exactly T,TRT,MRT,F,first_time,PR,impact.
std::string report_csv(const std::vector<ImpactEstimate>& impacts, const std::vector<VertexStats>& stats,
                       const Eigen::VectorXd& pagerank);

nlohmann::json crlb_json(const FisherInfo& f, const CrlbResult& c, const DesignDiagnostics& d);

}  // namespace narrinf::formats

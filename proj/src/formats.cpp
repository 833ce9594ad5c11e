#include "narrinf/formats.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "narrinf/error.hpp"

namespace narrinf::formats {

using nlohmann::json;
using io::csv_escape;
using io::format_double;

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Column of vertex ids must repeat the covariate order exactly.
void check_ids(const io::CsvTable& t, const std::vector<std::string>& ids, const std::string& file) {
    if (t.rows.size() != ids.size()) {
        throw InputError(file + " has " + std::to_string(t.rows.size()) + " rows, expected " +
                         std::to_string(ids.size()));
    }
    const auto col = t.column("vertex_id");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (t.rows[i][col] != ids[i]) {
            throw InputError(file + " row " + std::to_string(i + 1) + " is vertex '" + t.rows[i][col] +
                             "', expected '" + ids[i] + "'");
        }
    }
}

}  // namespace

std::string edges_csv(const InfluenceGraph& g) {
    std::string out = "src,dst,weight\n";
    for (const auto& e : g.edges()) {
        out += csv_escape(e.src) + ',' + csv_escape(e.dst) + ',' + format_double(e.weight) + '\n';
    }
    return out;
}

std::string covariates_csv(const InfluenceGraph& g, const CovariateMatrix& x) {
    std::string out = "vertex_id";
    for (const auto& name : x.column_names) out += ',' + csv_escape(name);
    out += '\n';
    for (std::size_t i = 0; i < g.n_vertices(); ++i) {
        out += csv_escape(g.vertex_ids()[i]);
        for (Eigen::Index c = 0; c < x.x.cols(); ++c) out += ',' + format_double(x.x(static_cast<Eigen::Index>(i), c));
        out += '\n';
    }
    return out;
}

std::string outcomes_csv(const InfluenceGraph& g, const OutcomeVector& y) {
    std::string out = "vertex_id,y\n";
    for (std::size_t i = 0; i < g.n_vertices(); ++i) {
        out += csv_escape(g.vertex_ids()[i]) + ',' +
               std::to_string(static_cast<long long>(y.y[static_cast<Eigen::Index>(i)])) + '\n';
    }
    return out;
}

std::string sources_csv(const InfluenceGraph& g, const SourceVector& z) {
    std::string out = "vertex_id,z\n";
    for (std::size_t i = 0; i < g.n_vertices(); ++i) {
        out += csv_escape(g.vertex_ids()[i]) + ',' + (z[i] ? "1" : "0") + '\n';
    }
    return out;
}

std::string vertices_csv(const InfluenceGraph& g, const std::vector<VertexStats>& stats) {
    std::string out = "vertex_id,screen_name,tweets,total_retweets,most_retweeted,followers,first_time\n";
    for (std::size_t i = 0; i < g.n_vertices(); ++i) {
        const auto& s = stats[i];
        out += csv_escape(g.vertex_ids()[i]) + ',' + csv_escape(s.screen_name) + ',' + std::to_string(s.tweets) + ',' +
               std::to_string(s.total_retweets) + ',' + std::to_string(s.most_retweeted) + ',' +
               (s.followers ? std::to_string(*s.followers) : "") + ',' +
               (s.first_time ? format_timestamp(*s.first_time) : "") + '\n';
    }
    return out;
}

void add_dataset(io::AtomicOutputs& out, const Dataset& d) {
    out.add("edges.csv", edges_csv(d.graph));
    out.add("covariates.csv", covariates_csv(d.graph, d.x));
    out.add("outcomes.csv", outcomes_csv(d.graph, d.y));
    out.add("sources.csv", sources_csv(d.graph, d.z));
    if (!d.stats.empty()) out.add("vertices.csv", vertices_csv(d.graph, d.stats));
}

Dataset read_dataset(const std::filesystem::path& dir) {
    Dataset d;
    const auto cov = io::read_csv_file(dir / "covariates.csv");
    if (cov.header.empty() || cov.header[0] != "vertex_id") {
        throw InputError("covariates.csv must start with a vertex_id column");
    }
    std::vector<std::string> ids;
    for (const auto& row : cov.rows) ids.push_back(row[0]);
    const auto n = static_cast<Eigen::Index>(ids.size());
    d.x.column_names.assign(cov.header.begin() + 1, cov.header.end());
    d.x.x.resize(n, static_cast<Eigen::Index>(d.x.column_names.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < d.x.x.cols(); ++c) {
            d.x.x(i, c) = io::parse_double(cov.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c) + 1],
                                           "covariates.csv");
        }
    }
    d.x.validate();

    const auto edges = io::read_csv_file(dir / "edges.csv");
    const auto src = edges.column("src"), dst = edges.column("dst"), w = edges.column("weight");
    std::vector<WeightedEdge> list;
    for (const auto& row : edges.rows) list.push_back({row[src], row[dst], io::parse_double(row[w], "edges.csv")});
    auto built = build_influence_graph(ids, list);
    if (built.graph.n_vertices() != ids.size()) {
        throw InputError("edges.csv references vertices missing from covariates.csv");
    }
    d.graph = std::move(built.graph);

    const auto out = io::read_csv_file(dir / "outcomes.csv");
    check_ids(out, ids, "outcomes.csv");
    d.y.y.resize(n);
    const auto ycol = out.column("y");
    for (Eigen::Index i = 0; i < n; ++i) {
        d.y.y[i] = static_cast<double>(io::parse_int(out.rows[static_cast<std::size_t>(i)][ycol], "outcomes.csv"));
    }
    d.y.validate();

    const auto srcs = io::read_csv_file(dir / "sources.csv");
    check_ids(srcs, ids, "sources.csv");
    d.z = SourceVector(ids.size());
    const auto zcol = srcs.column("z");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto v = io::parse_int(srcs.rows[i][zcol], "sources.csv");
        if (v != 0 && v != 1) throw InputError("sources.csv: z must be 0 or 1");
        d.z.set(i, v == 1);
    }

    if (std::filesystem::exists(dir / "vertices.csv")) {
        const auto vt = io::read_csv_file(dir / "vertices.csv");
        check_ids(vt, ids, "vertices.csv");
        const auto c_name = vt.column("screen_name"), c_t = vt.column("tweets"), c_trt = vt.column("total_retweets"),
                   c_mrt = vt.column("most_retweeted"), c_f = vt.column("followers"), c_first = vt.column("first_time");
        for (const auto& row : vt.rows) {
            VertexStats s;
            s.screen_name = row[c_name];
            s.tweets = io::parse_int(row[c_t], "vertices.csv");
            s.total_retweets = io::parse_int(row[c_trt], "vertices.csv");
            s.most_retweeted = io::parse_int(row[c_mrt], "vertices.csv");
            if (!row[c_f].empty()) s.followers = io::parse_int(row[c_f], "vertices.csv");
            if (!row[c_first].empty()) {
                s.first_time = parse_timestamp(row[c_first]);
                if (!s.first_time) throw InputError("vertices.csv: bad timestamp '" + row[c_first] + "'");
            }
            d.stats.push_back(std::move(s));
        }
    }
    return d;
}

json params_to_json(const ModelParams& p) {
    return json{{"tau", p.tau},
                {"gamma", std::vector<double>(p.gamma.data(), p.gamma.data() + p.gamma.size())},
                {"beta", std::vector<double>(p.beta.data(), p.beta.data() + p.beta.size())},
                {"mu", p.mu},
                {"sigma_eps", p.sigma_eps}};
}

ModelParams params_from_json(const json& j) {
    try {
        ModelParams p;
        p.tau = j.at("tau").get<double>();
        const auto gamma = j.at("gamma").get<std::vector<double>>();
        const auto beta = j.at("beta").get<std::vector<double>>();
        p.gamma = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
        p.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
        p.mu = j.at("mu").get<double>();
        p.sigma_eps = j.value("sigma_eps", 0.0);
        if (p.gamma.size() < 1) throw InputError("params need at least one gamma");
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw InputError(std::string("bad params JSON: ") + e.what());
    }
}

ModelParams read_params(const std::filesystem::path& path) {
    json j = json::parse(io::read_file(path), nullptr, false);
    if (j.is_discarded()) throw InputError(path.string() + " is not valid JSON");
    return params_from_json(j);
}

std::string posterior_csv(const PosteriorSamples& samples) {
    std::string out = "chain,draw";
    for (const auto& name : samples.parameter_names()) out += ',' + name;
    out += '\n';
    for (std::size_t c = 0; c < samples.chains.size(); ++c) {
        for (std::size_t d = 0; d < samples.chains[c].size(); ++d) {
            const auto& p = samples.chains[c][d].params;
            out += std::to_string(c) + ',' + std::to_string(d);
            const Eigen::VectorXd theta = p.pack();
            for (Eigen::Index k = 0; k < theta.size(); ++k) out += ',' + format_double(theta[k]);
            out += ',' + format_double(p.sigma_eps) + '\n';
        }
    }
    return out;
}

PosteriorTable read_posterior_csv(const std::filesystem::path& path) {
    const auto t = io::read_csv_file(path);
    PosteriorTable out;
    for (const auto& h : t.header) {
        if (h.rfind("gamma_", 0) == 0) ++out.n_hops;
        if (h.rfind("beta_", 0) == 0) ++out.n_covariates;
    }
    if (out.n_hops == 0) throw InputError(path.string() + ": no gamma columns");
    const auto c_chain = t.column("chain");
    const auto c_tau = t.column("tau");
    const auto c_mu = t.column("mu");
    const auto c_sigma = t.column("sigma_eps");
    for (const auto& row : t.rows) {
        ModelParams p;
        p.tau = io::parse_double(row[c_tau], path.string());
        p.gamma.resize(static_cast<Eigen::Index>(out.n_hops));
        p.beta.resize(static_cast<Eigen::Index>(out.n_covariates));
        for (std::size_t k = 0; k < out.n_hops; ++k) {
            p.gamma[static_cast<Eigen::Index>(k)] =
                io::parse_double(row[t.column("gamma_" + std::to_string(k + 1))], path.string());
        }
        for (std::size_t j = 0; j < out.n_covariates; ++j) {
            p.beta[static_cast<Eigen::Index>(j)] =
                io::parse_double(row[t.column("beta_" + std::to_string(j + 1))], path.string());
        }
        p.mu = io::parse_double(row[c_mu], path.string());
        p.sigma_eps = io::parse_double(row[c_sigma], path.string());
        p.validate();
        out.chain.push_back(static_cast<std::size_t>(io::parse_int(row[c_chain], path.string())));
        out.draws.push_back(std::move(p));
    }
    return out;
}

json diagnostics_json(const DiagnosticsSummary& d) {
    json params = json::array();
    for (const auto& p : d.parameters) {
        json entry = {{"name", p.name},       {"mean", p.mean},   {"sd", p.sd},
                      {"q05", p.lo},          {"q95", p.hi},      {"zero_variance", p.zero_variance},
                      {"flagged", p.flagged}};
        entry["rhat"] = p.rhat ? json(*p.rhat) : json(nullptr);
        params.push_back(std::move(entry));
    }
    return json{{"parameters", params},
                {"acceptance_rates", d.acceptance_rates},
                {"rhat_threshold", d.rhat_threshold},
                {"max_rhat", d.max_rhat()},
                {"notices", d.notices}};
}

std::string impact_csv(const std::vector<ImpactEstimate>& impacts, const std::vector<VertexStats>& stats) {
    std::string out = "vertex_id,screen_name,zeta_mean,zeta_lo,zeta_hi,n_draws\n";
    for (const auto& e : impacts) {
        const std::string name = e.vertex < stats.size() ? stats[e.vertex].screen_name : e.vertex_id;
        out += csv_escape(e.vertex_id) + ',' + csv_escape(name) + ',' + format_double(e.zeta_mean) + ',' +
               format_double(e.zeta_lo) + ',' + format_double(e.zeta_hi) + ',' + std::to_string(e.n_draws) + '\n';
    }
    return out;
}

std::string report_csv(const std::vector<ImpactEstimate>& impacts, const std::vector<VertexStats>& stats,
                       const Eigen::VectorXd& pagerank) {
    std::string out = "screen_name,T,TRT,MRT,F,first_time,PR,impact\n";
    for (const auto& e : impacts) {
        VertexStats s;
        s.screen_name = e.vertex_id;
        if (e.vertex < stats.size()) s = stats[e.vertex];
        char pr[32];
        std::snprintf(pr, sizeof pr, "%.6g", pagerank[static_cast<Eigen::Index>(e.vertex)]);
        out += csv_escape(s.screen_name) + ',' + std::to_string(s.tweets) + ',' + std::to_string(s.total_retweets) +
               ',' + std::to_string(s.most_retweeted) + ',' + (s.followers ? std::to_string(*s.followers) : "") + ',' +
               (s.first_time ? format_timestamp(*s.first_time) : "") + ',' + pr + ',' + fixed(e.zeta_mean, 2) + '\n';
    }
    return out;
}

json crlb_json(const FisherInfo& f, const CrlbResult& c, const DesignDiagnostics& d) {
    auto rows = [](const Eigen::MatrixXd& m) {
        json out = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(r, k));
            out.push_back(std::move(row));
        }
        return out;
    };
    return json{{"parameters", c.names},
                {"fisher", rows(f.matrix)},
                {"covariance_bound", rows(c.covariance_bound)},
                {"condition_number", c.condition_number},
                {"ridge", c.ridge},
                {"f11", d.f11},
                {"f22", d.f22},
                {"flags", {{"weak_tau", d.weak_tau}, {"weak_gamma", d.weak_gamma}}},
                {"notes", d.notes}};
}

}  // namespace narrinf::formats

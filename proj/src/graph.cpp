#include "narrinf/graph.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "narrinf/error.hpp"

namespace narrinf {

InfluenceGraph::InfluenceGraph(std::vector<std::string> vertex_ids, SparseMatrix influence)
    : ids_(std::move(vertex_ids)), a_(std::move(influence)) {
    const auto n = static_cast<Eigen::Index>(ids_.size());
    if (a_.rows() != n || a_.cols() != n) {
        throw InputError("influence matrix is " + std::to_string(a_.rows()) + "x" +
                         std::to_string(a_.cols()) + " but there are " +
                         std::to_string(ids_.size()) + " vertex ids");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
        if (!seen.insert(id).second) throw InputError("duplicate vertex id '" + id + "'");
    }
    a_.prune(0.0);
    a_.makeCompressed();
    for (Eigen::Index i = 0; i < a_.outerSize(); ++i) {
        for (SparseMatrix::InnerIterator it(a_, i); it; ++it) {
            if (!std::isfinite(it.value()) || it.value() < 0.0) {
                throw InputError("influence weight (" + ids_[it.row()] + "," + ids_[it.col()] +
                                 ") must be finite and nonnegative");
            }
            if (it.row() == it.col()) {
                throw InputError("self-influence entry on vertex '" + ids_[it.row()] + "'");
            }
        }
    }
    edge_count_ = static_cast<std::size_t>(a_.nonZeros());
}

std::ptrdiff_t InfluenceGraph::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i] == id) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
}

std::vector<WeightedEdge> InfluenceGraph::edges() const {
    std::vector<WeightedEdge> out;
    out.reserve(edge_count_);
    for (Eigen::Index i = 0; i < a_.outerSize(); ++i) {
        for (SparseMatrix::InnerIterator it(a_, i); it; ++it) {
            out.push_back({ids_[it.row()], ids_[it.col()], it.value()});
        }
    }
    return out;
}

GraphBuild build_influence_graph(const std::vector<WeightedEdge>& edges) {
    return build_influence_graph({}, edges);
}

GraphBuild build_influence_graph(const std::vector<std::string>& vertex_ids,
                                 const std::vector<WeightedEdge>& edges) {
    GraphBuild out;
    std::vector<std::string> ids;
    std::unordered_map<std::string, Eigen::Index> index;
    auto intern = [&](const std::string& id) {
        auto [it, inserted] = index.try_emplace(id, static_cast<Eigen::Index>(ids.size()));
        if (inserted) ids.push_back(id);
        return it->second;
    };
    for (const auto& id : vertex_ids) {
        if (index.count(id)) throw InputError("duplicate vertex id '" + id + "'");
        intern(id);
    }

    // Ordered map keeps triplet order independent of hash layout.
    std::map<std::pair<Eigen::Index, Eigen::Index>, double> summed;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& edge = edges[e];
        if (!(edge.weight >= 0.0) || !std::isfinite(edge.weight)) {
            throw InputError("edge " + std::to_string(e) + " (" + edge.src + "->" + edge.dst +
                             ") has invalid weight " + std::to_string(edge.weight));
        }
        const auto i = intern(edge.src);
        const auto j = intern(edge.dst);
        if (i == j) {
            out.warnings.push_back("edge " + std::to_string(e) + ": dropped self-loop on '" +
                                   edge.src + "'");
            continue;
        }
        summed[{i, j}] += edge.weight;
    }

    const auto n = static_cast<Eigen::Index>(ids.size());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(summed.size());
    for (const auto& [ij, w] : summed) {
        if (w > 0.0) triplets.emplace_back(ij.first, ij.second, w);
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    out.graph = InfluenceGraph(std::move(ids), std::move(a));
    return out;
}

InfluenceGraph normalize_rows(const InfluenceGraph& g) {
    SparseMatrix a = g.influence();
    for (Eigen::Index i = 0; i < a.outerSize(); ++i) {
        double row_max = 0.0;
        for (SparseMatrix::InnerIterator it(a, i); it; ++it) row_max = std::max(row_max, it.value());
        if (row_max <= 0.0) continue;
        for (SparseMatrix::InnerIterator it(a, i); it; ++it) it.valueRef() /= row_max;
    }
    return InfluenceGraph(g.vertex_ids(), std::move(a));
}

SourceVector::SourceVector(std::vector<unsigned char> z) : z_(std::move(z)) {
    for (auto& v : z_) {
        if (v > 1) throw InputError("source vector entries must be 0 or 1");
    }
}

std::size_t SourceVector::count() const {
    std::size_t c = 0;
    for (auto v : z_) c += v;
    return c;
}

SourceVector SourceVector::with_source(std::size_t i) const {
    SourceVector out = *this;
    out.set(i, true);
    return out;
}

SourceVector SourceVector::without_source(std::size_t i) const {
    SourceVector out = *this;
    out.set(i, false);
    return out;
}

Eigen::VectorXd SourceVector::as_vector() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(z_.size()));
    for (std::size_t i = 0; i < z_.size(); ++i) v[static_cast<Eigen::Index>(i)] = z_[i];
    return v;
}

DegreeStats degrees(const InfluenceGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.n_vertices());
    DegreeStats d{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
                  Eigen::VectorXd::Zero(n)};
    const auto& a = g.influence();
    for (Eigen::Index i = 0; i < a.outerSize(); ++i) {
        for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
            d.out_degree[i] += 1.0;
            d.out_strength[i] += it.value();
            d.in_degree[it.col()] += 1.0;
            d.in_strength[it.col()] += it.value();
        }
    }
    return d;
}

CentralityVector pagerank(const InfluenceGraph& g, double damping, double tol,
                          std::size_t max_iter) {
    const auto n = static_cast<Eigen::Index>(g.n_vertices());
    if (n == 0) throw InputError("pagerank needs at least one vertex");
    if (!(damping > 0.0 && damping < 1.0)) throw InputError("damping must lie in (0,1)");

    const auto& a = g.influence();
    const Eigen::VectorXd strength = degrees(g).out_strength;

    CentralityVector out;
    out.damping = damping;
    Eigen::VectorXd r = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd next(n);
    double residual = 0.0;
    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        double dangling = 0.0;
        next.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (strength[i] <= 0.0) {
                dangling += r[i];
                continue;
            }
            const double share = r[i] / strength[i];
            for (SparseMatrix::InnerIterator it(a, i); it; ++it) next[it.col()] += share * it.value();
        }
        const double teleport = (1.0 - damping + damping * dangling) / static_cast<double>(n);
        next = damping * next + Eigen::VectorXd::Constant(n, teleport);
        next /= next.sum();
        residual = (next - r).lpNorm<1>();
        r.swap(next);
        if (residual < tol) {
            out.scores = std::move(r);
            out.iterations = iter;
            out.residual = residual;
            return out;
        }
    }
    throw ConvergenceError("pagerank did not converge in " + std::to_string(max_iter) +
                               " iterations (residual " + std::to_string(residual) + ")",
                           residual);
}

namespace {
std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}
}  // namespace

void write_dot(std::ostream& os, const InfluenceGraph& g, const std::vector<std::string>& labels) {
    os << "digraph influence {\n";
    const auto& ids = g.vertex_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        os << "  \"" << dot_escape(ids[i]) << '"';
        if (i < labels.size() && !labels[i].empty()) os << " [label=\"" << dot_escape(labels[i]) << "\"]";
        os << ";\n";
    }
    for (const auto& e : g.edges()) {
        os << "  \"" << dot_escape(e.src) << "\" -> \"" << dot_escape(e.dst) << "\" [weight=" << e.weight
           << ", label=\"" << e.weight << "\"];\n";
    }
    os << "}\n";
}

}  // namespace narrinf

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace narrinf {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct WeightedEdge {
    std::string src;
    std::string dst;
    double weight = 0.0;
};

/// Weighted directed influence network. Entry (i, j) of `influence()` is the
/// influence weight of vertex i on vertex j. Immutable after construction.
class InfluenceGraph {
public:
    InfluenceGraph() = default;

    /// Takes ownership of a prepared matrix. Throws InputError if the matrix
    /// is not square, does not match the id list, has negative or non-finite
    /// entries, a nonzero diagonal, or duplicate ids.
    InfluenceGraph(std::vector<std::string> vertex_ids, SparseMatrix influence);

    std::size_t n_vertices() const noexcept { return ids_.size(); }
    std::size_t edge_count() const noexcept { return edge_count_; }
    const std::vector<std::string>& vertex_ids() const noexcept { return ids_; }
    const SparseMatrix& influence() const noexcept { return a_; }

    /// Position of `id`, or -1.
    std::ptrdiff_t index_of(const std::string& id) const;

    /// Edges as (src, dst, weight) in row-major order.
    std::vector<WeightedEdge> edges() const;

private:
    std::vector<std::string> ids_;
    SparseMatrix a_;
    std::size_t edge_count_ = 0;
};

struct GraphBuild {
    InfluenceGraph graph;
    std::vector<std::string> warnings;
};

/// Builds a graph from an edge list. Duplicate pairs are summed, self-loops
/// dropped with a warning, vertices ordered by first appearance (src before
/// dst within each edge). Negative weights throw InputError naming the edge.
GraphBuild build_influence_graph(const std::vector<WeightedEdge>& edges);

/// Same, with an explicit vertex list that fixes order and admits isolated
/// vertices. Edge endpoints not in `vertex_ids` are appended.
GraphBuild build_influence_graph(const std::vector<std::string>& vertex_ids,
                                 const std::vector<WeightedEdge>& edges);

/// Divides every row by its maximum entry.
InfluenceGraph normalize_rows(const InfluenceGraph& g);

/// Binary treatment vector.
class SourceVector {
public:
    SourceVector() = default;
    explicit SourceVector(std::size_t n) : z_(n, 0) {}
    explicit SourceVector(std::vector<unsigned char> z);

    std::size_t size() const noexcept { return z_.size(); }
    bool operator[](std::size_t i) const { return z_[i] != 0; }
    void set(std::size_t i, bool on) { z_.at(i) = on ? 1 : 0; }
    std::size_t count() const;

    /// Copy with entry i forced to 1.
    SourceVector with_source(std::size_t i) const;
    /// Copy with entry i forced to 0.
    SourceVector without_source(std::size_t i) const;

    Eigen::VectorXd as_vector() const;

    friend bool operator==(const SourceVector&, const SourceVector&) = default;

private:
    std::vector<unsigned char> z_;
};

struct DegreeStats {
    Eigen::VectorXd out_degree;
    Eigen::VectorXd in_degree;
    Eigen::VectorXd out_strength;
    Eigen::VectorXd in_strength;
};

DegreeStats degrees(const InfluenceGraph& g);

struct CentralityVector {
    Eigen::VectorXd scores;
    double damping = 0.85;
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// PageRank by power iteration. The walk moves from i to j with probability
/// a_ij / out_strength_i; dangling vertices jump uniformly. Stops when the L1
/// change drops below `tol`; throws ConvergenceError otherwise.
CentralityVector pagerank(const InfluenceGraph& g, double damping = 0.85, double tol = 1e-10,
                          std::size_t max_iter = 200);

/// Graphviz export; edge labels carry the weights.
void write_dot(std::ostream& os, const InfluenceGraph& g,
               const std::vector<std::string>& labels = {});

}  // namespace narrinf

#include "narrinf/exposure.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "narrinf/error.hpp"

namespace narrinf {

ExposureTensor exposure_profile(const InfluenceGraph& g, const SourceVector& z, std::size_t n_hops) {
    if (n_hops == 0) throw InputError("exposure needs at least one hop");
    if (z.size() != g.n_vertices()) {
        throw InputError("source vector has length " + std::to_string(z.size()) + ", graph has " +
                         std::to_string(g.n_vertices()) + " vertices");
    }
    const auto n = static_cast<Eigen::Index>(g.n_vertices());
    ExposureTensor out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_hops), n)};

    // (A^T w)_j = sum_i a_ij w_i: scatter along rows of the row-major A.
    const auto& a = g.influence();
    Eigen::VectorXd w = z.as_vector();
    Eigen::VectorXd next(n);
    for (std::size_t hop = 0; hop < n_hops; ++hop) {
        next.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double wi = w[i];
            if (wi == 0.0) continue;
            for (SparseMatrix::InnerIterator it(a, i); it; ++it) next[it.col()] += it.value() * wi;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!std::isfinite(next[j])) {
                throw InputError("exposure overflow at hop " + std::to_string(hop + 1) + " (vertex " +
                                 g.vertex_ids()[static_cast<std::size_t>(j)] + ")");
            }
            out.s(static_cast<Eigen::Index>(hop), j) = std::log1p(next[j]);
        }
        w.swap(next);
    }
    return out;
}

void write_exposure_csv(std::ostream& os, const InfluenceGraph& g, const ExposureTensor& s) {
    os << "hop,vertex_id,exposure\n";
    const auto& ids = g.vertex_ids();
    char buf[64];
    for (Eigen::Index h = 0; h < s.s.rows(); ++h) {
        for (Eigen::Index j = 0; j < s.s.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", s.s(h, j));
            os << (h + 1) << ',' << ids[static_cast<std::size_t>(j)] << ',' << buf << '\n';
        }
    }
}

}  // namespace narrinf

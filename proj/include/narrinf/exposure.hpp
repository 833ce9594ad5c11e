#pragma once

#include <cstddef>
#include <iosfwd>

#include <Eigen/Dense>

#include "narrinf/graph.hpp"

namespace narrinf {

/// Log-exposure per hop: row n-1 holds log((A^T)^n z + 1) for every vertex.
struct ExposureTensor {
    Eigen::MatrixXd s;  // n_hops x N

    std::size_t n_hops() const noexcept { return static_cast<std::size_t>(s.rows()); }
    std::size_t n_vertices() const noexcept { return static_cast<std::size_t>(s.cols()); }
    auto hop(std::size_t n) const { return s.row(static_cast<Eigen::Index>(n)); }
};

/// Repeated sparse products w <- A^T w starting from z; never forms A^n.
/// Throws InputError on a length mismatch, n_hops == 0, or when a propagated
/// value leaves the finite range.
ExposureTensor exposure_profile(const InfluenceGraph& g, const SourceVector& z, std::size_t n_hops);

/// CSV dump with header `hop,vertex_id,exposure`.
void write_exposure_csv(std::ostream& os, const InfluenceGraph& g, const ExposureTensor& s);

}  // namespace narrinf

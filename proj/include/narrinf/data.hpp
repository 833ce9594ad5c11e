#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace narrinf {

/// Vertex covariates, one row per vertex.
struct CovariateMatrix {
    Eigen::MatrixXd x;  // N x m
    std::vector<std::string> column_names;

    std::size_t n_rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
    std::size_t n_cols() const noexcept { return static_cast<std::size_t>(x.cols()); }

    /// Throws InputError unless m >= 1, names match columns and entries are finite.
    void validate() const;
};

/// Narrative tweet counts per vertex. Stored as doubles holding integers.
struct OutcomeVector {
    Eigen::VectorXd y;

    std::size_t size() const noexcept { return static_cast<std::size_t>(y.size()); }
    double total() const { return y.sum(); }

    /// Throws InputError on a negative or non-integral count.
    void validate() const;
};

}  // namespace narrinf

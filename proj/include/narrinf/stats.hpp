#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace narrinf::stats {

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sd(std::span<const double> v);
/// Linear-interpolation quantile (Hyndman-Fan type 7). Copies and sorts.
double quantile(std::span<const double> v, double q);

struct RhatResult {
    double value = 1.0;
    bool zero_variance = false;
};

/// Split-Rhat: each chain is halved and the between/within variance ratio is
/// computed over the 2 * n_chains half-chains. Returns nullopt for fewer than
/// two chains. Constant chains report 1.0 with `zero_variance` set.
std::optional<RhatResult> split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace narrinf::stats

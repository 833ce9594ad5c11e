#include "narrinf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace narrinf::stats {

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile(std::span<const double> v, double q) {
    if (v.empty()) return 0.0;
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::optional<RhatResult> split_rhat(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) return std::nullopt;
    std::size_t len = chains.front().size();
    for (const auto& c : chains) len = std::min(len, c.size());
    const std::size_t half = len / 2;
    if (half < 2) return RhatResult{1.0, true};

    std::vector<std::span<const double>> pieces;
    for (const auto& c : chains) {
        pieces.emplace_back(c.data(), half);
        pieces.emplace_back(c.data() + (len - half), half);
    }
    const double n = static_cast<double>(half);
    const double m = static_cast<double>(pieces.size());
    std::vector<double> means;
    double within = 0.0;
    for (const auto& p : pieces) {
        means.push_back(mean(p));
        const double s = sd(p);
        within += s * s;
    }
    within /= m;
    const double between_var = sd(means) * sd(means);  // B / n
    if (within <= 0.0) {
        // Constant half-chains: identical values mean perfect agreement.
        return RhatResult{between_var > 0.0 ? INFINITY : 1.0, true};
    }
    const double var_plus = (n - 1.0) / n * within + between_var;
    return RhatResult{std::sqrt(var_plus / within), false};
}

}  // namespace narrinf::stats

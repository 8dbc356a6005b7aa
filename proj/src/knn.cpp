#include <cmath>
#include <limits>

#include "flowguard/models.hpp"

namespace flowguard {

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> x) const {
    const std::size_t kk = std::min(k, X.rows());
    // Sorted (distance, index) buffer of the best kk rows seen so far. Rows are
    // scanned in ascending order, so a strict comparison keeps the lower index
    // on distance ties.
    std::vector<std::pair<double, std::size_t>> best;
    best.reserve(kk + 1);
    for (std::size_t j = 0; j < X.rows(); ++j) {
        const double d = squared_distance(x, X.row(j));
        if (best.size() == kk && !(d < best.back().first)) continue;
        auto pos = best.end();
        while (pos != best.begin() && d < (pos - 1)->first) --pos;
        best.insert(pos, {d, j});
        if (best.size() > kk) best.pop_back();
    }
    std::vector<std::size_t> out;
    out.reserve(best.size());
    for (const auto& [d, j] : best) out.push_back(j);
    return out;
}

double KnnModel::probability(std::span<const double> x) const {
    const auto nn = neighbors(x);
    std::size_t positive = 0;
    for (auto j : nn) positive += static_cast<std::size_t>(y[j]);
    if (2 * positive == nn.size()) {
        // Vote tie: the single nearest neighbour decides. Its label must agree
        // with thresholding the probability at 0.5.
        return y[nn.front()] == 1 ? 0.5 : std::nextafter(0.5, 0.0);
    }
    return static_cast<double>(positive) / static_cast<double>(nn.size());
}

}  // namespace flowguard

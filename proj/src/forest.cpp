#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowguard/models.hpp"

namespace flowguard {

double ForestModel::probability(std::span<const double> x) const {
    std::size_t votes = 0;
    for (const auto& t : trees)
        if (t.evaluate(x) >= 0.5) ++votes;
    return static_cast<double>(votes) / static_cast<double>(trees.size());
}

ForestModel train_forest(const Matrix& X, std::span<const int> y, const ForestOptions& options) {
    if (X.rows() == 0) throw Error("random forest: empty training set");
    if (options.n_trees == 0) throw Error("random forest: n_trees must be positive");
    const std::size_t d = X.cols();
    GiniTreeOptions tree_options;
    tree_options.max_depth = options.max_depth;
    tree_options.min_samples_split = options.min_samples_split;
    tree_options.max_features =
        options.max_features != 0
            ? options.max_features
            : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));

    ForestModel model;
    model.trees.resize(options.n_trees);
    std::vector<std::vector<double>> importance(options.n_trees, std::vector<double>(d, 0.0));
    parallel_for(options.n_trees, [&](std::size_t t) {
        Rng rng(options.seed + t);
        std::vector<std::size_t> samples(X.rows());
        if (options.bootstrap) {
            for (auto& s : samples) s = rng.index(X.rows());
        } else {
            std::iota(samples.begin(), samples.end(), 0);
        }
        model.trees[t] = build_gini_tree(X, y, samples, tree_options, rng, &importance[t]);
    });

    model.importance.assign(d, 0.0);
    for (const auto& imp : importance) {
        const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
        if (total <= 0.0) continue;
        for (std::size_t f = 0; f < d; ++f) model.importance[f] += imp[f] / total;
    }
    for (auto& v : model.importance) v /= static_cast<double>(options.n_trees);
    return model;
}

}  // namespace flowguard

#include <algorithm>
#include <cmath>

#include "flowguard/models.hpp"

namespace flowguard {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double mean_log_loss(std::span<const double> margins, std::span<const int> y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
        const double z = margins[i];
        sum += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
    }
    return sum / static_cast<double>(margins.size());
}

}  // namespace

double BoostedModel::margin(std::span<const double> x) const {
    double s = base_score;
    for (const auto& t : trees) s += t.evaluate(x);
    return s;
}

double BoostedModel::probability(std::span<const double> x) const { return sigmoid(margin(x)); }

BoostedModel train_boosted(const Matrix& X, std::span<const int> y, const BoostingOptions& options) {
    const std::size_t n = X.rows();
    if (n == 0) throw Error("gradient boosting: empty training set");
    const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (positives == 0 || positives == n) throw Error("gradient boosting: training set must contain both classes");

    BoostedModel model;
    const double prior = static_cast<double>(positives) / static_cast<double>(n);
    model.base_score = std::log(prior / (1.0 - prior));

    NewtonTreeOptions tree_options;
    tree_options.max_depth = options.max_depth;
    tree_options.lambda = options.lambda;
    tree_options.min_child_weight = options.min_child_weight;
    tree_options.learning_rate = options.learning_rate;

    const auto sorted = presort_features(X);
    std::vector<double> margins(n, model.base_score);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    model.loss_history.push_back(mean_log_loss(margins, y));
    model.trees.reserve(options.rounds);
    for (std::size_t round = 0; round < options.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margins[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }
        auto tree = build_newton_tree(X, grad, hess, sorted, tree_options);
        for (std::size_t i = 0; i < n; ++i) margins[i] += tree.evaluate(X.row(i));
        model.trees.push_back(std::move(tree));
        model.loss_history.push_back(mean_log_loss(margins, y));
    }
    return model;
}

}  // namespace flowguard

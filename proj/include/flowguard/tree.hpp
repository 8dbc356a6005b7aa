#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowguard/common.hpp"

namespace flowguard {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf payload: positive fraction (CART) or additive weight (boosting)

    bool is_leaf() const { return feature < 0; }
};

/// Binary decision tree stored as a flat node array, root at index 0.
struct DecisionTree {
    std::vector<TreeNode> nodes;

    double evaluate(std::span<const double> x) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
};

struct GiniTreeOptions {
    std::size_t max_depth = 0;  // 0 = unlimited
    std::size_t min_samples_split = 2;
    std::size_t max_features = 0;  // features tried per split before accepting; 0 = all
};

/// CART classification tree on Gini impurity over the given (possibly
/// repeated) sample rows. `importance` accumulates the weighted impurity
/// decrease per feature when non-null.
DecisionTree build_gini_tree(const Matrix& X, std::span<const int> y, std::span<const std::size_t> samples,
                             const GiniTreeOptions& options, Rng& rng, std::vector<double>* importance = nullptr);

struct NewtonTreeOptions {
    std::size_t max_depth = 3;
    double lambda = 1.0;
    double min_child_weight = 0.0;
    double learning_rate = 0.1;  // folded into the leaf weights
};

/// Row order of every feature, ascending by value (ties by row index).
std::vector<std::vector<std::size_t>> presort_features(const Matrix& X);

/// Depth-limited regression tree on gradient/hessian statistics. Splits
/// maximise G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda); leaves
/// carry learning_rate * -G/(H+lambda).
DecisionTree build_newton_tree(const Matrix& X, std::span<const double> grad, std::span<const double> hess,
                               const std::vector<std::vector<std::size_t>>& sorted, const NewtonTreeOptions& options);

}  // namespace flowguard

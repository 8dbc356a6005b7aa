#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowguard/common.hpp"
#include "flowguard/mlp.hpp"
#include "flowguard/tree.hpp"

namespace flowguard {

// Learned state for each classifier family. These are plain values; the
// type-erased front end lives in classifiers.hpp.

struct ForestOptions {
    std::size_t n_trees = 100;
    std::size_t max_depth = 0;
    std::size_t min_samples_split = 2;
    std::size_t max_features = 0;  // 0 = floor(sqrt(d))
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::vector<double> importance;  // mean normalised impurity decrease per feature

    /// Fraction of trees voting positive.
    double probability(std::span<const double> x) const;
};

ForestModel train_forest(const Matrix& X, std::span<const int> y, const ForestOptions& options);

struct BoostingOptions {
    std::size_t rounds = 100;
    std::size_t max_depth = 3;
    double learning_rate = 0.1;
    double lambda = 1.0;
    double min_child_weight = 0.0;
};

struct BoostedModel {
    double base_score = 0.0;  // prior log-odds
    std::vector<DecisionTree> trees;
    std::vector<double> loss_history;  // mean training log-loss before round 1 and after each round

    double margin(std::span<const double> x) const;
    double probability(std::span<const double> x) const;
};

BoostedModel train_boosted(const Matrix& X, std::span<const int> y, const BoostingOptions& options);

struct KnnModel {
    Matrix X;
    std::vector<int> y;
    std::size_t k = 5;

    /// Indices of the k nearest stored rows, nearest first; distance ties go
    /// to the lower row index.
    std::vector<std::size_t> neighbors(std::span<const double> x) const;
    double probability(std::span<const double> x) const;
};

struct SvcOptions {
    double lambda = 1e-4;
    std::size_t epochs = 20;
    double eta0 = 0.01;
    std::size_t platt_folds = 3;
    std::uint64_t seed = 0;
};

struct PlattSigmoid {
    double a = 0.0;
    double b = 0.0;

    /// P(y = 1 | f) = 1 / (1 + exp(a f + b)).
    double operator()(double decision) const;
};

/// Platt's sigmoid fit with smoothed targets, solved by Newton's method with
/// backtracking.
PlattSigmoid fit_platt(std::span<const double> decisions, std::span<const int> y);

struct SvcModel {
    std::vector<double> w;
    double bias = 0.0;
    PlattSigmoid platt;

    double decision(std::span<const double> x) const;
    double probability(std::span<const double> x) const { return platt(decision(x)); }
};

/// Linear soft-margin SVM by stochastic subgradient descent on the
/// L2-regularised hinge loss, with out-of-fold Platt calibration.
SvcModel train_svc(const Matrix& X, std::span<const int> y, const SvcOptions& options);

}  // namespace flowguard

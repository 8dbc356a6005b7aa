#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "flowguard/dataset.hpp"

namespace flowguard {

/// Per-feature z-score parameters fitted on a training partition.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> scale;     // population standard deviation, 1 for constant columns
    std::vector<bool> constant;    // true where the column had zero variance

    std::size_t arity() const { return mean.size(); }
};

Scaler fit_scaler(const Dataset& train);
Dataset apply_scaler(const Scaler& scaler, const Dataset& ds);

std::string scaler_to_json(const Scaler& scaler);
Scaler scaler_from_json(std::string_view text);

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;  // minority / majority after oversampling
    std::uint64_t seed = 0;
};

/// Where a synthetic record came from: x = x[parent] + u * (x[neighbor] - x[parent]).
struct SyntheticOrigin {
    std::size_t parent = 0;
    std::size_t neighbor = 0;
    double u = 0.0;
};

struct SmoteResult {
    Dataset dataset;  // original rows first, synthetic rows appended
    int minority_label = 1;
    std::vector<SyntheticOrigin> origins;

    std::size_t added() const { return origins.size(); }
};

/// k nearest same-class neighbours of `row` among `candidates`, Euclidean,
/// ties broken by ascending row index. `row` itself is excluded.
std::vector<std::size_t> nearest_neighbors(const Matrix& X, std::size_t row,
                                           std::span<const std::size_t> candidates, std::size_t k);

SmoteResult smote_oversample(const Dataset& train, const SmoteConfig& cfg);

struct LofConfig {
    std::size_t k_neighbors = 20;
    double threshold = 1.5;
};

/// Density floor used when every reachability distance in a neighbourhood is 0.
inline constexpr double kLofEpsilon = 1e-10;

std::vector<double> lof_scores(const Matrix& X, std::size_t k);
inline std::vector<double> lof_scores(const Dataset& ds, std::size_t k) { return lof_scores(ds.X, k); }

struct OutlierResult {
    Dataset dataset;
    std::vector<std::size_t> removed;  // row indices into the input
    std::vector<double> scores;

    std::size_t removed_count() const { return removed.size(); }
};

OutlierResult remove_outliers(const Dataset& train, const LofConfig& cfg);

}  // namespace flowguard

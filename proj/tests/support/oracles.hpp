#pragma once

// Reference implementations used only by the tests. They favour the most
// direct formulation over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "flowguard/dataset.hpp"

namespace oracle {

struct Counts {
    double tp = 0, tn = 0, fp = 0, fn = 0;
};

inline Counts count(const std::vector<int>& truth, const std::vector<int>& pred) {
    Counts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1 && pred[i] == 1) c.tp += 1;
        if (truth[i] == 0 && pred[i] == 0) c.tn += 1;
        if (truth[i] == 0 && pred[i] == 1) c.fp += 1;
        if (truth[i] == 1 && pred[i] == 0) c.fn += 1;
    }
    return c;
}

inline double accuracy(const Counts& c) { return (c.tp + c.tn) / (c.tp + c.tn + c.fp + c.fn); }
inline double precision(const Counts& c) { return c.tp + c.fp == 0 ? 0.0 : c.tp / (c.tp + c.fp); }
inline double recall(const Counts& c) { return c.tp + c.fn == 0 ? 0.0 : c.tp / (c.tp + c.fn); }
inline double f1(const Counts& c) {
    const double p = precision(c), r = recall(c);
    return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

inline double kappa(const Counts& c) {
    const double n = c.tp + c.tn + c.fp + c.fn;
    const double po = (c.tp + c.tn) / n;
    const double pe = ((c.tp + c.fp) / n) * ((c.tp + c.fn) / n) + ((c.tn + c.fn) / n) * ((c.tn + c.fp) / n);
    return pe == 1.0 ? 0.0 : (po - pe) / (1 - pe);
}

inline double mcc(const Counts& c) {
    const double den = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn);
    return den == 0 ? 0.0 : (c.tp * c.tn - c.fp * c.fn) / std::sqrt(den);
}

inline double brier(const std::vector<int>& truth, const std::vector<double>& p) {
    double s = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += (p[i] - truth[i]) * (p[i] - truth[i]);
    return s / static_cast<double>(truth.size());
}

/// Probability that a random positive outscores a random negative, ties 1/2.
inline double pairwise_auc(const std::vector<int>& truth, const std::vector<double>& scores) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] != 1) continue;
        for (std::size_t j = 0; j < truth.size(); ++j) {
            if (truth[j] != 0) continue;
            pairs += 1;
            if (scores[i] > scores[j])
                wins += 1;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / pairs;
}

inline double euclid(const flowguard::Matrix& X, std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t c = 0; c < X.cols(); ++c) s += (X(a, c) - X(b, c)) * (X(a, c) - X(b, c));
    return std::sqrt(s);
}

/// Local outlier factor with every point at distance <= k-distance counted
/// as a neighbour; an all-zero reachability sum maps to density 1/eps.
inline std::vector<double> lof(const flowguard::Matrix& X, std::size_t k, double eps = 1e-10) {
    const std::size_t n = X.rows();
    std::vector<std::vector<double>> d(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i][j] = euclid(X, i, j);

    std::vector<double> kdist(n);
    std::vector<std::vector<std::size_t>> hood(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> others;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(d[i][j]);
        std::sort(others.begin(), others.end());
        kdist[i] = others[k - 1];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && d[i][j] <= kdist[i]) hood[i].push_back(j);
    }
    std::vector<double> lrd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double reach = 0;
        for (auto j : hood[i]) reach += std::max(kdist[j], d[i][j]);
        reach /= static_cast<double>(hood[i].size());
        lrd[i] = reach > 0 ? 1.0 / reach : 1.0 / eps;
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (auto j : hood[i]) s += lrd[j];
        out[i] = s / static_cast<double>(hood[i].size()) / lrd[i];
    }
    return out;
}

/// k nearest stored rows to `x`, nearest first, equal distances by index.
inline std::vector<std::size_t> knn(const flowguard::Matrix& X, const std::vector<double>& x, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        double s = 0;
        for (std::size_t c = 0; c < X.cols(); ++c) s += (X(r, c) - x[c]) * (X(r, c) - x[c]);
        all.emplace_back(s, r);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k && i < all.size(); ++i) out.push_back(all[i].second);
    return out;
}

inline flowguard::Dataset wrap(const flowguard::Matrix& X, std::vector<int> y) {
    flowguard::Dataset ds;
    for (std::size_t c = 0; c < X.cols(); ++c) ds.feature_names.push_back("x" + std::to_string(c));
    ds.X = X;
    ds.y = std::move(y);
    return ds;
}

inline flowguard::Dataset make_dataset(const std::vector<std::vector<double>>& rows, std::vector<int> y) {
    flowguard::Matrix X(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) X(r, c) = rows[r][c];
    return wrap(X, std::move(y));
}

}  // namespace oracle

#include "flowguard/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace flowguard {

Scaler fit_scaler(const Dataset& train) {
    if (train.rows() == 0) throw Error("fit_scaler: empty training set");
    const std::size_t d = train.X.cols();
    const auto n = static_cast<double>(train.rows());
    Scaler s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    s.constant.assign(d, false);
    for (std::size_t r = 0; r < train.rows(); ++r)
        for (std::size_t c = 0; c < d; ++c) s.mean[c] += train.X(r, c);
    for (auto& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < train.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = train.X(r, c) - s.mean[c];
            var[c] += dev * dev;
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        const double sd = std::sqrt(var[c] / n);
        if (sd > 0.0 && std::isfinite(sd)) {
            s.scale[c] = sd;
        } else {
            s.constant[c] = true;
        }
    }
    return s;
}

Dataset apply_scaler(const Scaler& scaler, const Dataset& ds) {
    if (ds.X.cols() != scaler.arity() && ds.rows() > 0)
        throw Error("apply_scaler: dataset has " + std::to_string(ds.X.cols()) + " features, scaler expects " +
                    std::to_string(scaler.arity()));
    Dataset out = ds;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.X.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - scaler.mean[c]) / scaler.scale[c];
    }
    return out;
}

std::string scaler_to_json(const Scaler& scaler) {
    nlohmann::ordered_json doc;
    doc["format"] = "flowguard-scaler";
    doc["version"] = 1;
    doc["mean"] = scaler.mean;
    doc["scale"] = scaler.scale;
    doc["constant"] = scaler.constant;
    return doc.dump(2) + "\n";
}

Scaler scaler_from_json(std::string_view text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format") != "flowguard-scaler") throw Error("scaler: unexpected format tag");
        Scaler s;
        s.mean = doc.at("mean").get<std::vector<double>>();
        s.scale = doc.at("scale").get<std::vector<double>>();
        s.constant = doc.at("constant").get<std::vector<bool>>();
        if (s.scale.size() != s.mean.size() || s.constant.size() != s.mean.size())
            throw Error("scaler: inconsistent arity");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("scaler: ") + e.what());
    }
}

std::vector<std::size_t> nearest_neighbors(const Matrix& X, std::size_t row, std::span<const std::size_t> candidates,
                                           std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(candidates.size());
    const auto x = X.row(row);
    for (auto c : candidates)
        if (c != row) dist.emplace_back(squared_distance(x, X.row(c)), c);
    k = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

SmoteResult smote_oversample(const Dataset& train, const SmoteConfig& cfg) {
    if (cfg.k_neighbors == 0) throw Error("smote: k_neighbors must be positive");
    if (!(cfg.target_ratio > 0.0)) throw Error("smote: target_ratio must be positive");
    const auto dist = label_distribution(train);
    if (dist.benign_count == 0 || dist.ddos_count == 0) throw Error("smote: both classes must be present");

    SmoteResult result;
    result.minority_label = dist.ddos_count <= dist.benign_count ? 1 : 0;
    const std::size_t minority_count = result.minority_label == 1 ? dist.ddos_count : dist.benign_count;
    const std::size_t majority_count = dist.total - minority_count;
    if (cfg.k_neighbors >= minority_count)
        throw Error("smote: k_neighbors (" + std::to_string(cfg.k_neighbors) + ") must be below the minority count (" +
                    std::to_string(minority_count) + ")");

    const auto target = static_cast<std::size_t>(std::llround(cfg.target_ratio * static_cast<double>(majority_count)));
    const std::size_t n_new = target > minority_count ? target - minority_count : 0;

    result.dataset = train;
    if (n_new == 0) return result;

    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < train.rows(); ++i)
        if (train.y[i] == result.minority_label) minority.push_back(i);

    const std::size_t parents = std::min(n_new, minority.size());
    std::vector<std::vector<std::size_t>> neighbors(parents);
    parallel_for(parents, [&](std::size_t p) {
        neighbors[p] = nearest_neighbors(train.X, minority[p], minority, cfg.k_neighbors);
    });

    Rng rng(cfg.seed);
    const std::size_t d = train.X.cols();
    std::vector<double> x(d);
    result.origins.reserve(n_new);
    for (std::size_t s = 0; s < n_new; ++s) {
        const std::size_t p = s % minority.size();
        const std::size_t parent = minority[p];
        const std::size_t nn = neighbors[p][rng.index(neighbors[p].size())];
        const double u = rng.uniform();
        const auto a = train.X.row(parent);
        const auto b = train.X.row(nn);
        for (std::size_t c = 0; c < d; ++c) x[c] = a[c] + u * (b[c] - a[c]);
        result.dataset.X.append_row(x);
        result.dataset.y.push_back(result.minority_label);
        result.origins.push_back({parent, nn, u});
    }
    return result;
}

std::vector<double> lof_scores(const Matrix& X, std::size_t k) {
    const std::size_t n = X.rows();
    if (k == 0 || k >= n) throw Error("lof: k must satisfy 0 < k < rows");

    // k-distance neighbourhoods; ties at the k-th distance are all included.
    std::vector<double> k_distance(n);
    std::vector<std::vector<std::pair<std::size_t, double>>> hood(n);
    parallel_for(n, [&](std::size_t i) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(n - 1);
        const auto xi = X.row(i);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) dist.emplace_back(std::sqrt(squared_distance(xi, X.row(j))), j);
        std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
        const double kd = dist[k - 1].first;
        k_distance[i] = kd;
        auto& mine = hood[i];
        for (const auto& [d, j] : dist)
            if (d <= kd) mine.emplace_back(j, d);
        std::sort(mine.begin(), mine.end());
    });

    std::vector<double> lrd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& [j, d] : hood[i]) sum += std::max(k_distance[j], d);
        const double mean_reach = sum / static_cast<double>(hood[i].size());
        lrd[i] = mean_reach > 0.0 ? 1.0 / mean_reach : 1.0 / kLofEpsilon;
    }

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& [j, d] : hood[i]) sum += lrd[j] / lrd[i];
        scores[i] = sum / static_cast<double>(hood[i].size());
    }
    return scores;
}

OutlierResult remove_outliers(const Dataset& train, const LofConfig& cfg) {
    if (!(cfg.threshold > 1.0)) throw Error("remove_outliers: threshold must exceed 1");
    OutlierResult result;
    result.scores = lof_scores(train.X, cfg.k_neighbors);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < train.rows(); ++i) {
        if (result.scores[i] > cfg.threshold)
            result.removed.push_back(i);
        else
            keep.push_back(i);
    }
    const auto before = label_distribution(train);
    result.dataset = train.subset(keep);
    const auto after = label_distribution(result.dataset);
    if ((before.benign_count > 0 && after.benign_count == 0) || (before.ddos_count > 0 && after.ddos_count == 0))
        throw Error("remove_outliers: removal would empty a class");
    return result;
}

}  // namespace flowguard

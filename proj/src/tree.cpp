#include "flowguard/tree.hpp"

#include <algorithm>
#include <numeric>

namespace flowguard {

double DecisionTree::evaluate(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

std::size_t DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

double midpoint(double a, double b) {
    const double m = a + (b - a) / 2.0;
    return m < b ? m : a;
}

// n * gini for a node with `pos` positives out of `n`.
double weighted_gini(double pos, double n) { return n > 0.0 ? 2.0 * pos * (n - pos) / n : 0.0; }

struct GiniSplit {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double child_impurity = 0.0;
};

}  // namespace

DecisionTree build_gini_tree(const Matrix& X, std::span<const int> y, std::span<const std::size_t> samples,
                             const GiniTreeOptions& options, Rng& rng, std::vector<double>* importance) {
    const std::size_t d = X.cols();
    const std::size_t mtry = options.max_features == 0 ? d : std::min(options.max_features, d);
    std::vector<std::size_t> idx(samples.begin(), samples.end());
    DecisionTree tree;
    if (idx.empty()) {
        tree.nodes.push_back(TreeNode{});
        return tree;
    }

    struct Work {
        std::size_t node;
        std::size_t begin;
        std::size_t end;
        std::size_t depth;
    };
    std::vector<Work> stack{{0, 0, idx.size(), 0}};
    tree.nodes.emplace_back();

    std::vector<std::size_t> features(d);
    std::vector<std::pair<double, int>> values;
    while (!stack.empty()) {
        const Work w = stack.back();
        stack.pop_back();
        const std::size_t n = w.end - w.begin;
        std::size_t pos = 0;
        for (std::size_t i = w.begin; i < w.end; ++i) pos += static_cast<std::size_t>(y[idx[i]]);
        tree.nodes[w.node].value = static_cast<double>(pos) / static_cast<double>(n);

        const bool pure = pos == 0 || pos == n;
        const bool too_deep = options.max_depth != 0 && w.depth >= options.max_depth;
        if (pure || too_deep || n < options.min_samples_split) continue;

        const double parent_impurity = weighted_gini(static_cast<double>(pos), static_cast<double>(n));
        GiniSplit best;
        std::iota(features.begin(), features.end(), 0);
        for (std::size_t tried = 0; tried < d; ++tried) {
            if (tried >= mtry && best.found) break;
            std::swap(features[tried], features[tried + rng.index(d - tried)]);
            const std::size_t f = features[tried];

            values.clear();
            for (std::size_t i = w.begin; i < w.end; ++i) values.emplace_back(X(idx[i], f), y[idx[i]]);
            std::sort(values.begin(), values.end());
            if (values.front().first == values.back().first) continue;

            double left_pos = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_pos += values[i].second;
                if (values[i].first == values[i + 1].first) continue;
                const auto n_left = static_cast<double>(i + 1);
                const auto n_right = static_cast<double>(n - i - 1);
                const double impurity = weighted_gini(left_pos, n_left) +
                                        weighted_gini(static_cast<double>(pos) - left_pos, n_right);
                if (!best.found || impurity < best.child_impurity) {
                    best = {true, f, midpoint(values[i].first, values[i + 1].first), impurity};
                }
            }
        }
        if (!best.found) continue;

        auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(w.begin),
                                  idx.begin() + static_cast<std::ptrdiff_t>(w.end),
                                  [&](std::size_t r) { return X(r, best.feature) <= best.threshold; });
        const auto split = static_cast<std::size_t>(mid - idx.begin());
        if (importance) (*importance)[best.feature] += parent_impurity - best.child_impurity;

        const auto left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[w.node];
        node.feature = static_cast<int>(best.feature);
        node.threshold = best.threshold;
        node.left = left;
        node.right = left + 1;
        stack.push_back({static_cast<std::size_t>(left + 1), split, w.end, w.depth + 1});
        stack.push_back({static_cast<std::size_t>(left), w.begin, split, w.depth + 1});
    }
    return tree;
}

std::vector<std::vector<std::size_t>> presort_features(const Matrix& X) {
    std::vector<std::vector<std::size_t>> sorted(X.cols());
    parallel_for(X.cols(), [&](std::size_t f) {
        auto& order = sorted[f];
        order.resize(X.rows());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return X(a, f) < X(b, f); });
    });
    return sorted;
}

DecisionTree build_newton_tree(const Matrix& X, std::span<const double> grad, std::span<const double> hess,
                               const std::vector<std::vector<std::size_t>>& sorted,
                               const NewtonTreeOptions& options) {
    const std::size_t n = X.rows();
    const double lambda = options.lambda;
    auto score = [lambda](double g, double h) { return g * g / (h + lambda); };

    struct NodeStats {
        double g = 0.0;
        double h = 0.0;
    };
    struct Candidate {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double gain = 0.0;
    };

    DecisionTree tree;
    tree.nodes.emplace_back();
    std::vector<int> node_of(n, 0);
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
        stats[0].g += grad[i];
        stats[0].h += hess[i];
    }
    std::vector<std::size_t> frontier{0};

    for (std::size_t level = 0; level < options.max_depth && !frontier.empty(); ++level) {
        // Scratch slots are indexed by node id; only frontier nodes are touched.
        std::vector<Candidate> best(tree.nodes.size());
        std::vector<NodeStats> left(tree.nodes.size());
        std::vector<double> last(tree.nodes.size());
        std::vector<bool> seen(tree.nodes.size());
        std::vector<bool> active(tree.nodes.size(), false);
        for (auto v : frontier) active[v] = true;

        for (std::size_t f = 0; f < X.cols(); ++f) {
            for (auto v : frontier) {
                left[v] = {};
                seen[v] = false;
            }
            for (std::size_t i : sorted[f]) {
                const auto v = static_cast<std::size_t>(node_of[i]);
                if (!active[v]) continue;
                const double x = X(i, f);
                if (seen[v] && x > last[v]) {
                    const NodeStats& total = stats[v];
                    const double gl = left[v].g;
                    const double hl = left[v].h;
                    const double gr = total.g - gl;
                    const double hr = total.h - hl;
                    if (hl >= options.min_child_weight && hr >= options.min_child_weight) {
                        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(total.g, total.h));
                        if (gain > 1e-12 && (!best[v].found || gain > best[v].gain))
                            best[v] = {true, f, midpoint(last[v], x), gain};
                    }
                }
                left[v].g += grad[i];
                left[v].h += hess[i];
                last[v] = x;
                seen[v] = true;
            }
        }

        std::vector<std::size_t> next;
        for (auto v : frontier) {
            if (!best[v].found) continue;
            const auto l = tree.nodes.size();
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stats.resize(tree.nodes.size());
            auto& node = tree.nodes[v];
            node.feature = static_cast<int>(best[v].feature);
            node.threshold = best[v].threshold;
            node.left = static_cast<int>(l);
            node.right = static_cast<int>(l + 1);
            next.push_back(l);
            next.push_back(l + 1);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& node = tree.nodes[static_cast<std::size_t>(node_of[i])];
            if (node.is_leaf() || !active[static_cast<std::size_t>(node_of[i])]) continue;
            node_of[i] = X(i, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
            auto& s = stats[static_cast<std::size_t>(node_of[i])];
            s.g += grad[i];
            s.h += hess[i];
        }
        frontier = std::move(next);
    }

    for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
        if (tree.nodes[v].is_leaf())
            tree.nodes[v].value = -options.learning_rate * stats[v].g / (stats[v].h + lambda);
    }
    return tree;
}

}  // namespace flowguard

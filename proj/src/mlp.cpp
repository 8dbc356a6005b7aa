#include "flowguard/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowguard {

namespace {

// Cross-entropy of a sigmoid output written in terms of the logit.
double logit_loss(double z, int y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

MlpNetwork::MlpNetwork(std::vector<std::size_t> layers, std::uint64_t seed) : layers_(std::move(layers)) {
    if (layers_.size() < 2 || layers_.back() != 1) throw Error("mlp: layer sizes must end with a single output");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        offsets_.push_back(total);
        total += layers_[l + 1] * layers_[l] + layers_[l + 1];
    }
    params_.assign(total, 0.0);
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layers_[l] + layers_[l + 1]));
        const std::size_t begin = weight_offset(l);
        const std::size_t end = bias_offset(l);
        for (std::size_t i = begin; i < end; ++i) params_[i] = (2.0 * rng.uniform() - 1.0) * limit;
    }
}

MlpNetwork MlpNetwork::zeros(std::vector<std::size_t> layers) {
    MlpNetwork net(std::move(layers), 0);
    std::fill(net.params_.begin(), net.params_.end(), 0.0);
    return net;
}

void MlpNetwork::forward(std::span<const double> x, std::vector<std::vector<double>>& act) const {
    const std::size_t n_layers = layers_.size();
    act.resize(n_layers);
    act[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        const std::size_t in = layers_[l];
        const std::size_t out = layers_[l + 1];
        const double* W = params_.data() + weight_offset(l);
        const double* b = params_.data() + bias_offset(l);
        const double* a = act[l].data();
        auto& z = act[l + 1];
        z.resize(out);
        const bool hidden = l + 2 < n_layers;
        for (std::size_t o = 0; o < out; ++o) {
            double s = b[o];
            const double* w = W + o * in;
            for (std::size_t i = 0; i < in; ++i) s += w[i] * a[i];
            z[o] = hidden ? std::max(s, 0.0) : s;
        }
    }
}

double MlpNetwork::logit(std::span<const double> x) const {
    if (x.size() != inputs()) throw Error("mlp: input arity mismatch");
    std::vector<std::vector<double>> act;
    forward(x, act);
    return act.back()[0];
}

double MlpNetwork::probability(std::span<const double> x) const { return sigmoid(logit(x)); }

double MlpNetwork::loss(const Matrix& X, std::span<const int> y) const {
    std::vector<std::vector<double>> act;
    double sum = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        forward(X.row(r), act);
        sum += logit_loss(act.back()[0], y[r]);
    }
    return sum / static_cast<double>(X.rows());
}

double MlpNetwork::gradient(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows,
                            std::vector<double>& grad) const {
    grad.assign(params_.size(), 0.0);
    const std::size_t n_layers = layers_.size();
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    std::vector<std::vector<double>> act;
    std::vector<double> delta;
    std::vector<double> prev;
    double loss_sum = 0.0;
    for (auto r : rows) {
        forward(X.row(r), act);
        const double z = act.back()[0];
        loss_sum += logit_loss(z, y[r]);
        delta.assign(1, (sigmoid(z) - y[r]) * inv_n);
        for (std::size_t l = n_layers - 1; l-- > 0;) {
            const std::size_t in = layers_[l];
            const std::size_t out = layers_[l + 1];
            const double* W = params_.data() + weight_offset(l);
            double* gW = grad.data() + weight_offset(l);
            double* gb = grad.data() + bias_offset(l);
            const double* a = act[l].data();
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                gb[o] += d;
                double* row = gW + o * in;
                for (std::size_t i = 0; i < in; ++i) row[i] += d * a[i];
            }
            if (l == 0) break;
            prev.assign(in, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                const double* w = W + o * in;
                for (std::size_t i = 0; i < in; ++i) prev[i] += w[i] * d;
            }
            // act[l] holds post-ReLU values, positive exactly where the unit is active.
            for (std::size_t i = 0; i < in; ++i)
                if (a[i] <= 0.0) prev[i] = 0.0;
            delta.swap(prev);
        }
    }
    return loss_sum * inv_n;
}

std::vector<double> MlpNetwork::gradient(const Matrix& X, std::span<const int> y) const {
    std::vector<std::size_t> rows(X.rows());
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> grad;
    gradient(X, y, rows, grad);
    return grad;
}

MlpNetwork train_mlp(const Matrix& X, std::span<const int> y, const MlpTrainOptions& options) {
    if (X.rows() == 0) throw Error("mlp: empty training set");
    std::vector<std::size_t> layers{X.cols()};
    layers.insert(layers.end(), options.hidden.begin(), options.hidden.end());
    layers.push_back(1);
    MlpNetwork net(layers, options.seed);

    auto& params = net.parameters();
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> grad;
    std::vector<std::size_t> order(X.rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            net.gradient(X, y, std::span<const std::size_t>(order).subspan(start, stop - start), grad);
            for (std::size_t p = 0; p < params.size(); ++p) {
                velocity[p] = options.momentum * velocity[p] - options.learning_rate * grad[p];
                params[p] += velocity[p];
            }
        }
    }
    return net;
}

double relative_error(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

double gradient_check(const MlpNetwork& net, const Matrix& X, std::span<const int> y, double h) {
    const auto analytic = net.gradient(X, y);
    MlpNetwork probe = net;
    auto& params = probe.parameters();
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const double saved = params[p];
        params[p] = saved + h;
        const double up = probe.loss(X, y);
        params[p] = saved - h;
        const double down = probe.loss(X, y);
        params[p] = saved;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, relative_error(analytic[p], numeric));
    }
    return worst;
}

}  // namespace flowguard

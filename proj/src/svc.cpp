#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowguard/models.hpp"

namespace flowguard {

namespace {

struct LinearModel {
    std::vector<double> w;
    double bias = 0.0;
};

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Stochastic subgradient descent on lambda/2 |w|^2 + mean hinge loss. The
// step size decays as eta0 / (1 + eta0 * lambda * t); the returned weights
// are the average of the iterates over the final epoch.
LinearModel fit_hinge(const Matrix& X, std::span<const int> y, std::vector<std::size_t> rows,
                      const SvcOptions& options, std::uint64_t seed) {
    const std::size_t d = X.cols();
    LinearModel m{std::vector<double>(d, 0.0), 0.0};
    LinearModel avg{std::vector<double>(d, 0.0), 0.0};
    Rng rng(seed);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(rows);
        const bool last = epoch + 1 == options.epochs;
        for (auto r : rows) {
            ++t;
            const double eta = options.eta0 / (1.0 + options.eta0 * options.lambda * static_cast<double>(t));
            const auto x = X.row(r);
            const double label = y[r] == 1 ? 1.0 : -1.0;
            const double margin = label * (dot(m.w, x) + m.bias);
            const double shrink = 1.0 - eta * options.lambda;
            for (auto& v : m.w) v *= shrink;
            if (margin < 1.0) {
                for (std::size_t c = 0; c < d; ++c) m.w[c] += eta * label * x[c];
                m.bias += eta * label;
            }
            if (last) {
                for (std::size_t c = 0; c < d; ++c) avg.w[c] += m.w[c];
                avg.bias += m.bias;
            }
        }
    }
    if (!rows.empty() && options.epochs > 0) {
        const auto n = static_cast<double>(rows.size());
        for (auto& v : avg.w) v /= n;
        avg.bias /= n;
    }
    return avg;
}

double platt_objective(std::span<const double> f, std::span<const double> t, double a, double b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double z = f[i] * a + b;
        sum += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return sum;
}

}  // namespace

double PlattSigmoid::operator()(double decision) const {
    const double z = a * decision + b;
    return z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

PlattSigmoid fit_platt(std::span<const double> f, std::span<const int> y) {
    const auto pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    const double neg = static_cast<double>(y.size()) - pos;
    const double hi = (pos + 1.0) / (pos + 2.0);
    const double lo = 1.0 / (neg + 2.0);
    std::vector<double> t(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] == 1 ? hi : lo;

    constexpr int max_iter = 100;
    constexpr double min_step = 1e-10;
    constexpr double sigma = 1e-12;
    constexpr double eps = 1e-5;

    PlattSigmoid s{0.0, std::log((neg + 1.0) / (pos + 1.0))};
    double fval = platt_objective(f, t, s.a, s.b);
    for (int iter = 0; iter < max_iter; ++iter) {
        double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double p = s(f[i]);
            const double q = 1.0 - p;
            const double d2 = p * q;
            h11 += f[i] * f[i] * d2;
            h22 += d2;
            h21 += f[i] * d2;
            const double d1 = t[i] - p;
            g1 += f[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < eps && std::abs(g2) < eps) break;

        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= min_step) {
            const double na = s.a + step * da;
            const double nb = s.b + step * db;
            const double nf = platt_objective(f, t, na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                s = {na, nb};
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if (step < min_step) break;
    }
    return s;
}

double SvcModel::decision(std::span<const double> x) const { return dot(w, x) + bias; }

SvcModel train_svc(const Matrix& X, std::span<const int> y, const SvcOptions& options) {
    const std::size_t n = X.rows();
    if (n == 0) throw Error("svc: empty training set");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < n; ++i) by_class[y[i]].push_back(i);
    if (by_class[0].empty() || by_class[1].empty()) throw Error("svc: training set must contain both classes");

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const auto full = fit_hinge(X, y, all, options, options.seed);

    // Out-of-fold decision values for the calibration fit.
    std::vector<double> decisions(n);
    const std::size_t folds = options.platt_folds;
    if (folds >= 2 && by_class[0].size() >= folds && by_class[1].size() >= folds) {
        std::vector<std::size_t> fold_of(n);
        Rng rng(options.seed ^ 0x5bd1e995ULL);
        for (auto& members : by_class) {
            rng.shuffle(members);
            for (std::size_t i = 0; i < members.size(); ++i) fold_of[members[i]] = i % folds;
        }
        for (std::size_t f = 0; f < folds; ++f) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < n; ++i)
                if (fold_of[i] != f) rows.push_back(i);
            const auto part = fit_hinge(X, y, rows, options, options.seed + f + 1);
            for (std::size_t i = 0; i < n; ++i)
                if (fold_of[i] == f) decisions[i] = dot(part.w, X.row(i)) + part.bias;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) decisions[i] = dot(full.w, X.row(i)) + full.bias;
    }

    SvcModel model;
    model.w = full.w;
    model.bias = full.bias;
    model.platt = fit_platt(decisions, y);
    return model;
}

}  // namespace flowguard

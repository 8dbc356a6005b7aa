#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowguard/common.hpp"

namespace flowguard {

/// Fully connected binary classifier: ReLU hidden layers, one sigmoid output,
/// mean binary cross-entropy loss. All weights and biases live in one flat
/// parameter vector, layer by layer (weights row-major [out x in], then bias).
class MlpNetwork {
public:
    MlpNetwork() = default;
    /// `layers` = {inputs, hidden..., 1}. Weights are Glorot-uniform under
    /// `seed`; biases start at zero.
    MlpNetwork(std::vector<std::size_t> layers, std::uint64_t seed);

    static MlpNetwork zeros(std::vector<std::size_t> layers);

    const std::vector<std::size_t>& layers() const { return layers_; }
    std::size_t inputs() const { return layers_.front(); }
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    /// Output logit for one input row.
    double logit(std::span<const double> x) const;
    double probability(std::span<const double> x) const;

    /// Mean cross-entropy over the given rows.
    double loss(const Matrix& X, std::span<const int> y) const;

    /// Gradient of the mean loss over `rows` with respect to parameters();
    /// returns the mean loss over the same rows.
    double gradient(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows,
                    std::vector<double>& grad) const;
    std::vector<double> gradient(const Matrix& X, std::span<const int> y) const;

private:
    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const {
        return offsets_[layer] + layers_[layer + 1] * layers_[layer];
    }
    void forward(std::span<const double> x, std::vector<std::vector<double>>& activations) const;

    std::vector<std::size_t> layers_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

struct MlpTrainOptions {
    std::vector<std::size_t> hidden{64, 32};
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
};

MlpNetwork train_mlp(const Matrix& X, std::span<const int> y, const MlpTrainOptions& options);

/// Largest relative discrepancy between the backpropagated gradient and a
/// central finite difference with step `h`, over every parameter.
double gradient_check(const MlpNetwork& net, const Matrix& X, std::span<const int> y, double h = 1e-5);

/// Relative error |a - b| / max(|a|, |b|), with a floor on the denominator
/// so that two vanishing gradients compare as equal.
double relative_error(double a, double b);

}  // namespace flowguard

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowguard/dataset.hpp"
#include "flowguard/models.hpp"

namespace flowguard {

/// Classifier families, declared in report order.
enum class ModelKind { RF, SVC, KNN, MLP, GBT };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::RF, ModelKind::SVC, ModelKind::KNN, ModelKind::MLP,
                                               ModelKind::GBT};

std::string_view kind_name(ModelKind kind);
/// Accepts the canonical names (case-insensitive) and "XGB" for GBT.
ModelKind parse_kind(std::string_view name);

using Hyperparameters = std::map<std::string, double>;

struct ModelSpec {
    ModelKind kind = ModelKind::RF;
    Hyperparameters params;
    std::uint64_t seed = 0;
};

/// Every recognised hyperparameter with its default value.
Hyperparameters default_hyperparameters(ModelKind kind);

/// Spec with defaults filled in and `overrides` applied; validates the result.
ModelSpec make_spec(ModelKind kind, const Hyperparameters& overrides = {}, std::uint64_t seed = 0);

/// Throws Error on an unknown key or an out-of-range value.
void validate_spec(const ModelSpec& spec);

struct PredictionSet {
    std::vector<int> labels;
    std::vector<double> probabilities;  // positive class; label = probability >= 0.5
};

/// Constant-probability fallback for single-class training sets (RF, KNN).
struct ConstantModel {
    double probability = 0.0;
};

using ModelState = std::variant<ForestModel, BoostedModel, KnnModel, MlpNetwork, SvcModel, ConstantModel>;

/// Immutable trained classifier; safe to share across threads.
class TrainedModel {
public:
    TrainedModel(ModelSpec spec, std::size_t arity, ModelState state)
        : spec_(std::move(spec)), arity_(arity), state_(std::move(state)) {}

    const ModelSpec& spec() const { return spec_; }
    std::size_t arity() const { return arity_; }
    const ModelState& state() const { return state_; }

    double probability(std::span<const double> x) const;
    PredictionSet predict(const Matrix& X) const;
    PredictionSet predict(const Dataset& ds) const { return predict(ds.X); }

private:
    ModelSpec spec_;
    std::size_t arity_;
    ModelState state_;
};

TrainedModel train(const ModelSpec& spec, const Dataset& train_set);
inline PredictionSet predict(const TrainedModel& model, const Dataset& ds) { return model.predict(ds); }

/// Builds the network `spec` would start training from and checks its
/// backpropagated gradient on `tiny` (<= 10 rows, <= 5 features).
double gradient_check(const ModelSpec& mlp_spec, const Dataset& tiny, double h = 1e-5);

void save_model(const TrainedModel& model, std::ostream& out);
TrainedModel load_model(std::istream& in);

}  // namespace flowguard

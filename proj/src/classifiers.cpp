#include "flowguard/classifiers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <iterator>
#include <ostream>

#include <json.hpp>

namespace flowguard {

namespace {

using json = nlohmann::ordered_json;

constexpr int kModelFormatVersion = 1;

struct ParamRule {
    double fallback;
    double min;
    double max;
    bool integer;
};

const std::map<std::string, ParamRule>& rules_for(ModelKind kind) {
    constexpr double inf = HUGE_VAL;
    static const std::map<ModelKind, std::map<std::string, ParamRule>> rules{
        {ModelKind::RF,
         {{"n_trees", {100, 1, 1e6, true}},
          {"max_depth", {0, 0, 1e6, true}},
          {"min_samples_split", {2, 2, 1e9, true}},
          {"max_features", {0, 0, 1e6, true}},
          {"bootstrap", {1, 0, 1, true}}}},
        {ModelKind::GBT,
         {{"rounds", {100, 1, 1e6, true}},
          {"max_depth", {3, 1, 30, true}},
          {"learning_rate", {0.1, 1e-12, 1, false}},
          {"lambda", {1.0, 0, inf, false}},
          {"min_child_weight", {0, 0, inf, false}}}},
        {ModelKind::KNN, {{"k", {5, 1, 1e6, true}}}},
        {ModelKind::MLP,
         {{"hidden1", {64, 1, 1e5, true}},
          {"hidden2", {32, 0, 1e5, true}},
          {"learning_rate", {0.01, 1e-12, 10, false}},
          {"momentum", {0.9, 0, 0.999999, false}},
          {"batch_size", {64, 1, 1e9, true}},
          {"epochs", {50, 0, 1e6, true}}}},
        {ModelKind::SVC,
         {{"lambda", {1e-4, 1e-12, inf, false}},
          {"epochs", {20, 1, 1e6, true}},
          {"eta0", {0.01, 1e-12, inf, false}},
          {"platt_folds", {3, 0, 100, true}}}},
    };
    return rules.at(kind);
}

std::size_t as_size(const Hyperparameters& p, const char* key) { return static_cast<std::size_t>(p.at(key)); }

std::vector<std::size_t> mlp_hidden(const Hyperparameters& p) {
    std::vector<std::size_t> hidden{as_size(p, "hidden1")};
    if (as_size(p, "hidden2") > 0) hidden.push_back(as_size(p, "hidden2"));
    return hidden;
}

json tree_to_json(const DecisionTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    return nodes;
}

DecisionTree tree_from_json(const json& j) {
    DecisionTree tree;
    for (const auto& n : j)
        tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                              n.at(4).get<double>()});
    const auto count = static_cast<int>(tree.nodes.size());
    if (count == 0) throw Error("load_model: empty tree");
    for (const auto& n : tree.nodes)
        if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
            throw Error("load_model: corrupt tree node");
    return tree;
}

json trees_to_json(const std::vector<DecisionTree>& trees) {
    json out = json::array();
    for (const auto& t : trees) out.push_back(tree_to_json(t));
    return out;
}

std::vector<DecisionTree> trees_from_json(const json& j) {
    std::vector<DecisionTree> out;
    for (const auto& t : j) out.push_back(tree_from_json(t));
    return out;
}

json state_to_json(const ModelState& state) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ForestModel>) {
                return {{"trees", trees_to_json(s.trees)}, {"importance", s.importance}};
            } else if constexpr (std::is_same_v<T, BoostedModel>) {
                return {{"base_score", s.base_score},
                        {"trees", trees_to_json(s.trees)},
                        {"loss_history", s.loss_history}};
            } else if constexpr (std::is_same_v<T, KnnModel>) {
                return {{"k", s.k}, {"rows", s.X.rows()}, {"cols", s.X.cols()}, {"X", s.X.data()}, {"y", s.y}};
            } else if constexpr (std::is_same_v<T, MlpNetwork>) {
                return {{"layers", s.layers()}, {"parameters", s.parameters()}};
            } else if constexpr (std::is_same_v<T, SvcModel>) {
                return {{"w", s.w}, {"bias", s.bias}, {"platt_a", s.platt.a}, {"platt_b", s.platt.b}};
            } else {
                return {{"constant_probability", s.probability}};
            }
        },
        state);
}

}  // namespace

std::string_view kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::RF: return "RF";
        case ModelKind::SVC: return "SVC";
        case ModelKind::KNN: return "KNN";
        case ModelKind::MLP: return "MLP";
        case ModelKind::GBT: return "GBT";
    }
    return "?";
}

ModelKind parse_kind(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "XGB") return ModelKind::GBT;
    for (auto k : kAllModelKinds)
        if (kind_name(k) == upper) return k;
    throw Error("unknown model kind '" + std::string(name) + "'");
}

Hyperparameters default_hyperparameters(ModelKind kind) {
    Hyperparameters p;
    for (const auto& [key, rule] : rules_for(kind)) p[key] = rule.fallback;
    return p;
}

void validate_spec(const ModelSpec& spec) {
    const auto& rules = rules_for(spec.kind);
    for (const auto& [key, value] : spec.params) {
        const auto it = rules.find(key);
        const std::string where = std::string(kind_name(spec.kind)) + " hyperparameter '" + key + "'";
        if (it == rules.end()) throw Error("unknown " + where);
        const auto& rule = it->second;
        if (!std::isfinite(value) && !(std::isinf(value) && value > 0 && std::isinf(rule.max)))
            throw Error(where + " must be finite");
        if (value < rule.min || value > rule.max) throw Error(where + " out of range");
        if (rule.integer && value != std::floor(value)) throw Error(where + " must be an integer");
    }
    for (const auto& [key, rule] : rules)
        if (!spec.params.contains(key)) throw Error(std::string(kind_name(spec.kind)) + " missing hyperparameter '" + key + "'");
}

ModelSpec make_spec(ModelKind kind, const Hyperparameters& overrides, std::uint64_t seed) {
    ModelSpec spec{kind, default_hyperparameters(kind), seed};
    for (const auto& [key, value] : overrides) spec.params[key] = value;
    validate_spec(spec);
    return spec;
}

double TrainedModel::probability(std::span<const double> x) const {
    if (x.size() != arity_)
        throw Error("predict: input has " + std::to_string(x.size()) + " features, model expects " +
                    std::to_string(arity_));
    const double p = std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantModel>)
                return s.probability;
            else
                return s.probability(x);
        },
        state_);
    return std::clamp(p, 0.0, 1.0);
}

PredictionSet TrainedModel::predict(const Matrix& X) const {
    if (X.rows() > 0 && X.cols() != arity_)
        throw Error("predict: input has " + std::to_string(X.cols()) + " features, model expects " +
                    std::to_string(arity_));
    PredictionSet out;
    out.probabilities.resize(X.rows());
    out.labels.resize(X.rows());
    constexpr std::size_t chunk = 256;
    parallel_for((X.rows() + chunk - 1) / chunk, [&](std::size_t c) {
        const std::size_t end = std::min(X.rows(), (c + 1) * chunk);
        for (std::size_t r = c * chunk; r < end; ++r) {
            out.probabilities[r] = probability(X.row(r));
            out.labels[r] = out.probabilities[r] >= 0.5 ? 1 : 0;
        }
    });
    return out;
}

TrainedModel train(const ModelSpec& spec, const Dataset& train_set) {
    validate_spec(spec);
    if (train_set.rows() == 0) throw Error("train: empty training set");
    const auto& X = train_set.X;
    const auto& y = train_set.y;
    const auto& p = spec.params;
    const auto dist = label_distribution(train_set);
    const bool single_class = dist.benign_count == 0 || dist.ddos_count == 0;
    const double only_class = dist.ddos_count > 0 ? 1.0 : 0.0;

    auto make = [&](ModelState state) { return TrainedModel(spec, X.cols(), std::move(state)); };
    switch (spec.kind) {
        case ModelKind::RF: {
            if (single_class) return make(ConstantModel{only_class});
            ForestOptions o;
            o.n_trees = as_size(p, "n_trees");
            o.max_depth = as_size(p, "max_depth");
            o.min_samples_split = as_size(p, "min_samples_split");
            o.max_features = as_size(p, "max_features");
            o.bootstrap = p.at("bootstrap") != 0.0;
            o.seed = spec.seed;
            return make(train_forest(X, y, o));
        }
        case ModelKind::GBT: {
            BoostingOptions o;
            o.rounds = as_size(p, "rounds");
            o.max_depth = as_size(p, "max_depth");
            o.learning_rate = p.at("learning_rate");
            o.lambda = p.at("lambda");
            o.min_child_weight = p.at("min_child_weight");
            return make(train_boosted(X, y, o));
        }
        case ModelKind::KNN: {
            if (single_class) return make(ConstantModel{only_class});
            return make(KnnModel{X, y, as_size(p, "k")});
        }
        case ModelKind::MLP: {
            if (single_class) throw Error("mlp: training set must contain both classes");
            MlpTrainOptions o;
            o.hidden = mlp_hidden(p);
            o.learning_rate = p.at("learning_rate");
            o.momentum = p.at("momentum");
            o.batch_size = as_size(p, "batch_size");
            o.epochs = as_size(p, "epochs");
            o.seed = spec.seed;
            return make(train_mlp(X, y, o));
        }
        case ModelKind::SVC: {
            SvcOptions o;
            o.lambda = p.at("lambda");
            o.epochs = as_size(p, "epochs");
            o.eta0 = p.at("eta0");
            o.platt_folds = as_size(p, "platt_folds");
            o.seed = spec.seed;
            return make(train_svc(X, y, o));
        }
    }
    throw Error("train: unknown model kind");
}

double gradient_check(const ModelSpec& mlp_spec, const Dataset& tiny, double h) {
    if (mlp_spec.kind != ModelKind::MLP) throw Error("gradient_check: spec is not an MLP");
    validate_spec(mlp_spec);
    if (tiny.rows() == 0 || tiny.rows() > 10 || tiny.features() > 5)
        throw Error("gradient_check: dataset must have 1-10 rows and at most 5 features");
    std::vector<std::size_t> layers{tiny.X.cols()};
    const auto hidden = mlp_hidden(mlp_spec.params);
    layers.insert(layers.end(), hidden.begin(), hidden.end());
    layers.push_back(1);
    return gradient_check(MlpNetwork(layers, mlp_spec.seed), tiny.X, tiny.y, h);
}

void save_model(const TrainedModel& model, std::ostream& out) {
    json doc;
    doc["format"] = "flowguard-model";
    doc["version"] = kModelFormatVersion;
    doc["kind"] = kind_name(model.spec().kind);
    doc["seed"] = model.spec().seed;
    doc["hyperparameters"] = model.spec().params;
    doc["arity"] = model.arity();
    doc["state_type"] = std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantModel>)
                return "constant";
            else
                return "learned";
        },
        model.state());
    doc["state"] = state_to_json(model.state());
    out << doc.dump() << '\n';
}

TrainedModel load_model(std::istream& in) {
    try {
        const auto doc = json::parse(std::string(std::istreambuf_iterator<char>(in), {}));
        if (doc.at("format") != "flowguard-model") throw Error("load_model: not a flowguard model file");
        if (doc.at("version").get<int>() != kModelFormatVersion)
            throw Error("load_model: unsupported model version " + doc.at("version").dump());
        ModelSpec spec;
        spec.kind = parse_kind(doc.at("kind").get<std::string>());
        spec.seed = doc.at("seed").get<std::uint64_t>();
        spec.params = doc.at("hyperparameters").get<Hyperparameters>();
        validate_spec(spec);
        const auto arity = doc.at("arity").get<std::size_t>();
        const auto& s = doc.at("state");

        if (doc.at("state_type") == "constant")
            return TrainedModel(spec, arity, ConstantModel{s.at("constant_probability").get<double>()});
        switch (spec.kind) {
            case ModelKind::RF: {
                ForestModel m;
                m.trees = trees_from_json(s.at("trees"));
                m.importance = s.at("importance").get<std::vector<double>>();
                return TrainedModel(spec, arity, std::move(m));
            }
            case ModelKind::GBT: {
                BoostedModel m;
                m.base_score = s.at("base_score").get<double>();
                m.trees = trees_from_json(s.at("trees"));
                m.loss_history = s.at("loss_history").get<std::vector<double>>();
                return TrainedModel(spec, arity, std::move(m));
            }
            case ModelKind::KNN: {
                KnnModel m;
                m.k = s.at("k").get<std::size_t>();
                const auto rows = s.at("rows").get<std::size_t>();
                const auto cols = s.at("cols").get<std::size_t>();
                const auto values = s.at("X").get<std::vector<double>>();
                if (values.size() != rows * cols || cols != arity) throw Error("load_model: corrupt KNN state");
                for (std::size_t r = 0; r < rows; ++r)
                    m.X.append_row(std::span<const double>(values).subspan(r * cols, cols));
                m.y = s.at("y").get<std::vector<int>>();
                if (m.y.size() != rows) throw Error("load_model: corrupt KNN labels");
                return TrainedModel(spec, arity, std::move(m));
            }
            case ModelKind::MLP: {
                auto layers = s.at("layers").get<std::vector<std::size_t>>();
                if (layers.empty() || layers.front() != arity) throw Error("load_model: corrupt MLP layers");
                auto net = MlpNetwork::zeros(layers);
                auto params = s.at("parameters").get<std::vector<double>>();
                if (params.size() != net.parameters().size()) throw Error("load_model: corrupt MLP parameters");
                net.parameters() = std::move(params);
                return TrainedModel(spec, arity, std::move(net));
            }
            case ModelKind::SVC: {
                SvcModel m;
                m.w = s.at("w").get<std::vector<double>>();
                m.bias = s.at("bias").get<double>();
                m.platt = {s.at("platt_a").get<double>(), s.at("platt_b").get<double>()};
                if (m.w.size() != arity) throw Error("load_model: corrupt SVC weights");
                return TrainedModel(spec, arity, std::move(m));
            }
        }
        throw Error("load_model: unknown kind");
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("load_model: ") + e.what());
    }
}

}  // namespace flowguard

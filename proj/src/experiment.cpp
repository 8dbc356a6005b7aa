#include "flowguard/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

namespace flowguard {

namespace {

template <typename F>
auto staged(const std::string& stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError& e) {
        throw StageError(stage + "/" + e.stage(), e.detail());
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

double accuracy_of(const TrainedModel& model, const Dataset& ds) {
    const auto pred = model.predict(ds);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.rows(); ++i) hits += pred.labels[i] == ds.y[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(ds.rows());
}

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    while (true) {
        const auto comma = text.find(',');
        auto item = trim(text.substr(0, comma));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

double to_double(std::string_view key, const std::string& value) {
    double v = 0.0;
    const char* begin = value.data();
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) throw Error("config: bad number '" + value + "' for '" + std::string(key) + "'");
    return v;
}

std::size_t to_count(std::string_view key, const std::string& value) {
    const double v = to_double(key, value);
    if (v < 0 || v != std::floor(v)) throw Error("config: '" + std::string(key) + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::vector<std::size_t> select_top_features(const Dataset& train, std::size_t top, std::uint64_t seed) {
    ForestOptions options;
    options.seed = seed;
    const auto forest = train_forest(train.X, train.y, options);
    std::vector<std::size_t> order(train.features());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return forest.importance[a] > forest.importance[b]; });
    order.resize(std::min(top, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace

std::string_view track_name(Track track) { return track == Track::Balanced ? "balanced" : "imbalanced"; }

Track parse_track(std::string_view name) {
    if (name == "balanced") return Track::Balanced;
    if (name == "imbalanced") return Track::Imbalanced;
    throw Error("unknown track '" + std::string(name) + "'");
}

std::vector<Hyperparameters> expand_grid(const ParameterGrid& grid) {
    std::vector<Hyperparameters> points{Hyperparameters{}};
    for (const auto& [key, values] : grid) {
        if (values.empty()) throw Error("grid axis '" + key + "' is empty");
        std::vector<Hyperparameters> next;
        for (const auto& p : points) {
            for (double v : values) {
                auto q = p;
                q[key] = v;
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

ParameterGrid default_grid(ModelKind kind) {
    switch (kind) {
        case ModelKind::RF: return {{"n_trees", {50, 100}}};
        case ModelKind::GBT: return {{"rounds", {50, 100}}, {"learning_rate", {0.1, 0.3}}};
        case ModelKind::KNN: return {{"k", {3, 5, 7}}};
        case ModelKind::MLP: return {{"learning_rate", {0.01, 0.001}}};
        case ModelKind::SVC: return {{"lambda", {1e-3, 1e-4}}};
    }
    return {};
}

const ParameterGrid& ExperimentConfig::grid_for(ModelKind kind) const {
    static const std::map<ModelKind, ParameterGrid> defaults = [] {
        std::map<ModelKind, ParameterGrid> m;
        for (auto k : kAllModelKinds) m[k] = default_grid(k);
        return m;
    }();
    const auto it = grids.find(kind);
    return it != grids.end() ? it->second : defaults.at(kind);
}

void ExperimentConfig::validate() const {
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw Error("config: split_ratio must lie in (0,1)");
    if (cv_folds < 2) throw Error("config: cv_folds must be at least 2");
    if (tracks.empty()) throw Error("config: no tracks enabled");
    if (models.empty()) throw Error("config: no models enabled");
    for (auto kind : models) {
        const auto points = expand_grid(grid_for(kind));
        if (points.empty()) throw Error("config: empty grid for " + std::string(kind_name(kind)));
        const auto fixed = fixed_params.find(kind);
        for (const auto& p : points) {
            Hyperparameters merged = fixed != fixed_params.end() ? fixed->second : Hyperparameters{};
            for (const auto& [k, v] : p) merged[k] = v;
            make_spec(kind, merged, seed);
        }
    }
    if (smote.k_neighbors == 0) throw Error("config: smote.k_neighbors must be positive");
    if (!(smote.target_ratio > 0.0)) throw Error("config: smote.target_ratio must be positive");
    if (lof.k_neighbors == 0) throw Error("config: lof.k_neighbors must be positive");
    if (!(lof.threshold > 1.0)) throw Error("config: lof.threshold must exceed 1");
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view raw_value) {
    const std::string value = trim(raw_value);
    if (key == "split_ratio") {
        cfg.split_ratio = to_double(key, value);
    } else if (key == "cv_folds") {
        cfg.cv_folds = to_count(key, value);
    } else if (key == "seed") {
        cfg.seed = to_count(key, value);
    } else if (key == "tracks") {
        cfg.tracks.clear();
        for (const auto& t : split_list(value)) {
            const Track track = parse_track(t);
            if (std::find(cfg.tracks.begin(), cfg.tracks.end(), track) == cfg.tracks.end()) cfg.tracks.push_back(track);
        }
    } else if (key == "models") {
        cfg.models.clear();
        for (const auto& m : split_list(value)) {
            const ModelKind kind = parse_kind(m);
            if (std::find(cfg.models.begin(), cfg.models.end(), kind) == cfg.models.end()) cfg.models.push_back(kind);
        }
    } else if (key == "smote.k_neighbors") {
        cfg.smote.k_neighbors = to_count(key, value);
    } else if (key == "smote.target_ratio") {
        cfg.smote.target_ratio = to_double(key, value);
    } else if (key == "lof.k_neighbors") {
        cfg.lof.k_neighbors = to_count(key, value);
    } else if (key == "lof.threshold") {
        cfg.lof.threshold = to_double(key, value);
    } else if (key == "feature_select_top") {
        cfg.feature_select_top = to_count(key, value);
    } else if (key == "timestamp") {
        cfg.timestamp = value;
    } else if (key.starts_with("grid.") || key.starts_with("param.")) {
        const auto rest = key.substr(key.find('.') + 1);
        const auto dot = rest.find('.');
        if (dot == std::string_view::npos) throw Error("config: expected " + std::string(key) + " as <prefix>.<MODEL>.<name>");
        const ModelKind kind = parse_kind(rest.substr(0, dot));
        const std::string param(rest.substr(dot + 1));
        if (!default_hyperparameters(kind).contains(param))
            throw Error("config: unknown " + std::string(kind_name(kind)) + " hyperparameter '" + param + "'");
        if (key.starts_with("param.")) {
            cfg.fixed_params[kind][param] = to_double(key, value);
        } else {
            std::vector<double> values;
            for (const auto& v : split_list(value)) values.push_back(to_double(key, v));
            if (values.empty()) throw Error("config: empty grid for '" + std::string(key) + "'");
            auto grid = cfg.grid_for(kind);
            auto axis = std::find_if(grid.begin(), grid.end(), [&](const auto& a) { return a.first == param; });
            if (axis != grid.end())
                axis->second = std::move(values);
            else
                grid.emplace_back(param, std::move(values));
            cfg.grids[kind] = std::move(grid);
        }
    } else {
        throw Error("config: unknown key '" + std::string(key) + "'");
    }
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error("config: line " + std::to_string(line_no) + " is not key = value");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

PreparedData preprocess_partition(const Dataset& train, const Dataset& eval, const TrackPreprocessing& prep) {
    PreparedData out;
    Dataset working = train;
    if (prep.track == Track::Balanced) {
        auto smote = staged("smote", [&] { return smote_oversample(working, prep.smote); });
        out.smote_added = smote.added();
        working = std::move(smote.dataset);
        auto lof = staged("lof", [&] { return remove_outliers(working, prep.lof); });
        out.lof_removed = lof.removed_count();
        working = std::move(lof.dataset);
    }
    out.scaler = staged("standardize", [&] { return fit_scaler(working); });
    out.train = apply_scaler(out.scaler, working);
    out.eval = apply_scaler(out.scaler, eval);
    return out;
}

std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw Error("folds must be at least 2");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
    for (int c = 0; c < 2; ++c)
        if (by_class[c].size() < folds)
            throw Error("class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                        " rows, fewer than " + std::to_string(folds) + " folds");
    std::vector<std::size_t> fold_of(y.size());
    Rng rng(seed);
    for (auto& members : by_class) {
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) fold_of[members[i]] = i % folds;
    }
    return fold_of;
}

std::vector<PreparedData> prepare_folds(const Dataset& train, std::size_t folds, std::uint64_t seed,
                                        const TrackPreprocessing& prep) {
    const auto fold_of = stratified_folds(train.y, folds, seed);
    std::vector<PreparedData> out(folds);
    parallel_for(folds, [&](std::size_t f) {
        std::vector<std::size_t> fit_rows;
        std::vector<std::size_t> held_rows;
        for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? held_rows : fit_rows).push_back(i);
        TrackPreprocessing fold_prep = prep;
        fold_prep.smote.seed = prep.smote.seed + f;
        out[f] = preprocess_partition(train.subset(fit_rows), train.subset(held_rows), fold_prep);
    });
    return out;
}

CvResult cross_validate(const FoldTrainer& trainer, const std::vector<PreparedData>& folds) {
    if (folds.empty()) throw Error("cross_validate: no folds");
    CvResult cv;
    cv.folds.resize(folds.size());
    parallel_for(folds.size(), [&](std::size_t f) {
        const auto model = trainer(folds[f].train, f);
        cv.folds[f] = {f, accuracy_of(model, folds[f].train), accuracy_of(model, folds[f].eval)};
    });
    double sum = 0.0;
    for (const auto& r : cv.folds) sum += r.validation_accuracy;
    cv.mean_accuracy = sum / static_cast<double>(cv.folds.size());
    return cv;
}

CvResult kfold_cv(const ModelSpec& spec, const Dataset& train, std::size_t folds, std::uint64_t seed,
                  const TrackPreprocessing& prep) {
    const auto prepared = prepare_folds(train, folds, seed, prep);
    return cross_validate(
        [&](const Dataset& fold_train, std::size_t f) {
            ModelSpec s = spec;
            s.seed = spec.seed + f;
            return flowguard::train(s, fold_train);
        },
        prepared);
}

GridSearchResult grid_search(const ModelSpec& base, const ParameterGrid& grid, const std::vector<PreparedData>& folds) {
    const auto combos = expand_grid(grid);
    if (combos.empty()) throw Error("grid_search: empty grid");
    GridSearchResult result;
    result.points.resize(combos.size());
    std::vector<ModelSpec> specs(combos.size());
    for (std::size_t i = 0; i < combos.size(); ++i) {
        specs[i] = base;
        for (const auto& [k, v] : combos[i]) specs[i].params[k] = v;
        specs[i].seed = base.seed + i;
        result.points[i].params = specs[i].params;
        result.points[i].seed = specs[i].seed;
        result.points[i].cv.folds.resize(folds.size());
    }

    const std::size_t k = folds.size();
    std::vector<std::string> errors(combos.size() * k);
    parallel_for(combos.size() * k, [&](std::size_t task) {
        const std::size_t i = task / k;
        const std::size_t f = task % k;
        try {
            ModelSpec s = specs[i];
            s.seed = specs[i].seed + f;
            const auto model = train(s, folds[f].train);
            result.points[i].cv.folds[f] = {f, accuracy_of(model, folds[f].train), accuracy_of(model, folds[f].eval)};
        } catch (const std::exception& e) {
            errors[task] = e.what();
            if (errors[task].empty()) errors[task] = "training failed";
        }
    });

    bool any = false;
    for (std::size_t i = 0; i < combos.size(); ++i) {
        auto& point = result.points[i];
        for (std::size_t f = 0; f < k && !point.failed; ++f) {
            if (!errors[i * k + f].empty()) {
                point.failed = true;
                point.error = errors[i * k + f];
            }
        }
        if (point.failed) {
            result.warnings.push_back(std::string(kind_name(base.kind)) + " grid point " + std::to_string(i) +
                                      " skipped: " + point.error);
            continue;
        }
        double sum = 0.0;
        for (const auto& r : point.cv.folds) sum += r.validation_accuracy;
        point.cv.mean_accuracy = sum / static_cast<double>(k);
        if (!any || point.cv.mean_accuracy > result.points[result.best_index].cv.mean_accuracy) result.best_index = i;
        any = true;
    }
    if (!any) throw Error("grid_search: every grid point failed (" + result.points.front().error + ")");
    result.best = specs[result.best_index];
    return result;
}

GridSearchResult grid_search(const ModelSpec& base, const ParameterGrid& grid, const Dataset& train, std::size_t folds,
                             std::uint64_t seed, const TrackPreprocessing& prep) {
    return grid_search(base, grid, prepare_folds(train, folds, seed, prep));
}

const ModelReport* ExperimentReport::find(Track track, ModelKind kind) const {
    for (const auto& t : tracks) {
        if (t.track != track) continue;
        for (const auto& m : t.models)
            if (m.kind == kind) return &m;
    }
    return nullptr;
}

TrackReport run_track(Track track, const SplitPair& split, const ExperimentConfig& cfg) {
    cfg.validate();
    const std::string tag(track_name(track));
    TrackReport report;
    report.track = track;

    TrackPreprocessing prep{track, cfg.smote, cfg.lof};
    prep.smote.seed = cfg.seed;
    auto full = staged(tag + "/preprocess", [&] { return preprocess_partition(split.train, split.test, prep); });

    // The test partition only ever sees the training-fitted scaler.
    if (full.eval.rows() != split.test.rows() || label_distribution(full.eval) != label_distribution(split.test))
        throw StageError(tag + "/preprocess", "test partition changed during preprocessing");

    TrackPreprocessing fold_prep = prep;
    fold_prep.smote.seed = cfg.seed + 1;
    auto folds = staged(tag + "/cross-validation folds",
                        [&] { return prepare_folds(split.train, cfg.cv_folds, cfg.seed, fold_prep); });

    if (cfg.feature_select_top > 0 && cfg.feature_select_top < full.train.features()) {
        const auto keep = staged(tag + "/feature selection",
                                 [&] { return select_top_features(full.train, cfg.feature_select_top, cfg.seed); });
        full.train = full.train.select_features(keep);
        full.eval = full.eval.select_features(keep);
        for (auto& f : folds) {
            f.train = f.train.select_features(keep);
            f.eval = f.eval.select_features(keep);
        }
    }
    report.selected_features = full.train.feature_names;
    report.scaler = full.scaler;

    auto& counts = report.counts;
    counts.train_rows_split = split.train.rows();
    counts.smote_added = full.smote_added;
    counts.lof_removed = full.lof_removed;
    counts.train_rows_final = full.train.rows();
    counts.test_rows = full.eval.rows();
    counts.train_final = label_distribution(full.train);
    counts.test = label_distribution(full.eval);

    for (auto kind : kAllModelKinds) {
        if (std::find(cfg.models.begin(), cfg.models.end(), kind) == cfg.models.end()) continue;
        const std::string stage = tag + "/" + std::string(kind_name(kind));
        const auto fixed = cfg.fixed_params.find(kind);
        const ModelSpec base =
            make_spec(kind, fixed != cfg.fixed_params.end() ? fixed->second : Hyperparameters{}, cfg.seed);
        auto search = staged(stage + "/grid search", [&] { return grid_search(base, cfg.grid_for(kind), folds); });
        report.warnings.insert(report.warnings.end(), search.warnings.begin(), search.warnings.end());

        ModelReport m;
        m.kind = kind;
        m.chosen = search.best;
        m.cv = search.points[search.best_index].cv;
        m.grid = std::move(search.points);
        auto model = staged(stage + "/train", [&] { return train(m.chosen, full.train); });
        m.training_accuracy = accuracy_of(model, full.train);
        const auto pred = model.predict(full.eval);
        m.test = staged(stage + "/evaluate",
                        [&] { return evaluate_predictions(full.eval.y, pred.labels, pred.probabilities, &m.roc); });
        report.models.push_back(std::move(m));
        report.trained.push_back(std::move(model));
    }
    return report;
}

ExperimentReport run_full_experiment(const ExperimentConfig& cfg, const Dataset& ds) {
    staged("config", [&] { cfg.validate(); });
    staged("dataset", [&] { ds.validate(); });
    ExperimentReport report;
    report.config = cfg;
    report.provenance = ds.provenance;
    report.timestamp = cfg.timestamp;
    report.feature_names = ds.feature_names;
    report.dataset = label_distribution(ds);

    const auto split = staged("split", [&] { return stratified_split(ds, cfg.split_ratio, cfg.seed); });
    report.split_hash = hex64(split.hash());
    report.split_train = label_distribution(split.train);
    report.split_test = label_distribution(split.test);

    for (auto track : {Track::Imbalanced, Track::Balanced}) {
        if (std::find(cfg.tracks.begin(), cfg.tracks.end(), track) == cfg.tracks.end()) continue;
        report.tracks.push_back(run_track(track, split, cfg));
    }
    return report;
}

}  // namespace flowguard

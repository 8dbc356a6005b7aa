#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowguard/classifiers.hpp"
#include "flowguard/dataset.hpp"
#include "flowguard/metrics.hpp"
#include "flowguard/preprocess.hpp"

namespace flowguard {

enum class Track { Imbalanced, Balanced };

std::string_view track_name(Track track);
Track parse_track(std::string_view name);

/// Ordered hyperparameter axes; expansion iterates the first axis slowest.
using ParameterGrid = std::vector<std::pair<std::string, std::vector<double>>>;

std::vector<Hyperparameters> expand_grid(const ParameterGrid& grid);
ParameterGrid default_grid(ModelKind kind);

struct ExperimentConfig {
    double split_ratio = 0.8;
    std::size_t cv_folds = 5;
    std::uint64_t seed = 0;
    std::vector<Track> tracks{Track::Imbalanced, Track::Balanced};
    std::vector<ModelKind> models{std::begin(kAllModelKinds), std::end(kAllModelKinds)};
    std::map<ModelKind, ParameterGrid> grids;          // missing kinds use default_grid
    std::map<ModelKind, Hyperparameters> fixed_params;  // applied under every grid point
    SmoteConfig smote;  // seed is derived from `seed` at run time
    LofConfig lof;
    std::size_t feature_select_top = 0;  // 0 keeps every feature
    std::string timestamp = "unset";

    const ParameterGrid& grid_for(ModelKind kind) const;
    void validate() const;
};

/// Applies flat `key = value` settings (see README for the key list).
/// Throws on unknown keys.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Parses a flat key-value document: one `key = value` per line, `#` comments.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

struct TrackPreprocessing {
    Track track = Track::Imbalanced;
    SmoteConfig smote;
    LofConfig lof;
};

/// A training partition after track preprocessing, with its paired
/// evaluation partition transformed by the training-fitted scaler only.
struct PreparedData {
    Dataset train;
    Dataset eval;
    Scaler scaler;
    std::size_t smote_added = 0;
    std::size_t lof_removed = 0;
};

PreparedData preprocess_partition(const Dataset& train, const Dataset& eval, const TrackPreprocessing& prep);

/// Fold index per row: each class is shuffled under `seed` and dealt round
/// robin. Throws when a class has fewer rows than folds.
std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t folds, std::uint64_t seed);

/// Per-fold preprocessing, refitted on each fold's training part. Fold f
/// uses SMOTE seed prep.smote.seed + f.
std::vector<PreparedData> prepare_folds(const Dataset& train, std::size_t folds, std::uint64_t seed,
                                        const TrackPreprocessing& prep);

struct FoldResult {
    std::size_t fold = 0;
    double train_accuracy = 0.0;
    double validation_accuracy = 0.0;
};

struct CvResult {
    double mean_accuracy = 0.0;
    std::vector<FoldResult> folds;
};

using FoldTrainer = std::function<TrainedModel(const Dataset& fold_train, std::size_t fold)>;

CvResult cross_validate(const FoldTrainer& trainer, const std::vector<PreparedData>& folds);

/// Stratified k-fold CV of `spec`; fold f trains with seed spec.seed + f.
CvResult kfold_cv(const ModelSpec& spec, const Dataset& train, std::size_t folds, std::uint64_t seed,
                  const TrackPreprocessing& prep = {});

struct GridPoint {
    Hyperparameters params;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    CvResult cv;
};

struct GridSearchResult {
    ModelSpec best;
    std::size_t best_index = 0;
    std::vector<GridPoint> points;
    std::vector<std::string> warnings;
};

/// Exhaustive search; grid point i uses seed base.seed + i. Highest mean CV
/// accuracy wins, earlier points win ties. Failing points are skipped with a
/// warning; if every point fails the search throws.
GridSearchResult grid_search(const ModelSpec& base, const ParameterGrid& grid, const std::vector<PreparedData>& folds);
GridSearchResult grid_search(const ModelSpec& base, const ParameterGrid& grid, const Dataset& train,
                             std::size_t folds, std::uint64_t seed, const TrackPreprocessing& prep = {});

struct ModelReport {
    ModelKind kind = ModelKind::RF;
    ModelSpec chosen;
    std::vector<GridPoint> grid;
    double training_accuracy = 0.0;
    CvResult cv;
    MetricsReport test;
    RocCurve roc;
};

struct PreprocessingCounts {
    std::size_t train_rows_split = 0;
    std::size_t smote_added = 0;
    std::size_t lof_removed = 0;
    std::size_t train_rows_final = 0;
    std::size_t test_rows = 0;
    LabelDistribution train_final;
    LabelDistribution test;
};

struct TrackReport {
    Track track = Track::Imbalanced;
    PreprocessingCounts counts;
    Scaler scaler;
    std::vector<std::string> selected_features;
    std::vector<ModelReport> models;
    std::vector<std::string> warnings;
    std::vector<TrainedModel> trained;  // final models, same order as `models`; not serialised
};

struct ExperimentReport {
    ExperimentConfig config;
    std::string provenance;
    std::string timestamp;
    std::vector<std::string> feature_names;
    LabelDistribution dataset;
    LabelDistribution split_train;
    LabelDistribution split_test;
    std::string split_hash;
    std::vector<TrackReport> tracks;

    const ModelReport* find(Track track, ModelKind kind) const;
};

/// One track of the dual-track pipeline on a fixed split.
TrackReport run_track(Track track, const SplitPair& split, const ExperimentConfig& cfg);

/// Splits once under cfg.seed and runs every enabled track on that split.
ExperimentReport run_full_experiment(const ExperimentConfig& cfg, const Dataset& ds);

std::string report_to_json(const ExperimentReport& report);

/// Fixed-width model x track table of test accuracy and AUC. The same
/// strings are embedded in the JSON report under "summary".
std::string summary_table(const ExperimentReport& report);

/// roc_/validation_curve_/confusion_<model>_<track>.csv for every entry.
/// Returns the written paths.
std::vector<std::filesystem::path> write_plot_files(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace flowguard

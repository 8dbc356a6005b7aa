#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flowguard/experiment.hpp"

namespace flowguard {

namespace {

using json = nlohmann::ordered_json;

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

json labels_json(const LabelDistribution& d) {
    return {{"benign", d.benign_count}, {"ddos", d.ddos_count}, {"total", d.total}};
}

json grid_json(const ParameterGrid& grid) {
    json out = json::array();
    for (const auto& [key, values] : grid) out.push_back({{"name", key}, {"values", values}});
    return out;
}

json config_json(const ExperimentConfig& cfg) {
    json j;
    j["split_ratio"] = cfg.split_ratio;
    j["cv_folds"] = cfg.cv_folds;
    j["seed"] = cfg.seed;
    json tracks = json::array();
    for (auto t : cfg.tracks) tracks.push_back(track_name(t));
    j["tracks"] = tracks;
    json models = json::array();
    json grids = json::object();
    json fixed = json::object();
    for (auto kind : kAllModelKinds) {
        if (std::find(cfg.models.begin(), cfg.models.end(), kind) == cfg.models.end()) continue;
        const std::string name(kind_name(kind));
        models.push_back(name);
        grids[name] = grid_json(cfg.grid_for(kind));
        const auto it = cfg.fixed_params.find(kind);
        if (it != cfg.fixed_params.end()) fixed[name] = it->second;
    }
    j["models"] = models;
    j["grids"] = grids;
    j["fixed_hyperparameters"] = fixed;
    j["smote"] = {{"k_neighbors", cfg.smote.k_neighbors}, {"target_ratio", cfg.smote.target_ratio}};
    j["lof"] = {{"k_neighbors", cfg.lof.k_neighbors}, {"threshold", cfg.lof.threshold}};
    j["feature_select_top"] = cfg.feature_select_top;
    return j;
}

json cv_json(const CvResult& cv) {
    json folds = json::array();
    for (const auto& f : cv.folds)
        folds.push_back(
            {{"fold", f.fold}, {"train_accuracy", f.train_accuracy}, {"validation_accuracy", f.validation_accuracy}});
    return folds;
}

json metrics_json(const MetricsReport& m) {
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"auc", m.auc},
            {"kappa", m.kappa},
            {"mcc", m.mcc},
            {"brier", m.brier},
            {"confusion_matrix", {{"tp", m.cm.tp}, {"tn", m.cm.tn}, {"fp", m.cm.fp}, {"fn", m.cm.fn}}},
            {"degenerate",
             {{"precision", m.precision_degenerate},
              {"recall", m.recall_degenerate},
              {"f1", m.f1_degenerate},
              {"auc", m.auc_degenerate},
              {"kappa", m.kappa_degenerate},
              {"mcc", m.mcc_degenerate}}}};
}

json model_json(const ModelReport& m) {
    json grid = json::array();
    for (const auto& p : m.grid) {
        json point{{"hyperparameters", p.params}, {"seed", p.seed}, {"failed", p.failed}};
        if (p.failed)
            point["error"] = p.error;
        else {
            point["mean_cv_accuracy"] = p.cv.mean_accuracy;
            point["folds"] = cv_json(p.cv);
        }
        grid.push_back(point);
    }
    return {{"model", kind_name(m.kind)},
            {"hyperparameters", m.chosen.params},
            {"seed", m.chosen.seed},
            {"training_accuracy", m.training_accuracy},
            {"mean_cv_accuracy", m.cv.mean_accuracy},
            {"folds", cv_json(m.cv)},
            {"test", metrics_json(m.test)},
            {"grid", grid}};
}

struct SummaryRow {
    std::string model;
    std::string track;
    std::string accuracy;
    std::string auc;
};

std::vector<SummaryRow> summary_rows(const ExperimentReport& report) {
    std::vector<SummaryRow> rows;
    for (const auto& t : report.tracks)
        for (const auto& m : t.models)
            rows.push_back({std::string(kind_name(m.kind)), std::string(track_name(t.track)), fixed4(m.test.accuracy),
                            fixed4(m.test.auc)});
    return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
    json doc;
    doc["format"] = "flowguard-report";
    doc["version"] = 1;
    doc["generated_at"] = report.timestamp;
    doc["provenance"] = report.provenance;
    doc["config"] = config_json(report.config);
    doc["pipeline"] = {
        {"order", {"split", "smote(train, balanced track only)", "lof(train, balanced track only)", "fit scaler(train)",
                   "transform(train, test)"}},
        {"notes",
         {"preprocessing is refitted inside every cross-validation fold",
          "the test partition is transformed only by the training-fitted scaler",
          "final models are retrained on the full processed training partition with the selected hyperparameters"}}};
    doc["dataset"] = {{"rows", report.dataset.total},
                      {"features", report.feature_names.size()},
                      {"feature_names", report.feature_names},
                      {"labels", labels_json(report.dataset)}};
    doc["split"] = {{"ratio", report.config.split_ratio},
                    {"seed", report.config.seed},
                    {"hash", report.split_hash},
                    {"train_labels", labels_json(report.split_train)},
                    {"test_labels", labels_json(report.split_test)}};

    json tracks = json::array();
    for (const auto& t : report.tracks) {
        json constant = json::array();
        for (std::size_t c = 0; c < t.scaler.constant.size(); ++c)
            if (t.scaler.constant[c] && c < report.feature_names.size()) constant.push_back(report.feature_names[c]);
        json models = json::array();
        for (const auto& m : t.models) models.push_back(model_json(m));
        tracks.push_back({{"track", track_name(t.track)},
                          {"preprocessing",
                           {{"train_rows_split", t.counts.train_rows_split},
                            {"smote_added", t.counts.smote_added},
                            {"lof_removed", t.counts.lof_removed},
                            {"train_rows_final", t.counts.train_rows_final},
                            {"test_rows", t.counts.test_rows},
                            {"train_labels_final", labels_json(t.counts.train_final)},
                            {"test_labels", labels_json(t.counts.test)},
                            {"constant_features", constant}}},
                          {"selected_features", t.selected_features},
                          {"warnings", t.warnings},
                          {"models", models}});
    }
    doc["tracks"] = tracks;

    json summary = json::array();
    for (const auto& r : summary_rows(report))
        summary.push_back({{"model", r.model}, {"track", r.track}, {"test_accuracy", r.accuracy}, {"auc", r.auc}});
    doc["summary"] = summary;
    return doc.dump(2) + "\n";
}

std::string summary_table(const ExperimentReport& report) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-6s %-11s %-9s %-9s\n", "model", "track", "test_acc", "auc");
    out += line;
    for (const auto& r : summary_rows(report)) {
        std::snprintf(line, sizeof line, "%-6s %-11s %-9s %-9s\n", r.model.c_str(), r.track.c_str(),
                      r.accuracy.c_str(), r.auc.c_str());
        out += line;
    }
    return out;
}

std::vector<std::filesystem::path> write_plot_files(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& t : report.tracks) {
        for (const auto& m : t.models) {
            const std::string suffix = lower(kind_name(m.kind)) + "_" + std::string(track_name(t.track)) + ".csv";

            std::ostringstream roc;
            write_roc_csv(m.roc, roc);
            written.push_back(dir / ("roc_" + suffix));
            write_text(written.back(), roc.str());

            std::ostringstream curve;
            curve.precision(17);
            curve << "fold,train_acc,val_acc\n";
            for (const auto& f : m.cv.folds)
                curve << f.fold << ',' << f.train_accuracy << ',' << f.validation_accuracy << '\n';
            written.push_back(dir / ("validation_curve_" + suffix));
            write_text(written.back(), curve.str());

            std::ostringstream cm;
            write_confusion_csv(m.test.cm, cm);
            written.push_back(dir / ("confusion_" + suffix));
            write_text(written.back(), cm.str());
        }
    }
    return written;
}

}  // namespace flowguard

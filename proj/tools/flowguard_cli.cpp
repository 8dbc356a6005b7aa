#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "flowguard/experiment.hpp"
#include "flowguard/synth.hpp"

namespace fs = std::filesystem;
using namespace flowguard;

namespace {

struct RunOptions {
    std::string config;
    std::string data;
    std::string synth;
    std::string label_column;
    std::string tracks;
    std::string models;
    std::string seed;
    std::string folds;
    std::string split_ratio;
    std::string timestamp;
    std::string out;
    bool no_models = false;
};

struct InspectOptions {
    std::string data;
    std::string label_column = "label";
};

struct SynthOptions {
    std::string synth;
    std::string out;
    std::string label_column = "label";
};

struct EvaluateOptions {
    std::string model;
    std::string data;
    std::string scaler;
    std::string categories;
    std::string label_column = "label";
    std::string roc;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

struct LoadedData {
    Dataset dataset;
    CategoryMaps categories;
};

LoadedData load_source(const std::string& data, const std::string& synth, const std::string& label_column) {
    if (!synth.empty()) {
        const auto cfg = parse_synth_config(synth);
        LoadedData out{generate(cfg), {}};
        const auto raw = to_raw(out.dataset, cfg);
        for (const auto& col : raw.columns)
            if (col.type == ColumnType::Categorical) out.categories[col.name] = {"UDP", "TCP", "ICMP"};
        return out;
    }
    auto encoded = prepare_dataset(load_csv(data, label_column));
    return {std::move(encoded.dataset), std::move(encoded.categories)};
}

int cmd_run(const RunOptions& opt) {
    ExperimentConfig cfg;
    std::string data;
    std::string synth;
    std::string label_column = "label";
    std::string out;

    try {
        if (!opt.config.empty()) {
            for (const auto& [key, value] : parse_key_values(read_file(opt.config))) {
                if (key == "data")
                    data = value;
                else if (key == "synth")
                    synth = value;
                else if (key == "label_column")
                    label_column = value;
                else if (key == "out")
                    out = value;
                else
                    apply_setting(cfg, key, value);
            }
        }
        // A source given on the command line replaces any source from the file.
        if (!opt.data.empty() || !opt.synth.empty()) {
            data = opt.data;
            synth = opt.synth;
        }
        if (!opt.label_column.empty()) label_column = opt.label_column;
        if (!opt.out.empty()) out = opt.out;
        if (!opt.tracks.empty()) apply_setting(cfg, "tracks", opt.tracks);
        if (!opt.models.empty()) apply_setting(cfg, "models", opt.models);
        if (!opt.seed.empty()) apply_setting(cfg, "seed", opt.seed);
        if (!opt.folds.empty()) apply_setting(cfg, "cv_folds", opt.folds);
        if (!opt.split_ratio.empty()) apply_setting(cfg, "split_ratio", opt.split_ratio);
        if (!opt.timestamp.empty()) {
            cfg.timestamp = opt.timestamp;
        } else if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
            cfg.timestamp = std::string("epoch:") + epoch;
        }
        if (data.empty() == synth.empty()) throw Error("exactly one of --data or --synth is required");
        if (out.empty()) throw Error("--out is required");
        cfg.validate();
    } catch (const Error& e) {
        std::cerr << "error [config]: " << e.what() << '\n';
        return 2;
    }

    try {
        fs::create_directories(out);
        const fs::path probe = fs::path(out) / ".write-test";
        write_file(probe, "");
        fs::remove(probe);
    } catch (const std::exception& e) {
        std::cerr << "error [output]: output directory '" << out << "' is not writable: " << e.what() << '\n';
        return 1;
    }

    std::string stage = "load";
    try {
        const auto loaded = load_source(data, synth, label_column);
        stage = "experiment";
        const auto report = run_full_experiment(cfg, loaded.dataset);

        stage = "write";
        const fs::path dir(out);
        write_file(dir / "report.json", report_to_json(report));
        write_plot_files(report, dir);
        write_file(dir / "categories.json", category_maps_to_json(loaded.categories));
        if (!opt.no_models) {
            const fs::path models = dir / "models";
            fs::create_directories(models);
            for (const auto& t : report.tracks) {
                const std::string track(track_name(t.track));
                write_file(models / ("scaler_" + track + ".json"), scaler_to_json(t.scaler));
                for (std::size_t i = 0; i < t.trained.size(); ++i) {
                    std::ostringstream ss;
                    save_model(t.trained[i], ss);
                    write_file(models / (lower(std::string(kind_name(t.models[i].kind))) + "_" + track + ".model"),
                               ss.str());
                }
            }
        }
        std::cout << summary_table(report);
        for (const auto& t : report.tracks)
            for (const auto& w : t.warnings) std::cerr << "warning [" << track_name(t.track) << "]: " << w << '\n';
    } catch (const StageError& e) {
        std::cerr << "error [" << stage << "/" << e.stage() << "]: " << e.detail() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int cmd_inspect(const InspectOptions& opt) {
    try {
        const auto raw = load_csv(opt.data, opt.label_column);
        const auto labels = label_distribution(raw);
        std::cout << "rows: " << raw.rows() << '\n';
        std::cout << "features: " << raw.features() << '\n';
        std::cout << "missing: " << raw.missing_count() << '\n';
        std::cout << "columns:\n";
        for (const auto& col : raw.columns)
            std::cout << "  " << col.name << ' '
                      << (col.type == ColumnType::Numeric ? "numeric" : "categorical") << " missing="
                      << col.missing_count() << '\n';
        std::cout << "labels: benign=" << labels.benign_count << " ddos=" << labels.ddos_count << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error [load]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int cmd_synth(const SynthOptions& opt) {
    try {
        const auto cfg = parse_synth_config(opt.synth);
        const auto raw = to_raw(generate(cfg), cfg);
        if (opt.out.empty() || opt.out == "-") {
            write_csv(raw, std::cout, opt.label_column);
        } else {
            std::ofstream out(opt.out, std::ios::binary);
            if (!out) throw Error("cannot write '" + opt.out + "'");
            write_csv(raw, out, opt.label_column);
        }
    } catch (const std::exception& e) {
        std::cerr << "error [synth]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int cmd_evaluate(const EvaluateOptions& opt) {
    std::string stage = "load";
    try {
        std::ifstream model_in(opt.model, std::ios::binary);
        if (!model_in) throw Error("cannot open '" + opt.model + "'");
        const auto model = load_model(model_in);

        const auto raw = impute_missing(load_csv(opt.data, opt.label_column));
        Dataset ds = opt.categories.empty() ? encode_categoricals(raw).dataset
                                            : apply_encoding(raw, category_maps_from_json(read_file(opt.categories)));
        stage = "standardize";
        if (!opt.scaler.empty()) ds = apply_scaler(scaler_from_json(read_file(opt.scaler)), ds);

        stage = "evaluate";
        if (ds.features() != model.arity())
            throw Error("model expects " + std::to_string(model.arity()) + " features, data has " +
                        std::to_string(ds.features()));
        const auto preds = model.predict(ds);
        RocCurve roc;
        const auto m = evaluate_predictions(ds.y, preds.labels, preds.probabilities, &roc);

        char line[64];
        const auto print = [&](const char* name, double v) {
            std::snprintf(line, sizeof line, "%-10s %.4f\n", name, v);
            std::cout << line;
        };
        std::cout << "model      " << kind_name(model.spec().kind) << '\n';
        std::cout << "rows       " << ds.rows() << '\n';
        print("accuracy", m.accuracy);
        print("precision", m.precision);
        print("recall", m.recall);
        print("f1", m.f1);
        print("auc", m.auc);
        print("kappa", m.kappa);
        print("mcc", m.mcc);
        print("brier", m.brier);
        std::cout << "confusion  tp=" << m.cm.tp << " tn=" << m.cm.tn << " fp=" << m.cm.fp << " fn=" << m.cm.fn
                  << '\n';
        if (!opt.roc.empty()) {
            std::ofstream out(opt.roc, std::ios::binary);
            if (!out) throw Error("cannot write '" + opt.roc + "'");
            write_roc_csv(roc, out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowguard: DDoS flow classification pipeline"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "split, preprocess, tune and evaluate every model on both tracks");
    run_cmd->add_option("--config", run.config,
                        "flat key=value file (keys: data, synth, label_column, out, split_ratio, cv_folds, seed, "
                        "tracks, models, smote.*, lof.*, grid.<MODEL>.<param>, param.<MODEL>.<param>, "
                        "feature_select_top, timestamp)");
    auto* data_opt = run_cmd->add_option("--data", run.data, "input CSV");
    auto* synth_opt = run_cmd->add_option("--synth", run.synth, "synthetic source, e.g. \"sep=6,n=2000\"");
    data_opt->excludes(synth_opt);
    run_cmd->add_option("--label-column", run.label_column, "label column name [label]");
    run_cmd->add_option("--tracks", run.tracks, "comma list of imbalanced,balanced [both]");
    run_cmd->add_option("--models", run.models, "comma list of RF,SVC,KNN,MLP,GBT [all]");
    run_cmd->add_option("--seed", run.seed, "master seed [0]");
    run_cmd->add_option("--folds", run.folds, "cross-validation folds [5]");
    run_cmd->add_option("--split-ratio", run.split_ratio, "training share of the split [0.8]");
    run_cmd->add_option("--timestamp", run.timestamp,
                        "report timestamp [SOURCE_DATE_EPOCH if set, otherwise \"unset\"]");
    run_cmd->add_option("--out", run.out, "output directory");
    run_cmd->add_flag("--no-models", run.no_models, "skip writing trained models and scalers");

    InspectOptions inspect;
    auto* inspect_cmd = app.add_subcommand("inspect", "print row count, schema and label counts of a CSV");
    inspect_cmd->add_option("--data,data", inspect.data, "input CSV")->required();
    inspect_cmd->add_option("--label-column", inspect.label_column, "label column name")->capture_default_str();

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "emit a synthetic flow CSV");
    synth_cmd->add_option("--synth,spec", synth.synth,
                          "n, n_benign, n_ddos, features [22], sep [2], noise [0], seed [0]")
        ->required();
    synth_cmd->add_option("--out", synth.out, "output CSV [stdout]");
    synth_cmd->add_option("--label-column", synth.label_column, "label column name")->capture_default_str();

    EvaluateOptions eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "score a saved model on a CSV");
    eval_cmd->add_option("--model", eval.model, "saved model file")->required();
    eval_cmd->add_option("--data", eval.data, "input CSV")->required();
    eval_cmd->add_option("--scaler", eval.scaler, "scaler JSON written by run");
    eval_cmd->add_option("--categories", eval.categories, "categories.json written by run");
    eval_cmd->add_option("--label-column", eval.label_column, "label column name")->capture_default_str();
    eval_cmd->add_option("--roc", eval.roc, "write the ROC curve to this CSV");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) return cmd_run(run);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect);
    if (synth_cmd->parsed()) return cmd_synth(synth);
    return cmd_evaluate(eval);
}

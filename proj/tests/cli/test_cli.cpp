#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = -1;
    std::string output;
};

Result cli(const std::string& args) {
    const std::string cmd = std::string(FLOWGUARD_CLI) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("flowguard_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::size_t count_prefix(const fs::path& dir, const std::string& prefix) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename().string().rfind(prefix, 0) == 0) ++n;
    return n;
}

const std::string kSmall = "--synth \"sep=6,n=120\" --folds 3";

}  // namespace

TEST_CASE("run writes the report, plot data and models") {
    const auto dir = scratch("run");
    const auto r = cli("run " + kSmall + " --out " + (dir / "a").string());
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(fs::exists(dir / "a" / "report.json"));
    CHECK(count_prefix(dir / "a", "roc_") == 10);
    CHECK(count_prefix(dir / "a", "validation_curve_") == 10);
    CHECK(count_prefix(dir / "a", "confusion_") == 10);
    CHECK(fs::exists(dir / "a" / "categories.json"));
    CHECK(fs::exists(dir / "a" / "models" / "gbt_balanced.model"));
    CHECK(fs::exists(dir / "a" / "models" / "scaler_imbalanced.json"));

    // Every printed figure is in the report.
    const auto report = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
    std::istringstream lines(r.output);
    std::string line;
    std::getline(lines, line);
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::string model, track, acc, auc;
        fields >> model >> track >> acc >> auc;
        bool found = false;
        for (const auto& s : report["summary"])
            found |= s["model"] == model && s["track"] == track && s["test_accuracy"] == acc && s["auc"] == auc;
        CHECK_MESSAGE(found, line);
        ++rows;
    }
    CHECK(rows == 10);

    const auto again = cli("run " + kSmall + " --out " + (dir / "b").string());
    REQUIRE(again.status == 0);
    CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
    CHECK(again.output == r.output);
    fs::remove_all(dir);
}

TEST_CASE("run on a CSV with a track filter, then evaluate a saved model") {
    const auto dir = scratch("csv");
    const auto csv = (dir / "flows.csv").string();
    REQUIRE(cli("synth --synth \"sep=6,n=100,seed=4\" --label-column class --out " + csv).status == 0);
    const auto r = cli("run --data " + csv + " --label-column class --tracks balanced --folds 3 --out " +
                       (dir / "out").string());
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    REQUIRE(report["tracks"].size() == 1);
    CHECK(report["tracks"][0]["track"] == "balanced");
    CHECK(report["config"]["tracks"] == nlohmann::json::array({"balanced"}));
    CHECK(count_prefix(dir / "out", "roc_") == 5);

    const auto models = dir / "out" / "models";
    const auto e = cli("evaluate --model " + (models / "rf_balanced.model").string() + " --data " + csv +
                       " --label-column class --scaler " + (models / "scaler_balanced.json").string() +
                       " --categories " + (dir / "out" / "categories.json").string());
    REQUIRE_MESSAGE(e.status == 0, e.output);
    CHECK(e.output.find("accuracy   1.0000") != std::string::npos);
    CHECK(e.output.find("rows       200") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("config file values yield to flags") {
    const auto dir = scratch("config");
    const auto cfg = dir / "run.cfg";
    std::ofstream(cfg) << "# small run\nsynth = sep=6,n=80\nseed = 3\ncv_folds = 3\nmodels = KNN\ntracks = imbalanced\n";
    const auto r = cli("run --config " + cfg.string() + " --seed 4 --out " + (dir / "out").string());
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    CHECK(report["config"]["seed"] == 4);
    CHECK(report["config"]["cv_folds"] == 3);
    CHECK(report["config"]["models"] == nlohmann::json::array({"KNN"}));
    fs::remove_all(dir);
}

TEST_CASE("run rejects bad manifests") {
    const auto dir = scratch("bad");
    const auto out = " --out " + (dir / "o").string();
    auto r = cli("run --bogus" + out);
    CHECK(r.status != 0);
    CHECK(r.output.find("Usage") != std::string::npos);
    r = cli("run --synth n=10 --data x.csv" + out);
    CHECK(r.status != 0);
    r = cli("run" + out);
    CHECK(r.status != 0);
    CHECK(r.output.find("exactly one") != std::string::npos);
    r = cli("run --synth n=10 --tracks sideways" + out);
    CHECK(r.status != 0);
    CHECK(r.output.find("error [config]") != std::string::npos);
    r = cli("run --data /nonexistent.csv" + out);
    CHECK(r.status != 0);
    CHECK(r.output.find("error [load]") != std::string::npos);
    r = cli("run --synth \"n=3\" --models KNN" + out);
    CHECK(r.status != 0);
    CHECK(r.output.find("error [experiment/") != std::string::npos);
    r = cli("");
    CHECK(r.status != 0);
    fs::remove_all(dir);
}

TEST_CASE("inspect prints counts and schema") {
    const auto dir = scratch("inspect");
    const auto csv = (dir / "s.csv").string();
    REQUIRE(cli("synth --synth \"n_benign=6,n_ddos=4\" --out " + csv).status == 0);
    auto r = cli("inspect " + csv);
    REQUIRE(r.status == 0);
    CHECK(r.output.find("rows: 10\n") != std::string::npos);
    CHECK(r.output.find("features: 22\n") != std::string::npos);
    CHECK(r.output.find("Protocol categorical") != std::string::npos);
    CHECK(r.output.find("labels: benign=6 ddos=4") != std::string::npos);

    const auto empty = dir / "empty.csv";
    std::ofstream(empty) << "a,b,label\n";
    r = cli("inspect --data " + empty.string());
    CHECK(r.status == 0);
    CHECK(r.output.find("rows: 0\n") != std::string::npos);

    CHECK(cli("inspect " + (dir / "missing.csv").string()).status != 0);
    fs::remove_all(dir);
}

TEST_CASE("synth output is deterministic") {
    const auto a = cli("synth --synth \"n=5,seed=2\"");
    const auto b = cli("synth --synth \"n=5,seed=2\"");
    REQUIRE(a.status == 0);
    CHECK(a.output == b.output);
    CHECK(std::count(a.output.begin(), a.output.end(), '\n') == 11);
    CHECK(cli("synth --synth \"bogus=1\"").status != 0);
}

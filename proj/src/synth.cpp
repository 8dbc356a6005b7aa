#include "flowguard/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace flowguard {

namespace {

const char* const kSdnNames[22] = {"dt",         "switch",      "src",      "dst",      "pktcount", "bytecount",
                                   "dur",        "dur_nsec",    "tot_dur",  "flows",    "packetins", "pktperflow",
                                   "byteperflow", "pktrate",    "Pairflow", "Protocol", "port_no",  "tx_bytes",
                                   "rx_bytes",   "tx_kbps",     "rx_kbps",  "tot_kbps"};

const char* const kProtocols[3] = {"UDP", "TCP", "ICMP"};

double parse_double(std::string_view key, std::string_view value) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw Error("synth config: bad value for '" + std::string(key) + "'");
    return v;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
    const double v = parse_double(key, value);
    if (v < 0 || v != std::floor(v)) throw Error("synth config: '" + std::string(key) + "' must be a count");
    return static_cast<std::size_t>(v);
}

}  // namespace

void validate(const SynthConfig& cfg) {
    if (cfg.n_features < 2) throw Error("synth: n_features must be at least 2");
    if (!(cfg.class_separation >= 0.0) || !std::isfinite(cfg.class_separation))
        throw Error("synth: class_separation must be finite and non-negative");
    if (!(cfg.noise_fraction >= 0.0 && cfg.noise_fraction < 1.0)) throw Error("synth: noise_fraction must lie in [0,1)");
}

std::vector<std::size_t> categorical_features(std::size_t n_features) {
    return {std::min<std::size_t>(15, n_features - 1)};
}

std::vector<std::string> synth_feature_names(std::size_t n_features) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n_features; ++i)
        names.push_back(n_features == 22 ? std::string(kSdnNames[i]) : "f" + std::to_string(i));
    return names;
}

Dataset generate(const SynthConfig& cfg) {
    validate(cfg);
    const std::size_t n = cfg.n_benign + cfg.n_ddos;
    const std::size_t d = cfg.n_features;
    Rng rng(cfg.seed);

    std::vector<int> labels(n, 0);
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(cfg.n_benign), labels.end(), 1);
    rng.shuffle(labels);

    const auto cats = categorical_features(d);
    const double cut = cfg.class_separation / 2.0;
    Dataset ds;
    ds.feature_names = synth_feature_names(d);
    ds.X = Matrix(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        const double mean = labels[r] == 1 ? cfg.class_separation : 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double v = mean + rng.normal();
            if (std::find(cats.begin(), cats.end(), c) != cats.end())
                ds.X(r, c) = v < cut - 0.5 ? 0.0 : (v < cut + 0.5 ? 1.0 : 2.0);
            else
                ds.X(r, c) = v;
        }
    }

    // Flip an exact share of labels, chosen without replacement.
    const auto flips = static_cast<std::size_t>(std::llround(cfg.noise_fraction * static_cast<double>(n)));
    if (flips > 0) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (std::size_t i = 0; i < flips; ++i) labels[order[i]] = 1 - labels[order[i]];
    }
    ds.y = std::move(labels);

    std::ostringstream tag;
    tag << "synth:n_benign=" << cfg.n_benign << ",n_ddos=" << cfg.n_ddos << ",features=" << d
        << ",sep=" << cfg.class_separation << ",noise=" << cfg.noise_fraction << ",seed=" << cfg.seed;
    ds.provenance = tag.str();
    return ds;
}

RawDataset to_raw(const Dataset& ds, const SynthConfig& cfg) {
    const auto cats = categorical_features(cfg.n_features);
    RawDataset raw;
    raw.labels = ds.y;
    raw.provenance = ds.provenance;
    for (std::size_t c = 0; c < ds.features(); ++c) {
        RawColumn col;
        col.name = ds.feature_names[c];
        if (std::find(cats.begin(), cats.end(), c) != cats.end()) {
            col.type = ColumnType::Categorical;
            for (std::size_t r = 0; r < ds.rows(); ++r)
                col.tokens.emplace_back(kProtocols[static_cast<std::size_t>(ds.X(r, c))]);
        } else {
            for (std::size_t r = 0; r < ds.rows(); ++r) col.numbers.push_back(ds.X(r, c));
        }
        raw.columns.push_back(std::move(col));
    }
    return raw;
}

SynthConfig parse_synth_config(std::string_view text) {
    SynthConfig cfg;
    while (!text.empty()) {
        const auto comma = text.find(',');
        auto item = text.substr(0, comma);
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw Error("synth config: expected key=value, got '" + std::string(item) + "'");
        const auto key = item.substr(0, eq);
        const auto value = item.substr(eq + 1);
        if (key == "n") {
            cfg.n_benign = cfg.n_ddos = parse_count(key, value);
        } else if (key == "n_benign") {
            cfg.n_benign = parse_count(key, value);
        } else if (key == "n_ddos") {
            cfg.n_ddos = parse_count(key, value);
        } else if (key == "features") {
            cfg.n_features = parse_count(key, value);
        } else if (key == "sep") {
            cfg.class_separation = parse_double(key, value);
        } else if (key == "noise") {
            cfg.noise_fraction = parse_double(key, value);
        } else if (key == "seed") {
            cfg.seed = parse_count(key, value);
        } else {
            throw Error("synth config: unknown key '" + std::string(key) + "'");
        }
    }
    validate(cfg);
    return cfg;
}

}  // namespace flowguard

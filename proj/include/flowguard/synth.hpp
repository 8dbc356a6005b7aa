#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flowguard/dataset.hpp"

namespace flowguard {

/// Gaussian two-class stand-in for SDN flow statistics. Benign rows are drawn
/// around 0, DDoS rows around class_separation in every feature, unit
/// within-class variance.
struct SynthConfig {
    std::size_t n_benign = 1000;
    std::size_t n_ddos = 1000;
    std::size_t n_features = 22;
    double class_separation = 2.0;
    double noise_fraction = 0.0;  // share of labels flipped
    std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);

/// Columns carrying protocol-like codes in {0, 1, 2}.
std::vector<std::size_t> categorical_features(std::size_t n_features);

/// Feature names: the usual SDN flow-statistics schema for 22 features,
/// f0..f{n-1} otherwise.
std::vector<std::string> synth_feature_names(std::size_t n_features);

Dataset generate(const SynthConfig& cfg);

/// Same records with categorical codes rendered as protocol tokens, ready for
/// write_csv.
RawDataset to_raw(const Dataset& ds, const SynthConfig& cfg);

/// Parses "sep=6,n=2000,noise=0.01,features=22,seed=3,n_benign=..,n_ddos=..".
/// `n` sets both class counts.
SynthConfig parse_synth_config(std::string_view text);

}  // namespace flowguard

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowguard/common.hpp"

namespace flowguard {

enum class ColumnType { Numeric, Categorical };

/// One feature column as read from disk, before cleaning and encoding.
/// Missing numeric cells are NaN; missing categorical cells are nullopt.
struct RawColumn {
    std::string name;
    ColumnType type = ColumnType::Numeric;
    std::vector<double> numbers;
    std::vector<std::optional<std::string>> tokens;

    std::size_t size() const { return type == ColumnType::Numeric ? numbers.size() : tokens.size(); }
    std::size_t missing_count() const;
};

/// Flow records with typed raw columns and binary labels (0 benign, 1 DDoS).
struct RawDataset {
    std::vector<RawColumn> columns;
    std::vector<int> labels;
    std::string provenance;

    std::size_t rows() const { return labels.size(); }
    std::size_t features() const { return columns.size(); }
    std::size_t missing_count() const;
};

/// Numeric feature matrix with labels; all entries finite.
struct Dataset {
    std::vector<std::string> feature_names;
    Matrix X;
    std::vector<int> y;
    std::string provenance;

    std::size_t rows() const { return y.size(); }
    std::size_t features() const { return feature_names.size(); }

    Dataset subset(std::span<const std::size_t> indices) const;
    Dataset select_features(std::span<const std::size_t> columns) const;
    void validate() const;
};

struct LabelDistribution {
    std::size_t benign_count = 0;
    std::size_t ddos_count = 0;
    std::size_t total = 0;

    friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;
};

/// Train/test partition. The index vectors refer to rows of the source
/// dataset, in ascending order.
struct SplitPair {
    Dataset train;
    Dataset test;
    double ratio = 0.8;
    std::uint64_t seed = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;

    /// Hash of the index partition; identical splits hash identically.
    std::uint64_t hash() const;
};

/// Category tokens per categorical column, in code order.
using CategoryMaps = std::map<std::string, std::vector<std::string>>;

struct EncodedDataset {
    Dataset dataset;
    CategoryMaps categories;
};

RawDataset load_csv(const std::filesystem::path& path, std::string_view label_column = "label");
RawDataset parse_csv(std::istream& in, std::string_view label_column = "label",
                     std::string provenance = "stream");

/// Median for numeric gaps, mode (lexicographically smallest on ties) for
/// categorical gaps.
RawDataset impute_missing(const RawDataset& ds);

/// Ordinal codes in order of first appearance; feature count unchanged.
EncodedDataset encode_categoricals(const RawDataset& ds);

/// Encodes with a stored mapping. Unseen tokens get code = number of known
/// categories for that column.
Dataset apply_encoding(const RawDataset& ds, const CategoryMaps& categories);

std::vector<std::string> decode_column(std::span<const double> codes,
                                       const std::vector<std::string>& categories);

SplitPair stratified_split(const Dataset& ds, double ratio, std::uint64_t seed);

LabelDistribution label_distribution(std::span<const int> labels);
inline LabelDistribution label_distribution(const Dataset& ds) { return label_distribution(ds.y); }
inline LabelDistribution label_distribution(const RawDataset& ds) { return label_distribution(ds.labels); }

/// Full cleaning path used by the experiment and the CLI.
EncodedDataset prepare_dataset(const RawDataset& raw);

void write_csv(const RawDataset& ds, std::ostream& out, std::string_view label_column = "label");
void write_csv(const Dataset& ds, std::ostream& out, std::string_view label_column = "label");

std::string category_maps_to_json(const CategoryMaps& categories);
CategoryMaps category_maps_from_json(std::string_view text);

}  // namespace flowguard

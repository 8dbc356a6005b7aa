#include "flowguard/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace flowguard {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool is_missing_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "?";
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::string(trim(current)));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::string(trim(current)));
    return fields;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::size_t RawColumn::missing_count() const {
    if (type == ColumnType::Numeric)
        return static_cast<std::size_t>(std::count_if(numbers.begin(), numbers.end(),
                                                      [](double v) { return std::isnan(v); }));
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const auto& t) { return !t.has_value(); }));
}

std::size_t RawDataset::missing_count() const {
    std::size_t n = 0;
    for (const auto& c : columns) n += c.missing_count();
    return n;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.feature_names = feature_names;
    out.X = X.select_rows(indices);
    out.y.reserve(indices.size());
    for (auto i : indices) out.y.push_back(y[i]);
    out.provenance = provenance;
    return out;
}

Dataset Dataset::select_features(std::span<const std::size_t> columns) const {
    Dataset out;
    for (auto c : columns) out.feature_names.push_back(feature_names.at(c));
    out.X = X.select_cols(columns);
    out.y = y;
    out.provenance = provenance;
    return out;
}

void Dataset::validate() const {
    if (X.rows() != y.size()) throw Error("dataset: row count does not match label count");
    if (X.rows() > 0 && X.cols() != feature_names.size())
        throw Error("dataset: column count does not match feature names");
    for (int label : y)
        if (label != 0 && label != 1) throw Error("dataset: label outside {0,1}");
    for (double v : X.data())
        if (!std::isfinite(v)) throw Error("dataset: non-finite feature value");
}

std::uint64_t SplitPair::hash() const {
    std::vector<std::uint64_t> words;
    words.reserve(train_indices.size() + test_indices.size() + 2);
    words.push_back(train_indices.size());
    words.insert(words.end(), train_indices.begin(), train_indices.end());
    words.push_back(test_indices.size());
    words.insert(words.end(), test_indices.begin(), test_indices.end());
    return fnv1a(words);
}

RawDataset parse_csv(std::istream& in, std::string_view label_column, std::string provenance) {
    std::string line;
    if (!std::getline(in, line)) throw Error("load_csv: missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_record(line);

    std::optional<std::size_t> label_pos;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) {
            if (label_pos) throw Error("load_csv: duplicate label column '" + std::string(label_column) + "'");
            label_pos = i;
        }
    }
    if (!label_pos) throw Error("load_csv: label column '" + std::string(label_column) + "' not found");

    std::vector<std::vector<std::string>> cells(header.size() - 1);
    RawDataset ds;
    ds.provenance = std::move(provenance);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_record(line);
        if (fields.size() != header.size())
            throw Error("load_csv: row at line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(header.size()));
        const auto label = parse_number(fields[*label_pos]);
        if (!label || (*label != 0.0 && *label != 1.0))
            throw Error("load_csv: row at line " + std::to_string(line_no) + " has label '" +
                        fields[*label_pos] + "' outside {0,1}");
        ds.labels.push_back(static_cast<int>(*label));
        for (std::size_t i = 0, c = 0; i < fields.size(); ++i) {
            if (i == *label_pos) continue;
            cells[c++].push_back(std::move(fields[i]));
        }
    }

    for (std::size_t i = 0, c = 0; i < header.size(); ++i) {
        if (i == *label_pos) continue;
        RawColumn col;
        col.name = header[i];
        auto& raw = cells[c++];
        const bool numeric = std::all_of(raw.begin(), raw.end(), [](const std::string& s) {
            return is_missing_token(s) || parse_number(s).has_value();
        });
        if (numeric) {
            col.type = ColumnType::Numeric;
            col.numbers.reserve(raw.size());
            for (const auto& s : raw) col.numbers.push_back(is_missing_token(s) ? kMissing : *parse_number(s));
        } else {
            col.type = ColumnType::Categorical;
            col.tokens.reserve(raw.size());
            for (auto& s : raw) {
                if (is_missing_token(s))
                    col.tokens.emplace_back(std::nullopt);
                else
                    col.tokens.emplace_back(std::move(s));
            }
        }
        ds.columns.push_back(std::move(col));
    }
    return ds;
}

RawDataset load_csv(const std::filesystem::path& path, std::string_view label_column) {
    std::ifstream in(path);
    if (!in) throw Error("load_csv: cannot open '" + path.string() + "'");
    return parse_csv(in, label_column, path.string());
}

RawDataset impute_missing(const RawDataset& ds) {
    RawDataset out = ds;
    for (auto& col : out.columns) {
        if (col.missing_count() == 0) continue;
        if (col.missing_count() == col.size())
            throw Error("impute_missing: column '" + col.name + "' has no observed values");
        if (col.type == ColumnType::Numeric) {
            std::vector<double> observed;
            for (double v : col.numbers)
                if (!std::isnan(v)) observed.push_back(v);
            std::sort(observed.begin(), observed.end());
            const std::size_t n = observed.size();
            const double median = n % 2 == 1 ? observed[n / 2] : 0.5 * (observed[n / 2 - 1] + observed[n / 2]);
            for (double& v : col.numbers)
                if (std::isnan(v)) v = median;
        } else {
            std::map<std::string, std::size_t> counts;
            for (const auto& t : col.tokens)
                if (t) ++counts[*t];
            // std::map iterates lexicographically, so the first maximum wins ties.
            auto best = counts.begin();
            for (auto it = counts.begin(); it != counts.end(); ++it)
                if (it->second > best->second) best = it;
            for (auto& t : col.tokens)
                if (!t) t = best->first;
        }
    }
    return out;
}

EncodedDataset encode_categoricals(const RawDataset& ds) {
    CategoryMaps maps;
    for (const auto& col : ds.columns) {
        if (col.type != ColumnType::Categorical) continue;
        std::vector<std::string> order;
        std::unordered_map<std::string, std::size_t> seen;
        for (const auto& t : col.tokens) {
            if (!t) throw Error("encode_categoricals: column '" + col.name + "' has missing values");
            if (seen.emplace(*t, order.size()).second) order.push_back(*t);
        }
        maps[col.name] = std::move(order);
    }
    return {apply_encoding(ds, maps), std::move(maps)};
}

Dataset apply_encoding(const RawDataset& ds, const CategoryMaps& categories) {
    Dataset out;
    out.y = ds.labels;
    out.provenance = ds.provenance;
    out.X = Matrix(ds.rows(), ds.features());
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        const auto& col = ds.columns[c];
        out.feature_names.push_back(col.name);
        if (col.size() != ds.rows()) throw Error("apply_encoding: column '" + col.name + "' length mismatch");
        if (col.type == ColumnType::Numeric) {
            for (std::size_t r = 0; r < ds.rows(); ++r) {
                if (std::isnan(col.numbers[r]))
                    throw Error("apply_encoding: column '" + col.name + "' has missing values");
                out.X(r, c) = col.numbers[r];
            }
            continue;
        }
        const auto found = categories.find(col.name);
        const std::vector<std::string> empty;
        const auto& known = found == categories.end() ? empty : found->second;
        std::unordered_map<std::string, std::size_t> code;
        for (std::size_t i = 0; i < known.size(); ++i) code.emplace(known[i], i);
        for (std::size_t r = 0; r < ds.rows(); ++r) {
            const auto& t = col.tokens[r];
            if (!t) throw Error("apply_encoding: column '" + col.name + "' has missing values");
            const auto it = code.find(*t);
            out.X(r, c) = static_cast<double>(it == code.end() ? known.size() : it->second);
        }
    }
    return out;
}

std::vector<std::string> decode_column(std::span<const double> codes, const std::vector<std::string>& categories) {
    std::vector<std::string> out;
    out.reserve(codes.size());
    for (double c : codes) {
        const auto i = static_cast<std::size_t>(c);
        out.push_back(i < categories.size() ? categories[i] : std::string("<unknown>"));
    }
    return out;
}

SplitPair stratified_split(const Dataset& ds, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error("stratified_split: ratio must lie in (0,1)");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < ds.rows(); ++i) by_class[ds.y[i]].push_back(i);
    for (int c = 0; c < 2; ++c)
        if (by_class[c].size() < 2)
            throw Error("stratified_split: class " + std::to_string(c) + " has fewer than 2 records");

    SplitPair split;
    split.ratio = ratio;
    split.seed = seed;
    Rng rng(seed);
    for (auto& members : by_class) {
        rng.shuffle(members);
        // The epsilon keeps products such as 0.8 * 5 from flooring to 3.
        const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(members.size()) + 1e-9));
        split.train_indices.insert(split.train_indices.end(), members.begin(), members.begin() + n_train);
        split.test_indices.insert(split.test_indices.end(), members.begin() + n_train, members.end());
    }
    std::sort(split.train_indices.begin(), split.train_indices.end());
    std::sort(split.test_indices.begin(), split.test_indices.end());
    split.train = ds.subset(split.train_indices);
    split.test = ds.subset(split.test_indices);
    return split;
}

LabelDistribution label_distribution(std::span<const int> labels) {
    LabelDistribution d;
    for (int label : labels) (label == 1 ? d.ddos_count : d.benign_count)++;
    d.total = labels.size();
    return d;
}

EncodedDataset prepare_dataset(const RawDataset& raw) {
    auto encoded = encode_categoricals(impute_missing(raw));
    encoded.dataset.validate();
    return encoded;
}

void write_csv(const RawDataset& ds, std::ostream& out, std::string_view label_column) {
    for (const auto& col : ds.columns) out << quote_if_needed(col.name) << ',';
    out << label_column << '\n';
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (const auto& col : ds.columns) {
            if (col.type == ColumnType::Numeric) {
                if (!std::isnan(col.numbers[r])) out << format_number(col.numbers[r]);
            } else if (col.tokens[r]) {
                out << quote_if_needed(*col.tokens[r]);
            }
            out << ',';
        }
        out << ds.labels[r] << '\n';
    }
}

void write_csv(const Dataset& ds, std::ostream& out, std::string_view label_column) {
    for (const auto& name : ds.feature_names) out << quote_if_needed(name) << ',';
    out << label_column << '\n';
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (double v : ds.X.row(r)) out << format_number(v) << ',';
        out << ds.y[r] << '\n';
    }
}

std::string category_maps_to_json(const CategoryMaps& categories) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto& [name, tokens] : categories) doc[name] = tokens;
    return doc.dump(2) + "\n";
}

CategoryMaps category_maps_from_json(std::string_view text) {
    CategoryMaps maps;
    try {
        const auto doc = nlohmann::json::parse(text);
        for (const auto& [name, tokens] : doc.items()) maps[name] = tokens.get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("category map: ") + e.what());
    }
    return maps;
}

}  // namespace flowguard

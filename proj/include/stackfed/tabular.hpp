#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stackfed {

enum class FeatureKind { kNumeric, kCategorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Ordered category labels; empty for numeric features.
  std::vector<std::string> vocabulary;

  bool is_categorical() const { return kind == FeatureKind::kCategorical; }
  std::optional<std::uint32_t> category_index(std::string_view label) const;
};

// Raw feature layout shared between clients. Validated on construction:
// unique names, non-empty duplicate-free vocabularies, target not a feature.
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<FeatureSpec> features, std::string target_name);

  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& feature(std::size_t i) const { return features_[i]; }
  std::size_t size() const { return features_.size(); }
  const std::string& target_name() const { return target_name_; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  std::vector<std::string> feature_names() const;

  friend bool operator==(const Schema& a, const Schema& b) {
    return a.target_name_ == b.target_name_ && a.features_.size() == b.features_.size() &&
           std::equal(a.features_.begin(), a.features_.end(), b.features_.begin(),
                      [](const FeatureSpec& x, const FeatureSpec& y) {
                        return x.name == y.name && x.kind == y.kind &&
                               x.vocabulary == y.vocabulary;
                      });
  }

 private:
  std::vector<FeatureSpec> features_;
  std::string target_name_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One raw feature column. Numeric features use `numeric`, categorical ones use
// `codes` (indices into the feature's vocabulary). `missing` is the explicit
// missing-cell marker; the value slot of a missing cell is meaningless.
struct RawColumn {
  std::vector<double> numeric;
  std::vector<std::uint32_t> codes;
  std::vector<std::uint8_t> missing;
};

class Dataset {
 public:
  Dataset() = default;
  // `labels` index into `class_names`. `label_missing` may be empty (no
  // missing targets).
  Dataset(Schema schema, std::vector<RawColumn> columns, std::vector<int> labels,
          std::vector<std::string> class_names,
          std::vector<std::uint8_t> label_missing = {});

  const Schema& schema() const { return schema_; }
  std::size_t num_rows() const { return labels_.size(); }
  std::size_t num_features() const { return schema_.size(); }
  const RawColumn& column(std::size_t f) const { return columns_[f]; }
  std::span<const int> labels() const { return labels_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t num_classes() const { return class_names_.size(); }

  bool is_missing(std::size_t row, std::size_t f) const {
    return columns_[f].missing[row] != 0;
  }
  bool label_missing(std::size_t row) const {
    return !label_missing_.empty() && label_missing_[row] != 0;
  }
  bool has_missing() const;

  double numeric(std::size_t row, std::size_t f) const { return columns_[f].numeric[row]; }
  std::uint32_t code(std::size_t row, std::size_t f) const { return columns_[f].codes[row]; }
  const std::string& category(std::size_t row, std::size_t f) const {
    return schema_.feature(f).vocabulary[columns_[f].codes[row]];
  }

  // Counts of non-missing labels per class index.
  std::vector<std::size_t> class_counts() const;
  // Fraction of rows with label 1 (binary datasets).
  double positive_fraction() const;

  Dataset subset(std::span<const std::size_t> rows) const;
  // Keeps the named features in schema order; unknown names are an error.
  Dataset select_features(std::span<const std::string> names) const;
  Dataset drop_feature(std::string_view name) const;

 private:
  Schema schema_;
  std::vector<RawColumn> columns_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
  std::vector<std::uint8_t> label_missing_;
};

// Dense one-hot encoding, stored column-major.
struct EncodedMatrix {
  std::vector<std::string> columns;
  // raw_of[c] is the raw feature encoded column c came from.
  std::vector<std::string> raw_of;
  std::size_t rows = 0;
  std::vector<double> values;

  std::size_t num_columns() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return values[c * rows + r]; }
  std::span<const double> column(std::size_t c) const {
    return {values.data() + c * rows, rows};
  }
  std::span<double> column(std::size_t c) { return {values.data() + c * rows, rows}; }

  static EncodedMatrix zeros(std::vector<std::string> columns,
                             std::vector<std::string> raw_of, std::size_t rows);
  EncodedMatrix select_rows(std::span<const std::size_t> rows) const;
};

struct SplitTriple {
  std::vector<std::size_t> train;
  std::vector<std::size_t> meta_train;
  std::vector<std::size_t> test;

  // train followed by meta_train, sorted.
  std::vector<std::size_t> pooled() const;
};

inline constexpr std::array<double, 3> kDefaultSplitFractions{0.6, 0.2, 0.2};

Dataset parse_csv(std::istream& in, std::string_view target_name);
Dataset load_csv(const std::filesystem::path& path, std::string_view target_name);
// Writes raw values back in the load_csv dialect (missing cells empty).
void write_csv(const Dataset& d, std::ostream& out);

Dataset preprocess_binary(const Dataset& d);

// Encoded column names in schema order: numeric features verbatim,
// categorical features expanded to "name=label" per vocabulary entry.
std::vector<std::string> encoded_columns(const Schema& schema);
EncodedMatrix encode(const Dataset& d, const Schema& schema);

SplitTriple stratified_split(const Dataset& d,
                             std::array<double, 3> fractions,
                             std::uint64_t seed);

// Per-class row count of each split part for a class of `n` rows; used both
// by stratified_split and by callers that need to predict split sizes.
std::array<std::size_t, 3> stratum_sizes(std::size_t n,
                                         std::array<double, 3> fractions);

}  // namespace stackfed

#include "stackfed/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "stackfed/csv.hpp"
#include "stackfed/error.hpp"
#include "stackfed/rng.hpp"

namespace stackfed {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

bool is_blank_record(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim(fields[0]).empty();
}

}  // namespace

std::optional<std::uint32_t> FeatureSpec::category_index(std::string_view label) const {
  const auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), label);
  if (it != vocabulary.end() && *it == label) {
    return static_cast<std::uint32_t>(it - vocabulary.begin());
  }
  // Vocabularies built by this library are sorted; fall back to a scan for
  // hand-ordered ones.
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i] == label) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

Schema::Schema(std::vector<FeatureSpec> features, std::string target_name)
    : features_(std::move(features)), target_name_(std::move(target_name)) {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const FeatureSpec& f = features_[i];
    if (f.name == target_name_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "target '" + target_name_ + "' listed among features");
    }
    if (!index_.emplace(f.name, i).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate feature name '" + f.name + "'");
    }
    if (f.is_categorical()) {
      if (f.vocabulary.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "categorical feature '" + f.name + "' has an empty vocabulary");
      }
      std::set<std::string> seen(f.vocabulary.begin(), f.vocabulary.end());
      if (seen.size() != f.vocabulary.size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "categorical feature '" + f.name + "' has duplicate categories");
      }
    } else if (!f.vocabulary.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "numeric feature '" + f.name + "' carries a vocabulary");
    }
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Schema::feature_names() const {
  std::vector<std::string> names;
  names.reserve(features_.size());
  for (const auto& f : features_) names.push_back(f.name);
  return names;
}

Dataset::Dataset(Schema schema, std::vector<RawColumn> columns, std::vector<int> labels,
                 std::vector<std::string> class_names,
                 std::vector<std::uint8_t> label_missing)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)),
      label_missing_(std::move(label_missing)) {
  const std::size_t n = labels_.size();
  if (columns_.size() != schema_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "column count does not match schema");
  }
  if (!label_missing_.empty() && label_missing_.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "label mask length mismatch");
  }
  for (std::size_t f = 0; f < columns_.size(); ++f) {
    const FeatureSpec& spec = schema_.feature(f);
    RawColumn& col = columns_[f];
    if (col.missing.empty()) col.missing.assign(n, 0);
    const std::size_t len = spec.is_categorical() ? col.codes.size() : col.numeric.size();
    if (len != n || col.missing.size() != n) {
      throw Error(ErrorCode::kInvalidArgument,
                  "column '" + spec.name + "' length does not match label count");
    }
    if (spec.is_categorical()) {
      for (std::size_t r = 0; r < n; ++r) {
        if (!col.missing[r] && col.codes[r] >= spec.vocabulary.size()) {
          throw Error(ErrorCode::kUnknownCategory,
                      "category code out of range in '" + spec.name + "'");
        }
      }
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (this->label_missing(r)) continue;
    if (labels_[r] < 0 || static_cast<std::size_t>(labels_[r]) >= class_names_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "label index out of range");
    }
  }
}

bool Dataset::has_missing() const {
  for (std::size_t r = 0; r < num_rows(); ++r) {
    if (label_missing(r)) return true;
  }
  for (const auto& col : columns_) {
    if (std::any_of(col.missing.begin(), col.missing.end(), [](auto m) { return m != 0; })) {
      return true;
    }
  }
  return false;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names_.size(), 0);
  for (std::size_t r = 0; r < num_rows(); ++r) {
    if (!label_missing(r)) ++counts[static_cast<std::size_t>(labels_[r])];
  }
  return counts;
}

double Dataset::positive_fraction() const {
  if (num_rows() == 0) return 0.0;
  std::size_t pos = 0;
  for (int y : labels_) pos += (y == 1);
  return static_cast<double>(pos) / static_cast<double>(num_rows());
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<RawColumn> cols(columns_.size());
  for (std::size_t f = 0; f < columns_.size(); ++f) {
    const RawColumn& src = columns_[f];
    RawColumn& dst = cols[f];
    const bool categorical = schema_.feature(f).is_categorical();
    dst.missing.reserve(rows.size());
    for (std::size_t r : rows) {
      if (categorical) {
        dst.codes.push_back(src.codes[r]);
      } else {
        dst.numeric.push_back(src.numeric[r]);
      }
      dst.missing.push_back(src.missing[r]);
    }
  }
  std::vector<int> labels;
  labels.reserve(rows.size());
  std::vector<std::uint8_t> mask;
  for (std::size_t r : rows) labels.push_back(labels_[r]);
  if (!label_missing_.empty()) {
    for (std::size_t r : rows) mask.push_back(label_missing_[r]);
  }
  return Dataset(schema_, std::move(cols), std::move(labels), class_names_, std::move(mask));
}

Dataset Dataset::select_features(std::span<const std::string> names) const {
  std::vector<bool> keep(schema_.size(), false);
  for (const auto& name : names) {
    const auto idx = schema_.index_of(name);
    if (!idx) {
      throw Error(ErrorCode::kInvalidArgument, "unknown feature '" + name + "'");
    }
    keep[*idx] = true;
  }
  std::vector<FeatureSpec> features;
  std::vector<RawColumn> cols;
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    if (!keep[f]) continue;
    features.push_back(schema_.feature(f));
    cols.push_back(columns_[f]);
  }
  return Dataset(Schema(std::move(features), schema_.target_name()), std::move(cols),
                 labels_, class_names_, label_missing_);
}

Dataset Dataset::drop_feature(std::string_view name) const {
  std::vector<std::string> names;
  for (const auto& f : schema_.features()) {
    if (f.name != name) names.push_back(f.name);
  }
  return select_features(names);
}

EncodedMatrix EncodedMatrix::zeros(std::vector<std::string> columns,
                                   std::vector<std::string> raw_of, std::size_t rows) {
  EncodedMatrix m;
  m.rows = rows;
  m.values.assign(columns.size() * rows, 0.0);
  m.columns = std::move(columns);
  m.raw_of = std::move(raw_of);
  return m;
}

EncodedMatrix EncodedMatrix::select_rows(std::span<const std::size_t> rows_sel) const {
  EncodedMatrix out = zeros(columns, raw_of, rows_sel.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto src = column(c);
    auto dst = out.column(c);
    for (std::size_t i = 0; i < rows_sel.size(); ++i) dst[i] = src[rows_sel[i]];
  }
  return out;
}

std::vector<std::size_t> SplitTriple::pooled() const {
  std::vector<std::size_t> rows = train;
  rows.insert(rows.end(), meta_train.begin(), meta_train.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

Dataset parse_csv(std::istream& in, std::string_view target_name) {
  std::vector<std::string> header;
  std::vector<bool> quoted;
  if (!csv::read_record(in, header, &quoted) || is_blank_record(header)) {
    throw Error(ErrorCode::kEmptyFile, "CSV input is empty");
  }
  for (auto& h : header) h = std::string(trim(h));
  const auto target_it = std::find(header.begin(), header.end(), target_name);
  if (target_it == header.end()) {
    throw Error(ErrorCode::kTargetNotFound,
                "target not found: '" + std::string(target_name) + "'");
  }
  const std::size_t target_col = static_cast<std::size_t>(target_it - header.begin());
  const std::size_t width = header.size();

  std::vector<std::vector<std::string>> cells(width);
  std::vector<std::string> fields;
  std::size_t line = 1;
  while (csv::read_record(in, fields, &quoted)) {
    ++line;
    if (is_blank_record(fields)) continue;
    if (fields.size() != width) {
      throw Error(ErrorCode::kMalformedInput,
                  "line " + std::to_string(line) + ": expected " + std::to_string(width) +
                      " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      cells[c].push_back(quoted[c] ? fields[c] : std::string(trim(fields[c])));
    }
  }
  const std::size_t n = cells.empty() ? 0 : cells[0].size();

  std::vector<FeatureSpec> features;
  std::vector<RawColumn> columns;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == target_col) continue;
    const auto& col = cells[c];
    bool numeric = true;
    for (const auto& v : col) {
      if (!v.empty() && !parse_number(v)) {
        numeric = false;
        break;
      }
    }
    FeatureSpec spec{header[c], numeric ? FeatureKind::kNumeric : FeatureKind::kCategorical, {}};
    RawColumn raw;
    raw.missing.resize(n, 0);
    if (numeric) {
      raw.numeric.resize(n, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        if (col[r].empty()) {
          raw.missing[r] = 1;
        } else {
          raw.numeric[r] = *parse_number(col[r]);
        }
      }
    } else {
      std::set<std::string> vocab;
      for (const auto& v : col) {
        if (!v.empty()) vocab.insert(v);
      }
      spec.vocabulary.assign(vocab.begin(), vocab.end());
      raw.codes.resize(n, 0);
      for (std::size_t r = 0; r < n; ++r) {
        if (col[r].empty()) {
          raw.missing[r] = 1;
        } else {
          raw.codes[r] = *spec.category_index(col[r]);
        }
      }
    }
    features.push_back(std::move(spec));
    columns.push_back(std::move(raw));
  }

  const auto& target = cells[target_col];
  std::set<std::string> class_set;
  for (const auto& v : target) {
    if (!v.empty()) class_set.insert(v);
  }
  std::vector<std::string> class_names(class_set.begin(), class_set.end());
  std::vector<int> labels(n, 0);
  std::vector<std::uint8_t> label_missing(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    if (target[r].empty()) {
      label_missing[r] = 1;
    } else {
      labels[r] = static_cast<int>(
          std::lower_bound(class_names.begin(), class_names.end(), target[r]) -
          class_names.begin());
    }
  }
  return Dataset(Schema(std::move(features), header[target_col]), std::move(columns),
                 std::move(labels), std::move(class_names), std::move(label_missing));
}

Dataset load_csv(const std::filesystem::path& path, std::string_view target_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kFileNotFound, "cannot open '" + path.string() + "'");
  }
  return parse_csv(in, target_name);
}

void write_csv(const Dataset& d, std::ostream& out) {
  const Schema& schema = d.schema();
  for (std::size_t f = 0; f < schema.size(); ++f) {
    out << csv::escape(schema.feature(f).name) << ',';
  }
  out << csv::escape(schema.target_name()) << '\n';
  char buf[64];
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (!d.is_missing(r, f)) {
        if (schema.feature(f).is_categorical()) {
          out << csv::escape(d.category(r, f));
        } else {
          const auto res = std::to_chars(buf, buf + sizeof(buf), d.numeric(r, f));
          out.write(buf, res.ptr - buf);
        }
      }
      out << ',';
    }
    if (!d.label_missing(r)) {
      out << csv::escape(d.class_names()[static_cast<std::size_t>(d.labels()[r])]);
    }
    out << '\n';
  }
}

Dataset preprocess_binary(const Dataset& d) {
  std::vector<std::size_t> complete;
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    if (d.label_missing(r)) continue;
    bool ok = true;
    for (std::size_t f = 0; f < d.num_features() && ok; ++f) ok = !d.is_missing(r, f);
    if (ok) complete.push_back(r);
  }
  std::vector<std::size_t> counts(d.num_classes(), 0);
  for (std::size_t r : complete) ++counts[static_cast<std::size_t>(d.labels()[r])];

  std::vector<std::size_t> order(d.num_classes());
  std::iota(order.begin(), order.end(), 0);
  std::erase_if(order, [&](std::size_t k) { return counts[k] == 0; });
  if (order.size() < 2) {
    throw Error(ErrorCode::kTooFewClasses,
                "fewer than 2 classes remain after removing missing rows");
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return d.class_names()[a] < d.class_names()[b];
  });
  const std::size_t first = order[0];
  const std::size_t second = order[1];

  std::vector<std::size_t> kept;
  for (std::size_t r : complete) {
    const auto y = static_cast<std::size_t>(d.labels()[r]);
    if (y == first || y == second) kept.push_back(r);
  }
  Dataset sub = d.subset(kept);

  // Prune vocabularies to categories that survived.
  std::vector<FeatureSpec> features;
  std::vector<RawColumn> columns;
  for (std::size_t f = 0; f < sub.num_features(); ++f) {
    FeatureSpec spec = sub.schema().feature(f);
    RawColumn col = sub.column(f);
    if (spec.is_categorical()) {
      std::vector<bool> used(spec.vocabulary.size(), false);
      for (auto c : col.codes) used[c] = true;
      std::vector<std::uint32_t> remap(spec.vocabulary.size(), 0);
      std::vector<std::string> vocab;
      for (std::size_t k = 0; k < used.size(); ++k) {
        if (!used[k]) continue;
        remap[k] = static_cast<std::uint32_t>(vocab.size());
        vocab.push_back(spec.vocabulary[k]);
      }
      for (auto& c : col.codes) c = remap[c];
      spec.vocabulary = std::move(vocab);
    }
    features.push_back(std::move(spec));
    columns.push_back(std::move(col));
  }
  std::vector<int> labels(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    labels[i] = static_cast<std::size_t>(sub.labels()[i]) == first ? 0 : 1;
  }
  return Dataset(Schema(std::move(features), d.schema().target_name()), std::move(columns),
                 std::move(labels), {d.class_names()[first], d.class_names()[second]});
}

std::vector<std::string> encoded_columns(const Schema& schema) {
  std::vector<std::string> cols;
  for (const auto& f : schema.features()) {
    if (f.is_categorical()) {
      for (const auto& v : f.vocabulary) cols.push_back(f.name + "=" + v);
    } else {
      cols.push_back(f.name);
    }
  }
  return cols;
}

EncodedMatrix encode(const Dataset& d, const Schema& schema) {
  std::vector<std::string> raw_of;
  for (const auto& f : schema.features()) {
    const std::size_t width = f.is_categorical() ? f.vocabulary.size() : 1;
    for (std::size_t k = 0; k < width; ++k) raw_of.push_back(f.name);
  }
  EncodedMatrix m = EncodedMatrix::zeros(encoded_columns(schema), std::move(raw_of), d.num_rows());
  std::size_t out_col = 0;
  for (const auto& f : schema.features()) {
    const auto src_idx = d.schema().index_of(f.name);
    if (!src_idx) {
      throw Error(ErrorCode::kColumnMismatch,
                  "dataset lacks feature '" + f.name + "' required by the schema");
    }
    const FeatureSpec& src_spec = d.schema().feature(*src_idx);
    if (src_spec.kind != f.kind) {
      throw Error(ErrorCode::kColumnMismatch, "feature '" + f.name + "' kind mismatch");
    }
    const RawColumn& col = d.column(*src_idx);
    if (f.is_categorical()) {
      std::vector<std::uint32_t> remap(src_spec.vocabulary.size());
      std::vector<bool> known(src_spec.vocabulary.size(), false);
      for (std::size_t k = 0; k < src_spec.vocabulary.size(); ++k) {
        if (const auto idx = f.category_index(src_spec.vocabulary[k])) {
          remap[k] = *idx;
          known[k] = true;
        }
      }
      for (std::size_t r = 0; r < d.num_rows(); ++r) {
        if (col.missing[r]) {
          throw Error(ErrorCode::kMalformedInput, "missing cell in '" + f.name + "'");
        }
        const auto code = col.codes[r];
        if (!known[code]) {
          throw Error(ErrorCode::kUnknownCategory,
                      "category '" + src_spec.vocabulary[code] + "' of feature '" + f.name +
                          "' is outside the schema vocabulary");
        }
        m.column(out_col + remap[code])[r] = 1.0;
      }
      out_col += f.vocabulary.size();
    } else {
      auto dst = m.column(out_col);
      for (std::size_t r = 0; r < d.num_rows(); ++r) {
        if (col.missing[r]) {
          throw Error(ErrorCode::kMalformedInput, "missing cell in '" + f.name + "'");
        }
        dst[r] = col.numeric[r];
      }
      ++out_col;
    }
  }
  return m;
}

std::array<std::size_t, 3> stratum_sizes(std::size_t n, std::array<double, 3> fractions) {
  const auto cut = [&](double fraction) {
    auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    return std::max<std::size_t>(k, 1);
  };
  const std::size_t meta = cut(fractions[1]);
  const std::size_t test = cut(fractions[2]);
  return {n - meta - test, meta, test};
}

SplitTriple stratified_split(const Dataset& d, std::array<double, 3> fractions,
                             std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9 ||
      std::any_of(fractions.begin(), fractions.end(), [](double f) { return f <= 0.0; })) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must be positive and sum to 1");
  }
  std::vector<std::vector<std::size_t>> by_class(d.num_classes());
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    if (d.label_missing(r)) continue;
    by_class[static_cast<std::size_t>(d.labels()[r])].push_back(r);
  }
  SplitTriple split;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& rows = by_class[k];
    if (rows.empty()) continue;
    if (rows.size() < 3) {
      throw Error(ErrorCode::kClassTooSmall,
                  "class too small to stratify: '" + d.class_names()[k] + "' has " +
                      std::to_string(rows.size()) + " rows");
    }
    Rng rng(derive_seed(seed, "stratum", {k}));
    rng.shuffle(rows.begin(), rows.end());
    const auto sizes = stratum_sizes(rows.size(), fractions);
    auto it = rows.begin();
    split.meta_train.insert(split.meta_train.end(), it, it + sizes[1]);
    it += sizes[1];
    split.test.insert(split.test.end(), it, it + sizes[2]);
    it += sizes[2];
    split.train.insert(split.train.end(), it, rows.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.meta_train.begin(), split.meta_train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace stackfed

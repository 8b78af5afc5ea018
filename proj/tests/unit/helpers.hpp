#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stackfed/forest.hpp"
#include "stackfed/rng.hpp"
#include "stackfed/tabular.hpp"

namespace testing {

inline stackfed::Dataset numeric_dataset(const std::vector<std::vector<double>>& columns,
                                         const std::vector<int>& labels) {
  std::vector<stackfed::FeatureSpec> specs;
  std::vector<stackfed::RawColumn> raw;
  for (std::size_t f = 0; f < columns.size(); ++f) {
    specs.push_back({"f" + std::to_string(f), stackfed::FeatureKind::kNumeric, {}});
    stackfed::RawColumn col;
    col.numeric = columns[f];
    col.missing.assign(columns[f].size(), 0);
    raw.push_back(std::move(col));
  }
  return stackfed::Dataset(stackfed::Schema(std::move(specs), "y"), std::move(raw), labels,
                           {"0", "1"});
}

inline stackfed::EncodedMatrix matrix(const std::vector<std::vector<double>>& columns) {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < columns.size(); ++f) names.push_back("f" + std::to_string(f));
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  auto m = stackfed::EncodedMatrix::zeros(names, names, rows);
  for (std::size_t f = 0; f < columns.size(); ++f) {
    for (std::size_t r = 0; r < rows; ++r) m.column(f)[r] = columns[f][r];
  }
  return m;
}

// Random binary dataset with `features` numeric columns drawn on a small
// integer grid (so ties occur) and labels correlated with the first column.
inline stackfed::Dataset random_dataset(std::size_t rows, std::size_t features,
                                        std::uint64_t seed) {
  stackfed::Rng rng(seed);
  std::vector<std::vector<double>> cols(features, std::vector<double>(rows));
  std::vector<int> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < features; ++f) {
      cols[f][r] = static_cast<double>(rng.below(7));
    }
    y[r] = (cols[0][r] + static_cast<double>(rng.below(4)) > 4.0) ? 1 : 0;
  }
  return numeric_dataset(cols, y);
}

}  // namespace testing

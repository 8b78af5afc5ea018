#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stackfed/tabular.hpp"

namespace stackfed {

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;  // unbounded when empty
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::optional<int> max_features;  // floor(sqrt(n_features)), at least 1, when empty
  bool bootstrap = true;

  int resolved_max_features(std::size_t n_features) const;
  void validate() const;
};

// Flat CART node. `feature < 0` marks a leaf. Class counts are kept on every
// node (weighted by bootstrap multiplicity); leaves predict from them.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double impurity_decrease = 0.0;
  double n_samples = 0.0;
  std::array<double, 2> class_counts{0.0, 0.0};

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  // Node 0 is the root. Throws if child links are inconsistent.
  explicit Tree(std::vector<TreeNode> nodes);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t depth() const;

  // Index of the leaf reached by `row`; rows go left when value <= threshold.
  std::size_t leaf_index(const EncodedMatrix& x, std::size_t row) const;
  // Positive-class frequency of the leaf reached by each row.
  void predict_positive(const EncodedMatrix& x, std::span<double> out) const;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_positive_;
};

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<Tree> trees, std::vector<std::string> column_names,
              ForestParams params);

  const std::vector<Tree>& trees() const { return trees_; }
  std::size_t n_features() const { return column_names_.size(); }
  const std::vector<std::string>& column_names() const { return column_names_; }
  const ForestParams& params() const { return params_; }

 private:
  std::vector<Tree> trees_;
  std::vector<std::string> column_names_;
  ForestParams params_;
};

// Greedy Gini CART over rows with positive `weights` (bootstrap
// multiplicities). Candidate thresholds are midpoints between consecutive
// distinct values; ties on the split criterion go to the lowest
// (feature, threshold).
Tree fit_tree(const EncodedMatrix& x, std::span<const int> y,
              std::span<const std::uint32_t> weights, const ForestParams& params,
              std::uint64_t seed);

ForestModel fit_forest(const EncodedMatrix& x, std::span<const int> y,
                       const ForestParams& params, std::uint64_t seed);

// Throws kColumnMismatch listing missing and extra columns.
void check_columns(const ForestModel& m, const EncodedMatrix& x);

// Mean over trees of leaf class frequencies.
std::vector<std::array<double, 2>> predict_proba(const ForestModel& m, const EncodedMatrix& x);
// Positive-class column of predict_proba.
std::vector<double> predict_positive(const ForestModel& m, const EncodedMatrix& x);
// Argmax of predict_proba, exact ties to class 0.
std::vector<int> predict(const ForestModel& m, const EncodedMatrix& x);

// Normalized Mean Decrease in Impurity over the encoded columns. All zeros
// when no tree contains a split.
std::vector<double> mdi_importance(const ForestModel& m);

// Structured-text (JSON) persistence; doubles round-trip bit-exactly.
std::string serialize_forest(const ForestModel& m);
ForestModel deserialize_forest(const std::string& text);
void save_forest(const ForestModel& m, std::ostream& out);
ForestModel load_forest(std::istream& in);

}  // namespace stackfed

#include "stackfed/forest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <set>

#include "json.hpp"
#include "stackfed/error.hpp"
#include "stackfed/kernels.hpp"
#include "stackfed/rng.hpp"

namespace stackfed {
namespace {

using i128 = __int128;

// Weighted class counts on each side of a candidate boundary.
struct SideCounts {
  std::int64_t l0 = 0;
  std::int64_t l1 = 0;
  std::int64_t r0 = 0;
  std::int64_t r1 = 0;
};

// Split proxy as an exact fraction:
//   ((l0^2 + l1^2) * nR + (r0^2 + r1^2) * nL) / (nL * nR)
struct Fraction {
  i128 num;
  i128 den;
};

Fraction proxy_fraction(const SideCounts& s) {
  const i128 nl = s.l0 + s.l1;
  const i128 nr = s.r0 + s.r1;
  const i128 a = i128{s.l0} * s.l0 + i128{s.l1} * s.l1;
  const i128 b = i128{s.r0} * s.r0 + i128{s.r1} * s.r1;
  return {a * nr + b * nl, nl * nr};
}

int compare(const Fraction& a, const Fraction& b) {
  const i128 lhs = a.num * b.den;
  const i128 rhs = b.num * a.den;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

using ColumnOrder = std::vector<std::vector<std::uint32_t>>;

// Row indices of every column sorted by (value, row).
ColumnOrder presort(const EncodedMatrix& x) {
  ColumnOrder order(x.num_columns());
  for (std::size_t c = 0; c < x.num_columns(); ++c) {
    auto& o = order[c];
    o.resize(x.rows);
    std::iota(o.begin(), o.end(), 0u);
    const auto col = x.column(c);
    std::stable_sort(o.begin(), o.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
  return order;
}

void check_inputs(const EncodedMatrix& x, std::span<const int> y) {
  if (x.num_columns() == 0) throw Error(ErrorCode::kInvalidArgument, "no feature columns");
  const std::size_t rows = x.rows;
  if (y.size() != rows) {
    throw Error(ErrorCode::kInvalidArgument, "label count does not match row count");
  }
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
  }
}

class TreeBuilder {
 public:
  TreeBuilder(const EncodedMatrix& x, std::span<const int> y,
              std::span<const std::uint32_t> w, const ForestParams& params,
              const ColumnOrder& order, Rng& rng)
      : x_(x), y_(y), w_(w), params_(params), rng_(rng),
        kernels_(kernels::active()),
        n_features_(x.num_columns()),
        max_features_(static_cast<std::size_t>(params.resolved_max_features(x.num_columns()))) {
    sorted_.resize(n_features_);
    for (std::size_t f = 0; f < n_features_; ++f) {
      auto& s = sorted_[f];
      for (std::uint32_t r : order[f]) {
        if (w_[r] > 0) s.push_back(r);
      }
    }
    goes_left_.assign(x.rows, 0);
    feature_perm_.resize(n_features_);
  }

  Tree build() {
    const std::size_t active = sorted_[0].size();
    if (active == 0) throw Error(ErrorCode::kInvalidArgument, "cannot fit a tree on no rows");
    std::vector<TreeNode> nodes(1);
    struct Pending {
      std::size_t node;
      std::size_t begin;
      std::size_t end;
      int depth;
    };
    std::vector<Pending> stack{{0, 0, active, 0}};
    while (!stack.empty()) {
      const Pending item = stack.back();
      stack.pop_back();
      std::int64_t c0 = 0;
      std::int64_t c1 = 0;
      for_each_row(item.begin, item.end, [&](std::uint32_t r) {
        (y_[r] == 1 ? c1 : c0) += w_[r];
      });
      TreeNode node;
      node.n_samples = static_cast<double>(c0 + c1);
      node.class_counts = {static_cast<double>(c0), static_cast<double>(c1)};
      const std::int64_t n = c0 + c1;
      const bool stop = c0 == 0 || c1 == 0 || n < params_.min_samples_split ||
                        n < 2 * static_cast<std::int64_t>(params_.min_samples_leaf) ||
                        (params_.max_depth && item.depth >= *params_.max_depth);
      std::optional<Split> split;
      if (!stop) split = find_split(item.begin, item.end, c0, c1);
      if (split) {
        node.feature = static_cast<std::int32_t>(split->feature);
        node.threshold = split->threshold;
        node.impurity_decrease = split->impurity_decrease;
        node.left = static_cast<std::int32_t>(nodes.size());
        node.right = static_cast<std::int32_t>(nodes.size() + 1);
        const std::size_t mid = partition(item.begin, item.end, *split);
        nodes[item.node] = node;
        nodes.emplace_back();
        nodes.emplace_back();
        stack.push_back({static_cast<std::size_t>(node.right), mid, item.end, item.depth + 1});
        stack.push_back({static_cast<std::size_t>(node.left), item.begin, mid, item.depth + 1});
      } else {
        nodes[item.node] = node;
      }
    }
    return Tree(std::move(nodes));
  }

 private:
  struct Split {
    std::size_t feature = 0;
    std::size_t pos = 0;  // last sorted position going left
    double threshold = 0.0;
    double score = 0.0;
    SideCounts counts;
    double impurity_decrease = 0.0;
  };

  template <typename Fn>
  void for_each_row(std::size_t begin, std::size_t end, Fn&& fn) const {
    const auto& s = sorted_[0];
    for (std::size_t i = begin; i < end; ++i) fn(s[i]);
  }

  std::optional<Split> find_split(std::size_t begin, std::size_t end, std::int64_t c0,
                                  std::int64_t c1) {
    std::iota(feature_perm_.begin(), feature_perm_.end(), std::size_t{0});
    const std::size_t k = std::min(max_features_, n_features_);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(n_features_ - i));
      std::swap(feature_perm_[i], feature_perm_[j]);
    }
    const std::int64_t min_leaf = params_.min_samples_leaf;
    const std::int64_t n = c0 + c1;
    std::optional<Split> best;
    std::optional<Fraction> best_exact;
    for (std::size_t ci = 0; ci < k; ++ci) {
      const std::size_t f = feature_perm_[ci];
      const auto& s = sorted_[f];
      const auto col = x_.column(f);
      if (!(col[s[begin]] < col[s[end - 1]])) continue;
      left0_.clear();
      left1_.clear();
      positions_.clear();
      std::int64_t l0 = 0;
      std::int64_t l1 = 0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const std::uint32_t r = s[i];
        (y_[r] == 1 ? l1 : l0) += w_[r];
        if (col[r] < col[s[i + 1]]) {
          const std::int64_t nl = l0 + l1;
          if (nl >= min_leaf && n - nl >= min_leaf) {
            left0_.push_back(static_cast<double>(l0));
            left1_.push_back(static_cast<double>(l1));
            positions_.push_back(i);
          }
        }
      }
      if (positions_.empty()) continue;
      scores_.resize(positions_.size());
      kernels_.split_scores(left0_, left1_, static_cast<double>(c0), static_cast<double>(c1),
                            scores_);
      for (std::size_t j = 0; j < positions_.size(); ++j) {
        const double score = scores_[j];
        if (best) {
          const double tol = 1e-12 * best->score;
          if (score < best->score - tol) continue;
          SideCounts counts = make_counts(j, c0, c1);
          if (score <= best->score + tol) {
            const int cmp = compare(proxy_fraction(counts), *best_exact);
            if (cmp < 0) continue;
            if (cmp == 0 && f >= best->feature) continue;
          }
          best = Split{f, positions_[j], 0.0, score, counts, 0.0};
          best_exact = proxy_fraction(counts);
        } else {
          SideCounts counts = make_counts(j, c0, c1);
          best = Split{f, positions_[j], 0.0, score, counts, 0.0};
          best_exact = proxy_fraction(counts);
        }
      }
    }
    if (!best) return std::nullopt;
    // Require a strictly positive impurity decrease, decided exactly:
    // proxy > (c0^2 + c1^2) / n.
    const Fraction parent{i128{c0} * c0 + i128{c1} * c1, i128{n}};
    if (compare(*best_exact, parent) <= 0) return std::nullopt;

    const auto col = x_.column(best->feature);
    const auto& s = sorted_[best->feature];
    const double a = col[s[best->pos]];
    const double b = col[s[best->pos + 1]];
    double t = a / 2.0 + b / 2.0;
    if (!(t < b) || !std::isfinite(t)) t = a;
    best->threshold = t;
    const double nd = static_cast<double>(n);
    const double parent_proxy = (static_cast<double>(c0) * static_cast<double>(c0) +
                                 static_cast<double>(c1) * static_cast<double>(c1)) /
                                nd;
    best->impurity_decrease = std::max(0.0, (best->score - parent_proxy) / nd);
    return best;
  }

  SideCounts make_counts(std::size_t j, std::int64_t c0, std::int64_t c1) const {
    SideCounts counts;
    counts.l0 = static_cast<std::int64_t>(left0_[j]);
    counts.l1 = static_cast<std::int64_t>(left1_[j]);
    counts.r0 = c0 - counts.l0;
    counts.r1 = c1 - counts.l1;
    return counts;
  }

  // Stable partition of every column's segment; returns the boundary.
  std::size_t partition(std::size_t begin, std::size_t end, const Split& split) {
    const auto& chosen = sorted_[split.feature];
    for (std::size_t i = begin; i < end; ++i) goes_left_[chosen[i]] = i <= split.pos ? 1 : 0;
    const std::size_t mid = split.pos + 1;
    for (std::size_t f = 0; f < n_features_; ++f) {
      if (f == split.feature) continue;
      auto& s = sorted_[f];
      scratch_.clear();
      std::size_t out = begin;
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint32_t r = s[i];
        if (goes_left_[r]) {
          s[out++] = r;
        } else {
          scratch_.push_back(r);
        }
      }
      std::copy(scratch_.begin(), scratch_.end(), s.begin() + static_cast<std::ptrdiff_t>(out));
    }
    return mid;
  }

  const EncodedMatrix& x_;
  std::span<const int> y_;
  std::span<const std::uint32_t> w_;
  const ForestParams& params_;
  Rng& rng_;
  const kernels::KernelTable& kernels_;
  std::size_t n_features_;
  std::size_t max_features_;
  ColumnOrder sorted_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::size_t> feature_perm_;
  std::vector<double> left0_;
  std::vector<double> left1_;
  std::vector<double> scores_;
  std::vector<std::size_t> positions_;
};

}  // namespace

int ForestParams::resolved_max_features(std::size_t n_features) const {
  if (max_features) return std::max(1, std::min<int>(*max_features, static_cast<int>(std::max<std::size_t>(n_features, 1))));
  const auto root = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features))));
  return std::max(1, root);
}

void ForestParams::validate() const {
  if (n_trees < 1 || min_samples_split < 1 || min_samples_leaf < 1 ||
      (max_depth && *max_depth < 1) || (max_features && *max_features < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "forest parameters must be at least 1");
  }
}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(ErrorCode::kInvalidArgument, "tree without nodes");
  leaf_positive_.assign(nodes_.size(), 0.0);
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (std::int32_t i = 0; i < n; ++i) {
    const TreeNode& node = nodes_[static_cast<std::size_t>(i)];
    if (node.is_leaf()) {
      const double total = node.class_counts[0] + node.class_counts[1];
      if (!(total > 0.0) || node.class_counts[0] < 0.0 || node.class_counts[1] < 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "leaf with empty class counts");
      }
      leaf_positive_[static_cast<std::size_t>(i)] = node.class_counts[1] / total;
    } else if (node.left <= i || node.right <= i || node.left >= n || node.right >= n ||
               node.impurity_decrease < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "malformed internal node");
    }
  }
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t Tree::leaf_index(const EncodedMatrix& x, std::size_t row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    const double v = x.values[static_cast<std::size_t>(node.feature) * x.rows + row];
    i = static_cast<std::size_t>(v <= node.threshold ? node.left : node.right);
  }
  return i;
}

void Tree::predict_positive(const EncodedMatrix& x, std::span<double> out) const {
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = leaf_positive_[leaf_index(x, r)];
}

ForestModel::ForestModel(std::vector<Tree> trees, std::vector<std::string> column_names,
                         ForestParams params)
    : trees_(std::move(trees)), column_names_(std::move(column_names)), params_(params) {
  if (trees_.empty()) throw Error(ErrorCode::kInvalidArgument, "forest without trees");
  for (const Tree& t : trees_) {
    for (const TreeNode& node : t.nodes()) {
      if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= column_names_.size()) {
        throw Error(ErrorCode::kInvalidArgument, "tree splits on an unknown column");
      }
    }
  }
}

Tree fit_tree(const EncodedMatrix& x, std::span<const int> y,
              std::span<const std::uint32_t> weights, const ForestParams& params,
              std::uint64_t seed) {
  params.validate();
  if (x.rows == 0) throw Error(ErrorCode::kInvalidArgument, "cannot fit a tree on no rows");
  check_inputs(x, y);
  if (weights.size() != x.rows) {
    throw Error(ErrorCode::kInvalidArgument, "weight count does not match row count");
  }
  const ColumnOrder order = presort(x);
  Rng rng(seed);
  return TreeBuilder(x, y, weights, params, order, rng).build();
}

ForestModel fit_forest(const EncodedMatrix& x, std::span<const int> y,
                       const ForestParams& params, std::uint64_t seed) {
  params.validate();
  if (x.rows < 2) throw Error(ErrorCode::kInvalidArgument, "a forest needs at least 2 rows");
  check_inputs(x, y);
  const ColumnOrder order = presort(x);
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  std::vector<std::uint32_t> weights(x.rows);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, "tree", {static_cast<std::uint64_t>(t)}));
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0u);
      for (std::size_t i = 0; i < x.rows; ++i) ++weights[rng.below(x.rows)];
    } else {
      std::fill(weights.begin(), weights.end(), 1u);
    }
    trees.push_back(TreeBuilder(x, y, weights, params, order, rng).build());
  }
  return ForestModel(std::move(trees), x.columns, params);
}

void check_columns(const ForestModel& m, const EncodedMatrix& x) {
  if (x.columns == m.column_names()) return;
  const std::set<std::string> have(x.columns.begin(), x.columns.end());
  const std::set<std::string> want(m.column_names().begin(), m.column_names().end());
  std::string missing;
  std::string extra;
  for (const auto& c : want) {
    if (!have.count(c)) missing += (missing.empty() ? "" : ", ") + c;
  }
  for (const auto& c : have) {
    if (!want.count(c)) extra += (extra.empty() ? "" : ", ") + c;
  }
  std::string message = "column mismatch;";
  message += " missing: [" + missing + "]; extra: [" + extra + "]";
  if (missing.empty() && extra.empty()) message += "; order differs";
  throw Error(ErrorCode::kColumnMismatch, message);
}

std::vector<double> predict_positive(const ForestModel& m, const EncodedMatrix& x) {
  check_columns(m, x);
  const auto& k = kernels::active();
  std::vector<double> acc(x.rows, 0.0);
  std::vector<double> buf(x.rows);
  for (const Tree& t : m.trees()) {
    t.predict_positive(x, buf);
    k.add_into(acc, buf);
  }
  k.divide_by(acc, static_cast<double>(m.trees().size()));
  return acc;
}

std::vector<std::array<double, 2>> predict_proba(const ForestModel& m, const EncodedMatrix& x) {
  const auto pos = predict_positive(m, x);
  std::vector<std::array<double, 2>> out(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) out[i] = {1.0 - pos[i], pos[i]};
  return out;
}

std::vector<int> predict(const ForestModel& m, const EncodedMatrix& x) {
  const auto proba = predict_proba(m, x);
  std::vector<int> labels(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) labels[i] = proba[i][1] > proba[i][0] ? 1 : 0;
  return labels;
}

std::vector<double> mdi_importance(const ForestModel& m) {
  std::vector<double> total(m.n_features(), 0.0);
  for (const Tree& t : m.trees()) {
    const double n_root = t.root().n_samples;
    for (const TreeNode& node : t.nodes()) {
      if (node.is_leaf()) continue;
      total[static_cast<std::size_t>(node.feature)] +=
          node.n_samples / n_root * node.impurity_decrease;
    }
  }
  const double trees = static_cast<double>(m.trees().size());
  for (double& v : total) v /= trees;
  const double sum = std::accumulate(total.begin(), total.end(), 0.0);
  if (!(sum > 0.0)) return std::vector<double>(m.n_features(), 0.0);
  for (double& v : total) v /= sum;
  return total;
}

std::string serialize_forest(const ForestModel& m) {
  using nlohmann::json;
  const ForestParams& p = m.params();
  json params = {{"n_trees", p.n_trees},
                 {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
                 {"min_samples_split", p.min_samples_split},
                 {"min_samples_leaf", p.min_samples_leaf},
                 {"max_features", p.max_features ? json(*p.max_features) : json(nullptr)},
                 {"bootstrap", p.bootstrap},
                 {"impurity", "gini"}};
  json trees = json::array();
  for (const Tree& t : m.trees()) {
    json feature = json::array(), threshold = json::array(), left = json::array(),
         right = json::array(), decrease = json::array(), samples = json::array(),
         count0 = json::array(), count1 = json::array();
    for (const TreeNode& n : t.nodes()) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      decrease.push_back(n.impurity_decrease);
      samples.push_back(n.n_samples);
      count0.push_back(n.class_counts[0]);
      count1.push_back(n.class_counts[1]);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"impurity_decrease", decrease},
                     {"n_samples", samples},
                     {"count0", count0},
                     {"count1", count1}});
  }
  json doc = {{"format", "stackfed-forest"},
              {"version", 1},
              {"params", params},
              {"column_names", m.column_names()},
              {"trees", trees}};
  return doc.dump(1);
}

ForestModel deserialize_forest(const std::string& text) {
  using nlohmann::json;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "stackfed-forest" || doc.at("version") != 1) {
      throw Error(ErrorCode::kMalformedInput, "not a stackfed forest document");
    }
    const json& jp = doc.at("params");
    ForestParams p;
    p.n_trees = jp.at("n_trees").get<int>();
    if (!jp.at("max_depth").is_null()) p.max_depth = jp.at("max_depth").get<int>();
    p.min_samples_split = jp.at("min_samples_split").get<int>();
    p.min_samples_leaf = jp.at("min_samples_leaf").get<int>();
    if (!jp.at("max_features").is_null()) p.max_features = jp.at("max_features").get<int>();
    p.bootstrap = jp.at("bootstrap").get<bool>();
    std::vector<Tree> trees;
    for (const json& jt : doc.at("trees")) {
      const auto feature = jt.at("feature").get<std::vector<std::int32_t>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<std::int32_t>>();
      const auto right = jt.at("right").get<std::vector<std::int32_t>>();
      const auto decrease = jt.at("impurity_decrease").get<std::vector<double>>();
      const auto samples = jt.at("n_samples").get<std::vector<double>>();
      const auto count0 = jt.at("count0").get<std::vector<double>>();
      const auto count1 = jt.at("count1").get<std::vector<double>>();
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n ||
          decrease.size() != n || samples.size() != n || count0.size() != n ||
          count1.size() != n) {
        throw Error(ErrorCode::kMalformedInput, "tree arrays differ in length");
      }
      std::vector<TreeNode> nodes(n);
      for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = TreeNode{feature[i], threshold[i], left[i],    right[i],
                            decrease[i], samples[i], {count0[i], count1[i]}};
      }
      trees.emplace_back(std::move(nodes));
    }
    return ForestModel(std::move(trees),
                       doc.at("column_names").get<std::vector<std::string>>(), p);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("forest document: ") + e.what());
  }
}

void save_forest(const ForestModel& m, std::ostream& out) { out << serialize_forest(m) << '\n'; }

ForestModel load_forest(std::istream& in) {
  return deserialize_forest(std::string(std::istreambuf_iterator<char>(in), {}));
}

}  // namespace stackfed

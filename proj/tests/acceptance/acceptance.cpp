// Acceptance suite. Each group prints one line per criterion:
//   criterion <n> PASS|FAIL: <measured values>
// and exits nonzero when any criterion in the group fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stackfed/federation.hpp"
#include "stackfed/forest.hpp"
#include "stackfed/metrics.hpp"
#include "stackfed/partition.hpp"
#include "stackfed/rng.hpp"
#include "stackfed/runner.hpp"
#include "stackfed/stacking.hpp"
#include "stackfed/tabular.hpp"

namespace fs = std::filesystem;
using namespace stackfed;

namespace {

// Tolerances and grids.
constexpr double kMdiSumTol = 1e-9;
constexpr double kProbaSumTol = 1e-12;
constexpr double kImportanceSumTol = 1e-9;
constexpr std::size_t kFuzzForests = 100;
constexpr std::size_t kFuzzSplits = 100;
constexpr std::size_t kMaxBaLength = 8;
constexpr std::size_t kSplitInstances = 50;
constexpr std::size_t kMaxSplitRows = 12;
constexpr std::size_t kRandomGraphs = 20;
constexpr double kDirichletAlpha = 100.0;
constexpr std::size_t kDirichletDraws = 10000;
constexpr double kDirichletMeanTol = 0.01;
constexpr double kDirichletVarTol = 0.005;
constexpr double kShareCellFraction = 0.8;
constexpr double kJaccardRho = 0.2;

constexpr std::uint64_t kMasterSeed = 20240601;
constexpr std::size_t kSyntheticRows = 20000;
constexpr std::uint64_t kSyntheticSeed = 1;
constexpr std::size_t kLabelRowsPerClient = 1500;
// Vertical clients hold every row, so this run uses a smaller table.
constexpr std::size_t kVerticalRows = 4000;
constexpr std::size_t kVerticalSeeds = 5;
constexpr std::size_t kVerticalRepeats = 3;

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d %s: %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

EncodedMatrix matrix(const std::vector<std::vector<double>>& cols) {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < cols.size(); ++f) names.push_back("f" + std::to_string(f));
  auto m = EncodedMatrix::zeros(names, names, cols.empty() ? 0 : cols[0].size());
  for (std::size_t f = 0; f < cols.size(); ++f) {
    std::copy(cols[f].begin(), cols[f].end(), m.column(f).begin());
  }
  return m;
}

Dataset numeric_dataset(const std::vector<std::vector<double>>& cols, const std::vector<int>& y) {
  std::vector<FeatureSpec> specs;
  std::vector<RawColumn> raw;
  for (std::size_t f = 0; f < cols.size(); ++f) {
    specs.push_back({"f" + std::to_string(f), FeatureKind::kNumeric, {}});
    RawColumn c;
    c.numeric = cols[f];
    c.missing.assign(cols[f].size(), 0);
    raw.push_back(std::move(c));
  }
  return Dataset(Schema(std::move(specs), "y"), std::move(raw), y, {"0", "1"});
}

// Random instance with a label that depends on the features plus noise.
std::pair<std::vector<std::vector<double>>, std::vector<int>> fuzz_instance(Rng& rng,
                                                                            std::size_t rows,
                                                                            std::size_t features,
                                                                            std::uint64_t grid) {
  std::vector<std::vector<double>> cols(features, std::vector<double>(rows));
  std::vector<int> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t f = 0; f < features; ++f) {
      cols[f][r] = grid ? static_cast<double>(rng.below(grid)) : rng.normal();
      s += cols[f][r] * (f % 2 ? -1.0 : 1.0);
    }
    y[r] = s + rng.normal() * 2.0 > 0.0 ? 1 : 0;
  }
  return {cols, y};
}

double gini(double c0, double c1) {
  const double n = c0 + c1;
  return n == 0.0 ? 0.0 : 1.0 - (c0 / n) * (c0 / n) - (c1 / n) * (c1 / n);
}

struct RootSplit {
  std::size_t feature;
  double threshold;
};

std::optional<RootSplit> exhaustive_root(const EncodedMatrix& x, const std::vector<int>& y) {
  double c0 = 0, c1 = 0;
  for (int v : y) (v ? c1 : c0) += 1;
  const double n = c0 + c1;
  std::optional<RootSplit> best;
  double best_gain = 1e-12;
  for (std::size_t f = 0; f < x.num_columns(); ++f) {
    std::vector<double> v(x.column(f).begin(), x.column(f).end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double t = (v[k] + v[k + 1]) / 2.0;
      double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
      for (std::size_t r = 0; r < x.rows; ++r) {
        if (x.at(r, f) <= t) {
          (y[r] ? l1 : l0) += 1;
        } else {
          (y[r] ? r1 : r0) += 1;
        }
      }
      const double gain = gini(c0, c1) - (l0 + l1) / n * gini(l0, l1) - (r0 + r1) / n * gini(r0, r1);
      if (gain > best_gain + 1e-12) {
        best_gain = gain;
        best = RootSplit{f, t};
      }
    }
  }
  return best;
}

// Builds a random contribution graph; returns the graph and its adjacency.
std::pair<ContributionGraph, std::vector<std::vector<double>>> random_graph(Rng& rng, int n) {
  ContributionGraph g;
  std::vector<std::vector<double>> adj(n, std::vector<double>(n, 0.0));
  for (int from = 0; from < n; ++from) {
    std::vector<double> w(n);
    double total = 0.0;
    for (double& x : w) total += (x = rng.uniform() < 0.2 ? 0.0 : rng.uniform());
    if (total == 0.0) total = w[0] = 1.0;
    ClientReport r;
    r.client_id = from;
    for (int to = 0; to < n; ++to) {
      adj[from][to] = w[to] / total;
      if (to == from) {
        r.self_importance = adj[from][to];
      } else {
        r.contributions[to] = adj[from][to];
      }
    }
    g.record_report(from, r);
  }
  return {std::move(g), std::move(adj)};
}

// ---------------------------------------------------------------- group 1
void properties() {
  Rng rng(derive_seed(kMasterSeed, "acceptance-properties"));
  double worst_mdi = 0.0;
  double worst_proba = 0.0;
  bool mdi_negative = false;
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < kFuzzForests; ++i) {
    const std::size_t rows = 20 + rng.below(200);
    const std::size_t features = 1 + rng.below(6);
    auto [cols, y] = fuzz_instance(rng, rows, features, i % 2 ? 5 : 0);
    ForestParams p;
    p.n_trees = 1 + static_cast<int>(rng.below(30));
    if (rng.below(2)) p.max_depth = 1 + static_cast<int>(rng.below(8));
    p.min_samples_leaf = 1 + static_cast<int>(rng.below(4));
    const auto x = matrix(cols);
    const ForestModel m = fit_forest(x, y, p, rng.next());
    const auto mdi = mdi_importance(m);
    double sum = 0.0;
    for (double v : mdi) {
      mdi_negative |= v < 0.0;
      sum += v;
    }
    if (sum == 0.0) {
      ++degenerate;
    } else {
      worst_mdi = std::max(worst_mdi, std::abs(sum - 1.0));
    }
    for (const auto& row : predict_proba(m, x)) {
      worst_proba = std::max(worst_proba, std::abs(row[0] + row[1] - 1.0));
    }
  }
  const bool mdi_ok = !mdi_negative && worst_mdi <= kMdiSumTol && degenerate < kFuzzForests;

  double worst_strat = 0.0;
  bool remainder_negative = false;
  for (std::size_t i = 0; i < kFuzzSplits; ++i) {
    const std::size_t n1 = 3 + rng.below(150);
    const std::size_t n0 = 3 + rng.below(150);
    std::vector<int> y(n0 + n1, 0);
    for (std::size_t r = 0; r < n1; ++r) y[r] = 1;
    Rng mix(rng.next());
    mix.shuffle(y.begin(), y.end());
    const Dataset d = numeric_dataset({std::vector<double>(y.size())}, y);
    const SplitTriple s = stratified_split(d, kDefaultSplitFractions, rng.next());
    const std::vector<const std::vector<std::size_t>*> parts{&s.train, &s.meta_train, &s.test};
    for (int k = 0; k < 2; ++k) {
      const double nk = static_cast<double>(k ? n1 : n0);
      std::array<double, 3> got{};
      for (std::size_t part = 0; part < 3; ++part) {
        got[part] = static_cast<double>(std::count_if(
            parts[part]->begin(), parts[part]->end(), [&](std::size_t r) { return y[r] == k; }));
      }
      // Remainder rows left by the floor cuts go to train; compare train
      // without them.
      double cut_total = 0.0;
      for (std::size_t part = 0; part < 3; ++part) {
        cut_total += std::max(1.0, std::floor(kDefaultSplitFractions[part] * nk + 1e-9));
      }
      const double remainder = nk - cut_total;
      if (remainder < 0.0) remainder_negative = true;
      for (std::size_t part = 0; part < 3; ++part) {
        const double count = part == 0 ? got[part] - std::max(0.0, remainder) : got[part];
        worst_strat = std::max(worst_strat, std::abs(count - kDefaultSplitFractions[part] * nk));
      }
    }
  }

  double worst_importance = 0.0;
  for (std::size_t i = 0; i < kFuzzForests; ++i) {
    auto [g, adj] = random_graph(rng, 2 + static_cast<int>(rng.below(12)));
    double sum = 0.0;
    for (const auto& [id, v] : g.compute_importance()) sum += v;
    worst_importance = std::max(worst_importance, std::abs(sum - 1.0));
  }

  std::size_t ba_cases = 0;
  std::size_t ba_mismatch = 0;
  for (std::size_t len = 2; len <= kMaxBaLength; ++len) {
    const std::uint32_t combos = 1u << len;
    for (std::uint32_t t = 0; t < combos; ++t) {
      if (t == 0 || t == combos - 1) continue;
      std::vector<int> yt(len);
      for (std::size_t i = 0; i < len; ++i) yt[i] = (t >> i) & 1;
      for (std::uint32_t p = 0; p < combos; ++p) {
        std::vector<int> yp(len);
        double tp = 0, fn = 0, tn = 0, fp = 0;
        for (std::size_t i = 0; i < len; ++i) {
          yp[i] = (p >> i) & 1;
          if (yt[i] == 1) {
            (yp[i] == 1 ? tp : fn) += 1;
          } else {
            (yp[i] == 0 ? tn : fp) += 1;
          }
        }
        const double oracle = 0.5 * (tp / (tp + fn) + tn / (tn + fp));
        ++ba_cases;
        if (std::abs(balanced_accuracy(yt, yp) - oracle) > 1e-15) ++ba_mismatch;
      }
    }
  }

  const bool pass = mdi_ok && worst_proba <= kProbaSumTol && worst_strat < 1.0 && !remainder_negative &&
                    worst_importance <= kImportanceSumTol && ba_mismatch == 0;
  std::ostringstream d;
  d << "max |MDI sum-1|=" << fmt("%.2e", worst_mdi) << (mdi_negative ? " (negative MDI seen)" : "")
    << " over " << kFuzzForests - degenerate << " splitting forests; max |proba sum-1|="
    << fmt("%.2e", worst_proba) << "; max per-class part deviation before remainder=" << fmt("%.3f", worst_strat)
    << " rows over " << kFuzzSplits << " datasets; max |importance sum-1|="
    << fmt("%.2e", worst_importance) << "; balanced accuracy " << ba_cases - ba_mismatch << "/"
    << ba_cases << " exhaustive cases match";
  report(1, pass, d.str());
}

// ---------------------------------------------------------------- group 2
void oracles() {
  Rng rng(derive_seed(kMasterSeed, "acceptance-oracles"));
  std::size_t split_match = 0;
  for (std::size_t i = 0; i < kSplitInstances; ++i) {
    const std::size_t rows = 2 + rng.below(kMaxSplitRows - 1);
    const std::size_t features = 1 + rng.below(4);
    auto [cols, y] = fuzz_instance(rng, rows, features, 4);
    const auto x = matrix(cols);
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.max_features = static_cast<int>(features);
    const Tree t = fit_tree(x, y, std::vector<std::uint32_t>(rows, 1), p, rng.next());
    const auto expected = exhaustive_root(x, y);
    const bool same = expected ? (!t.root().is_leaf() &&
                                  static_cast<std::size_t>(t.root().feature) == expected->feature &&
                                  t.root().threshold == expected->threshold)
                               : t.root().is_leaf();
    split_match += same ? 1 : 0;
  }

  std::size_t graph_match = 0;
  for (std::size_t i = 0; i < kRandomGraphs; ++i) {
    const int n = 3 + static_cast<int>(rng.below(6));
    auto [g, adj] = random_graph(rng, n);
    std::vector<double> in(n, 0.0);
    double total = 0.0;
    for (int to = 0; to < n; ++to) {
      for (int from = 0; from < n; ++from) {
        if (from != to) in[to] += adj[from][to];
      }
      total += in[to];
    }
    const auto imp = g.compute_importance();
    bool ok = imp.size() == static_cast<std::size_t>(n);
    for (int to = 0; to < n && ok; ++to) ok = std::abs(imp.at(to) - in[to] / total) <= 1e-12;
    graph_match += ok ? 1 : 0;
  }

  std::size_t meta_fixtures = 0;
  std::size_t meta_match = 0;
  for (std::size_t fixture = 0; fixture < 5; ++fixture) {
    auto [local_cols, local_y] = fuzz_instance(rng, 5 + fixture, 3, 0);
    const Dataset local = numeric_dataset(local_cols, local_y);
    std::vector<PublishedModel> bases;
    for (int k = 0; k < 3; ++k) {
      auto [cols, y] = fuzz_instance(rng, 80, 3, 0);
      const Dataset d = numeric_dataset(cols, y);
      ForestParams p;
      p.n_trees = 10;
      bases.push_back(PublishedModel{
          k, std::make_shared<const ForestModel>(fit_forest(encode(d, d.schema()), y, p, rng.next())),
          d.schema(), make_defaults(d, 0.0, 1)});
    }
    const EncodedMatrix m = build_meta_matrix(bases, local);
    bool ok = m.num_columns() == bases.size() && m.rows == local.num_rows();
    for (std::size_t j = 0; j < bases.size() && ok; ++j) {
      const auto proba = predict_proba(*bases[j].model, encode(local, local.schema()));
      for (std::size_t r = 0; r < m.rows && ok; ++r) ok = m.at(r, j) == proba[r][1];
    }
    ++meta_fixtures;
    meta_match += ok ? 1 : 0;
  }

  const bool pass = split_match == kSplitInstances && graph_match == kRandomGraphs &&
                    meta_match == meta_fixtures;
  std::ostringstream d;
  d << "root split matches exhaustive search on " << split_match << "/" << kSplitInstances
    << " instances; importance matches adjacency sums on " << graph_match << "/" << kRandomGraphs
    << " graphs; meta-matrix matches stacked probabilities on " << meta_match << "/"
    << meta_fixtures << " fixtures";
  report(2, pass, d.str());
}

// ---------------------------------------------------------------- group 3
void dirichlet() {
  Rng rng(derive_seed(kMasterSeed, "acceptance-dirichlet"));
  const std::vector<double> conc{kDirichletAlpha * 0.5, kDirichletAlpha * 0.5};
  double s = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < kDirichletDraws; ++i) {
    const double q = sample_dirichlet(conc, rng)[0];
    s += q;
    ss += q * q;
  }
  const double n = static_cast<double>(kDirichletDraws);
  const double mean = s / n;
  const double var = (ss - n * mean * mean) / (n - 1.0);
  // Beta(a, b) variance: ab / ((a+b)^2 (a+b+1)).
  const double a = conc[0];
  const double b = conc[1];
  const double beta_var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
  const bool pass =
      std::abs(mean - 0.5) <= kDirichletMeanTol && std::abs(var - beta_var) <= kDirichletVarTol;
  report(3, pass,
         "mean q1=" + fmt("%.5f", mean) + " (target 0.5 +/- 0.01), variance=" +
             fmt("%.6f", var) + " (Beta(50,50) variance " + fmt("%.6f", beta_var) +
             " +/- 0.005) over " + std::to_string(kDirichletDraws) + " draws");
}

// ---------------------------------------------------------------- runs
ExperimentConfig horizontal_config(Regime regime) {
  ExperimentConfig cfg;
  cfg.synthetic = SyntheticSource{kSyntheticRows, kSyntheticSeed};
  cfg.regime = regime;
  cfg.betas = {0.2, 0.5, 1.0};
  cfg.alphas = {0.1, 1.0, 10.0};
  cfg.rows_per_client = kLabelRowsPerClient;
  cfg.n_clients = 10;
  cfg.partition_seeds = 10;
  cfg.split_repeats = 5;
  cfg.master_seed = kMasterSeed;
  return cfg;
}

ExperimentConfig vertical_config() {
  ExperimentConfig cfg;
  cfg.synthetic = SyntheticSource{kVerticalRows, kSyntheticSeed};
  cfg.regime = Regime::kVertical;
  cfg.ps = {0.3, 0.6, 1.0};
  cfg.epsilons = {0.0, 1.0};
  cfg.n_clients = 10;
  cfg.partition_seeds = kVerticalSeeds;
  cfg.split_repeats = kVerticalRepeats;
  cfg.modes = {StackingMode::kHeldOut};
  cfg.master_seed = kMasterSeed;
  return cfg;
}

struct RunFiles {
  std::string results;
  std::string contributions;
};

RunFiles run_and_serialize(const ExperimentConfig& cfg, ExperimentResult* keep = nullptr) {
  ExperimentResult r = run_experiment(cfg);
  RunFiles f;
  std::ostringstream a;
  write_results(r.rows, a);
  f.results = a.str();
  std::ostringstream b;
  write_contributions(r.contributions, b);
  f.contributions = b.str();
  if (keep) *keep = std::move(r);
  return f;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct Stat {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

Stat stat_of(const std::vector<double>& v) {
  Stat s;
  s.n = v.size();
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

double key_value(const ResultRow& r) { return r.parameters.values.front().second; }

// Per grid value: mean gain over rows, and the standard error over per-seed means.
std::map<double, Stat> gain_by_point(const std::vector<ResultRow>& rows, const std::string& mode) {
  std::map<double, std::map<std::size_t, std::vector<double>>> by_seed;
  for (const auto& r : rows) {
    if (r.mode == mode) by_seed[key_value(r)][r.partition_seed].push_back(r.gain);
  }
  std::map<double, Stat> out;
  for (const auto& [point, seeds] : by_seed) {
    std::vector<double> all;
    std::vector<double> seed_means;
    for (const auto& [seed, gains] : seeds) {
      all.insert(all.end(), gains.begin(), gains.end());
      seed_means.push_back(stat_of(gains).mean);
    }
    Stat s = stat_of(all);
    s.se = stat_of(seed_means).se;
    out[point] = s;
  }
  return out;
}

std::string describe(const std::map<double, Stat>& m) {
  std::string s;
  for (const auto& [k, v] : m) {
    if (!s.empty()) s += ", ";
    s += format_real(k) + ":" + fmt("%+.4f", v.mean) + "(se " + fmt("%.4f", v.se) + ")";
  }
  return s;
}

void criterion4(const std::vector<ResultRow>& q, const std::vector<ResultRow>& l) {
  bool pass = true;
  std::ostringstream d;
  double self_held = 0.0, self_pooled = 0.0;
  std::size_t n_held = 0, n_pooled = 0;
  for (const auto* rows : {&q, &l}) {
    const auto held = gain_by_point(*rows, "held_out");
    const auto pooled = gain_by_point(*rows, "pooled");
    for (const auto& [point, s] : held) {
      const auto it = pooled.find(point);
      const bool ok = it != pooled.end() && s.mean >= it->second.mean;
      pass &= ok;
      d << rows->front().parameters.values.front().first << "=" << format_real(point) << " held "
        << fmt("%+.4f", s.mean) << " vs pooled "
        << fmt("%+.4f", it == pooled.end() ? NAN : it->second.mean) << (ok ? "; " : " (violated); ");
    }
    pass &= held.size() == 3 && pooled.size() == 3;
    for (const auto& r : *rows) {
      if (r.mode == "held_out") {
        self_held += r.self_importance;
        ++n_held;
      } else {
        self_pooled += r.self_importance;
        ++n_pooled;
      }
    }
  }
  self_held /= static_cast<double>(n_held);
  self_pooled /= static_cast<double>(n_pooled);
  pass &= self_pooled > self_held;
  d << "mean self-importance pooled " << fmt("%.4f", self_pooled) << " vs held-out "
    << fmt("%.4f", self_held);
  report(4, pass, d.str());
}

// Non-increasing in the grid value, allowing one inversion within one
// combined standard error.
bool non_increasing(const std::map<double, Stat>& m, int* inversions) {
  *inversions = 0;
  bool ok = true;
  for (auto it = m.begin(); std::next(it) != m.end(); ++it) {
    const Stat& a = it->second;
    const Stat& b = std::next(it)->second;
    if (b.mean > a.mean) {
      ++*inversions;
      ok &= b.mean - a.mean <= std::sqrt(a.se * a.se + b.se * b.se);
    }
  }
  return ok && *inversions <= 1;
}

void criterion5(const std::vector<ResultRow>& q, const std::vector<ResultRow>& l) {
  const auto qg = gain_by_point(q, "held_out");
  const auto lg = gain_by_point(l, "held_out");
  int qi = 0, li = 0;
  const bool pass = qg.size() == 3 && lg.size() == 3 && non_increasing(qg, &qi) &&
                    non_increasing(lg, &li);
  report(5, pass,
         "held-out gain by beta {" + describe(qg) + "} inversions=" + std::to_string(qi) +
             "; by alpha {" + describe(lg) + "} inversions=" + std::to_string(li));
}

void criterion6(const std::vector<ResultRow>& q) {
  // (point, seed) -> client -> (share, importances over repeats)
  std::map<std::pair<double, std::size_t>, std::map<int, std::pair<double, std::vector<double>>>>
      cells;
  std::map<std::pair<double, std::size_t>, double> totals;
  for (const auto& r : q) {
    if (r.mode != "held_out") continue;
    const auto key = std::make_pair(key_value(r), r.partition_seed);
    auto& entry = cells[key][r.client_id];
    entry.first = static_cast<double>(r.n_private_rows);
    entry.second.push_back(r.importance);
  }
  std::size_t positive = 0;
  std::size_t defined = 0;
  for (const auto& [key, clients] : cells) {
    std::vector<double> share;
    std::vector<double> imp;
    double total = 0.0;
    for (const auto& [id, e] : clients) total += e.first;
    for (const auto& [id, e] : clients) {
      share.push_back(e.first / total);
      imp.push_back(stat_of(e.second).mean);
    }
    ++defined;
    try {
      if (spearman(share, imp) > 0.0) ++positive;
    } catch (const std::exception&) {
      // Undefined correlation counts as not positive.
    }
  }
  const double frac = defined ? static_cast<double>(positive) / static_cast<double>(defined) : 0.0;
  report(6, defined > 0 && frac >= kShareCellFraction,
         std::to_string(positive) + "/" + std::to_string(defined) +
             " quantity-skew cells with positive share-importance Spearman (" +
             fmt("%.2f", frac) + ", need >= 0.80)");
}

void horizontal(const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig q = horizontal_config(Regime::kQuantity);
  ExperimentConfig l = horizontal_config(Regime::kLabel);
  q.workers = l.workers = 1;
  ExperimentResult qr;
  ExperimentResult lr;
  const RunFiles qf = run_and_serialize(q, &qr);
  const RunFiles lf = run_and_serialize(l, &lr);
  fs::create_directories(dir);
  write_file(dir / "quantity_results.csv", qf.results);
  write_file(dir / "quantity_contributions.csv", qf.contributions);
  write_file(dir / "label_results.csv", lf.results);
  write_file(dir / "label_contributions.csv", lf.contributions);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  std::printf("horizontal run: %zu quantity rows (%zu/%zu cells skipped), %zu label rows "
              "(%zu/%zu cells skipped), %.1f min on 1 worker\n",
              qr.rows.size(), qr.skipped_cells, qr.total_cells, lr.rows.size(), lr.skipped_cells,
              lr.total_cells, minutes);
  criterion4(qr.rows, lr.rows);
  criterion5(qr.rows, lr.rows);
  criterion6(qr.rows);
}

void determinism(const fs::path& dir) {
  ExperimentConfig q = horizontal_config(Regime::kQuantity);
  ExperimentConfig l = horizontal_config(Regime::kLabel);
  q.workers = l.workers = 3;
  const auto saved_q = read_file(dir / "quantity_results.csv");
  const auto saved_l = read_file(dir / "label_results.csv");
  RunFiles first_q;
  RunFiles first_l;
  std::string origin = "saved single-worker run";
  if (saved_q && saved_l) {
    first_q.results = *saved_q;
    first_l.results = *saved_l;
    first_q.contributions = read_file(dir / "quantity_contributions.csv").value_or("");
    first_l.contributions = read_file(dir / "label_contributions.csv").value_or("");
  } else {
    origin = "fresh single-worker run";
    ExperimentConfig q1 = q;
    ExperimentConfig l1 = l;
    q1.workers = l1.workers = 1;
    first_q = run_and_serialize(q1);
    first_l = run_and_serialize(l1);
  }
  const RunFiles again_q = run_and_serialize(q);
  const RunFiles again_l = run_and_serialize(l);
  const bool same_q = again_q.results == first_q.results;
  const bool same_l = again_l.results == first_l.results;
  const bool same_c = again_q.contributions == first_q.contributions &&
                      again_l.contributions == first_l.contributions;
  report(8, same_q && same_l && same_c,
         "3-worker rerun vs " + origin + ": quantity results " +
             (same_q ? "identical" : "differ") + " (" + std::to_string(first_q.results.size()) +
             " bytes), label results " + (same_l ? "identical" : "differ") + " (" +
             std::to_string(first_l.results.size()) + " bytes), contributions " +
             (same_c ? "identical" : "differ"));
}

void vertical(const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = vertical_config();
  cfg.workers = 1;
  ExperimentResult r;
  const RunFiles files = run_and_serialize(cfg, &r);
  fs::create_directories(dir);
  write_file(dir / "vertical_results.csv", files.results);
  write_file(dir / "vertical_contributions.csv", files.contributions);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  std::printf("vertical run: %zu rows, %zu/%zu cells skipped, %.1f min on 1 worker\n",
              r.rows.size(), r.skipped_cells, r.total_cells, minutes);

  std::vector<double> jac;
  std::vector<double> weight;
  for (const auto& c : r.contributions) {
    if (c.from == c.to || !c.jaccard || c.mode != "held_out") continue;
    jac.push_back(*c.jaccard);
    weight.push_back(c.weight);
  }
  double rho = NAN;
  try {
    rho = spearman(jac, weight);
  } catch (const std::exception&) {
  }
  std::map<double, std::vector<double>> self_by_p;
  for (const auto& row : r.rows) {
    if (row.mode != "held_out" || row.parameters.get("epsilon").value_or(0.0) != 0.0) continue;
    self_by_p[*row.parameters.get("p")].push_back(row.self_importance);
  }
  bool decreasing = self_by_p.size() == 3;
  std::string trend;
  double prev = INFINITY;
  for (const auto& [p, v] : self_by_p) {
    const double m = stat_of(v).mean;
    decreasing &= m < prev;
    prev = m;
    trend += (trend.empty() ? "" : ", ") + format_real(p) + ":" + fmt("%.4f", m);
  }
  const bool pass = rho > kJaccardRho && decreasing;
  report(7, pass,
         "Spearman(Jaccard, importance)=" + fmt("%.3f", rho) + " over " +
             std::to_string(jac.size()) + " edges (need > 0.2); self-importance at epsilon=0 by p {" +
             trend + "}" + (decreasing ? " decreasing" : " not decreasing"));
}

}  // namespace

int main(int argc, char** argv) {
  const std::set<std::string> groups{"properties", "oracles", "dirichlet", "horizontal",
                                     "determinism", "vertical", "all"};
  if (argc < 2 || !groups.count(argv[1])) {
    std::fprintf(stderr,
                 "usage: acceptance <properties|oracles|dirichlet|horizontal|determinism|vertical|all> "
                 "[work_dir]\n");
    return 2;
  }
  const std::string group = argv[1];
  const fs::path dir = argc > 2 ? fs::path(argv[2]) : fs::current_path() / "acceptance_runs";
  const auto want = [&](const char* g) { return group == g || group == "all"; };
  try {
    if (want("properties")) properties();
    if (want("oracles")) oracles();
    if (want("dirichlet")) dirichlet();
    if (want("horizontal")) horizontal(dir);
    if (want("determinism")) determinism(dir);
    if (want("vertical")) vertical(dir);
  } catch (const std::exception& e) {
    std::printf("acceptance group %s aborted: %s\n", group.c_str(), e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}

#include "stackfed/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "stackfed/error.hpp"
#include "stackfed/federation.hpp"
#include "stackfed/metrics.hpp"
#include "stackfed/rng.hpp"
#include "stackfed/synth.hpp"

namespace stackfed {
namespace {

using nlohmann::json;

void require_known_keys(const json& obj, std::initializer_list<std::string_view> known,
                        std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown key '" + key + "' in " + std::string(where));
    }
  }
}

std::vector<double> real_list(const json& j, std::string_view name) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be a number or a list");
  }
  return j.get<std::vector<double>>();
}

ForestParams parse_forest(const json& j) {
  require_known_keys(j,
                     {"n_trees", "max_depth", "min_samples_split", "min_samples_leaf",
                      "max_features", "bootstrap"},
                     "forest");
  ForestParams p;
  if (j.contains("n_trees")) p.n_trees = j.at("n_trees").get<int>();
  if (j.contains("max_depth") && !j.at("max_depth").is_null()) {
    p.max_depth = j.at("max_depth").get<int>();
  }
  if (j.contains("min_samples_split")) p.min_samples_split = j.at("min_samples_split").get<int>();
  if (j.contains("min_samples_leaf")) p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  if (j.contains("max_features") && !j.at("max_features").is_null()) {
    p.max_features = j.at("max_features").get<int>();
  }
  if (j.contains("bootstrap")) p.bootstrap = j.at("bootstrap").get<bool>();
  return p;
}

// Substream seeds. The grid point is deliberately not part of the key: all
// points of a sweep see the same draws for a given partition seed, so trends
// across the grid are compared on paired samples.
std::uint64_t cell_seed(const ExperimentConfig& cfg, std::string_view tag,
                        std::initializer_list<std::uint64_t> keys) {
  return derive_seed(cfg.master_seed, tag, keys);
}

struct CellOutput {
  std::vector<ResultRow> rows;
  std::vector<ContributionRecord> contributions;
  std::vector<std::string> log;
  bool skipped = false;
};

Federation build_federation(const ExperimentConfig& cfg, const ParamPoint& point,
                            const Dataset& data, std::uint64_t seed) {
  switch (cfg.regime) {
    case Regime::kQuantity:
      return quantity_skew(data, cfg.n_clients, *point.get("beta"), seed);
    case Regime::kLabel:
      return label_skew(data, cfg.n_clients, *point.get("alpha"), cfg.rows_per_client, seed);
    case Regime::kVertical:
      return vertical_split(data, cfg.n_clients, *point.get("p"), seed);
    case Regime::kNatural:
      return natural_split(data, cfg.column);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown regime");
}

CellOutput run_cell(const ExperimentConfig& cfg, const Dataset& data, const ParamPoint& point,
                    std::size_t pseed) {
  CellOutput out;
  const std::string regime(to_string(cfg.regime));
  const std::string where = regime + " " + point.label() + " seed " + std::to_string(pseed);
  Federation fed;
  try {
    fed = build_federation(cfg, point, data, cell_seed(cfg, "partition", {pseed}));
  } catch (const Error& e) {
    out.log.push_back("skipped cell " + where + ": " + e.what());
    out.skipped = true;
    return out;
  }
  for (const auto& w : fed.descriptor.warnings) out.log.push_back(where + ": " + w);

  std::vector<Client> clients;
  for (auto& c : fed.clients) {
    if (is_viable_client(c.data)) {
      clients.push_back(std::move(c));
    } else {
      const auto counts = c.data.class_counts();
      out.log.push_back(where + ": dropped client " + std::to_string(c.id) + " (" +
                        std::to_string(c.data.num_rows()) + " rows, class counts " +
                        std::to_string(counts.size() > 0 ? counts[0] : 0) + "/" +
                        std::to_string(counts.size() > 1 ? counts[1] : 0) + ")");
    }
  }
  if (clients.empty()) {
    out.log.push_back("skipped cell " + where + ": no viable clients");
    out.skipped = true;
    return out;
  }

  const double epsilon = point.get("epsilon").value_or(0.0);
  Registry registry;
  std::map<int, DefaultValues> defaults;
  std::map<int, std::shared_ptr<const ForestModel>> public_models;
  for (const auto& c : clients) {
    const auto id = static_cast<std::uint64_t>(c.id);
    defaults[c.id] = make_defaults(c.data, epsilon, cell_seed(cfg, "defaults", {pseed, id}));
    public_models[c.id] = std::make_shared<const ForestModel>(
        fit_forest(encode(c.data, c.data.schema()), c.data.labels(), cfg.forest,
                   cell_seed(cfg, "public", {pseed, id})));
    registry.publish(PublishedModel{c.id, public_models[c.id], c.data.schema(), defaults[c.id]});
  }
  registry.freeze();

  std::map<int, std::vector<PublishedModel>> fetched;
  std::map<int, FetchedPredictions> predictions;
  for (const auto& c : clients) {
    fetched[c.id] = registry.fetch_for(c.id);
    predictions[c.id] = predict_fetched(fetched[c.id], c.data, c.id);
    for (const auto& w : predictions[c.id].warnings) out.log.push_back(where + ": " + w);
  }

  std::map<std::pair<int, int>, double> pair_jaccard;
  std::map<int, double> jaccard_mean;
  if (cfg.regime == Regime::kVertical) {
    for (const auto& a : clients) {
      double total = 0.0;
      for (const auto& b : clients) {
        const double j = jaccard(a.raw_feature_set, b.raw_feature_set);
        pair_jaccard[{a.id, b.id}] = j;
        if (a.id != b.id) total += j;
      }
      if (clients.size() > 1) jaccard_mean[a.id] = total / static_cast<double>(clients.size() - 1);
    }
  }

  for (std::size_t repeat = 0; repeat < cfg.split_repeats; ++repeat) {
    std::map<int, SplitTriple> splits;
    for (const auto& c : clients) {
      splits[c.id] = stratified_split(
          c.data, kDefaultSplitFractions,
          cell_seed(cfg, "split", {pseed, static_cast<std::uint64_t>(c.id), repeat}));
    }
    for (StackingMode mode : cfg.modes) {
      ContributionGraph graph;
      std::vector<ClientReport> reports;
      for (const auto& c : clients) {
        ClientState state;
        state.client_id = c.id;
        state.data = c.data;
        state.split = splits[c.id];
        state.mode = mode;
        state.defaults = defaults[c.id];
        state.public_model = public_models[c.id];
        state = run_client(
            std::move(state), fetched[c.id], cfg.forest,
            cell_seed(cfg, "client", {pseed, static_cast<std::uint64_t>(c.id), repeat}),
            &predictions[c.id]);
        reports.push_back(evaluate_client(state));
        graph.record_report(c.id, reports.back());
      }
      const auto importance = graph.compute_importance();
      for (std::size_t i = 0; i < clients.size(); ++i) {
        const Client& c = clients[i];
        const ClientReport& rep = reports[i];
        ResultRow row;
        row.regime = regime;
        row.parameters = point;
        row.partition_seed = pseed;
        row.repeat = repeat;
        row.client_id = c.id;
        row.mode = std::string(to_string(mode));
        row.n_private_rows = c.data.num_rows();
        row.private_ba = rep.private_ba;
        row.meta_ba = rep.meta_ba;
        row.gain = rep.gain;
        row.self_importance = rep.self_importance;
        row.importance = importance.at(c.id);
        row.label_balance = c.data.positive_fraction();
        if (const auto it = jaccard_mean.find(c.id); it != jaccard_mean.end()) {
          row.jaccard_mean = it->second;
        }
        out.rows.push_back(std::move(row));
        if (rep.degenerate) {
          out.log.push_back(where + " repeat " + std::to_string(repeat) + " " +
                            std::string(to_string(mode)) + ": client " + std::to_string(c.id) +
                            " reported all-zero contributions");
        }
      }
      for (const auto& e : graph.edges()) {
        ContributionRecord rec;
        rec.regime = regime;
        rec.parameters = point;
        rec.partition_seed = pseed;
        rec.repeat = repeat;
        rec.mode = std::string(to_string(mode));
        rec.from = e.from;
        rec.to = e.to;
        rec.weight = e.weight;
        if (const auto it = pair_jaccard.find({e.from, e.to}); it != pair_jaccard.end()) {
          rec.jaccard = it->second;
        }
        out.contributions.push_back(std::move(rec));
      }
    }
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& message) {
    throw Error(ErrorCode::kInvalidArgument, "invalid config: " + message);
  };
  switch (regime) {
    case Regime::kQuantity:
      if (betas.empty()) fail("quantity regime needs a non-empty beta list");
      for (double b : betas) {
        if (!(b > 0.0 && b <= 1.0)) {
          fail("beta must lie in (0, 1], got " + format_real(b));
        }
      }
      break;
    case Regime::kLabel:
      if (alphas.empty()) fail("label regime needs a non-empty alpha list");
      for (double a : alphas) {
        if (!(a > 0.0)) fail("alpha must be > 0, got " + format_real(a));
      }
      if (rows_per_client == 0) fail("label regime needs rows_per_client >= 1");
      break;
    case Regime::kVertical:
      if (ps.empty() || epsilons.empty()) fail("vertical regime needs non-empty p and epsilon lists");
      for (double p : ps) {
        if (!(p > 0.0 && p <= 1.0)) fail("p must lie in (0, 1], got " + format_real(p));
      }
      for (double e : epsilons) {
        if (!(e >= 0.0)) fail("epsilon must be >= 0, got " + format_real(e));
      }
      break;
    case Regime::kNatural:
      if (column.empty()) fail("natural regime needs a partition column");
      break;
  }
  if (n_clients < 1) fail("n_clients must be >= 1");
  if (partition_seeds < 1) fail("partition_seeds must be >= 1");
  if (split_repeats < 1) fail("split_repeats must be >= 1");
  if (modes.empty()) fail("modes must not be empty");
  if (!synthetic && dataset_path.empty()) fail("dataset_path or synthetic source required");
  forest.validate();
}

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kMalformedInput, "config must be a JSON object");
  try {
    require_known_keys(doc,
                       {"dataset_path", "target_name", "synthetic", "regime", "parameter_grid",
                        "n_clients", "partition_seeds", "split_repeats", "modes", "forest",
                        "master_seed", "output_dir", "workers"},
                       "config");
    const auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    if (doc.contains("dataset_path")) cfg.dataset_path = resolve(doc.at("dataset_path").get<std::string>());
    if (doc.contains("target_name")) cfg.target_name = doc.at("target_name").get<std::string>();
    if (doc.contains("synthetic")) {
      const json& s = doc.at("synthetic");
      require_known_keys(s, {"rows", "seed"}, "synthetic");
      SyntheticSource src;
      if (s.contains("rows")) src.rows = s.at("rows").get<std::size_t>();
      if (s.contains("seed")) src.seed = s.at("seed").get<std::uint64_t>();
      cfg.synthetic = src;
    }
    if (!doc.contains("regime")) throw Error(ErrorCode::kInvalidArgument, "config lacks 'regime'");
    cfg.regime = parse_regime(doc.at("regime").get<std::string>());
    const json grid = doc.value("parameter_grid", json::object());
    switch (cfg.regime) {
      case Regime::kQuantity:
        require_known_keys(grid, {"beta"}, "parameter_grid");
        if (grid.contains("beta")) cfg.betas = real_list(grid.at("beta"), "beta");
        break;
      case Regime::kLabel:
        require_known_keys(grid, {"alpha", "rows_per_client"}, "parameter_grid");
        if (grid.contains("alpha")) cfg.alphas = real_list(grid.at("alpha"), "alpha");
        if (grid.contains("rows_per_client")) {
          cfg.rows_per_client = grid.at("rows_per_client").get<std::size_t>();
        }
        break;
      case Regime::kVertical:
        require_known_keys(grid, {"p", "epsilon"}, "parameter_grid");
        if (grid.contains("p")) cfg.ps = real_list(grid.at("p"), "p");
        if (grid.contains("epsilon")) cfg.epsilons = real_list(grid.at("epsilon"), "epsilon");
        break;
      case Regime::kNatural:
        require_known_keys(grid, {"column"}, "parameter_grid");
        if (grid.contains("column")) cfg.column = grid.at("column").get<std::string>();
        break;
    }
    if (doc.contains("n_clients")) cfg.n_clients = doc.at("n_clients").get<std::size_t>();
    if (doc.contains("partition_seeds")) cfg.partition_seeds = doc.at("partition_seeds").get<std::size_t>();
    if (doc.contains("split_repeats")) cfg.split_repeats = doc.at("split_repeats").get<std::size_t>();
    if (doc.contains("modes")) {
      cfg.modes.clear();
      for (const auto& m : doc.at("modes")) {
        const StackingMode mode = parse_mode(m.get<std::string>());
        if (std::find(cfg.modes.begin(), cfg.modes.end(), mode) == cfg.modes.end()) {
          cfg.modes.push_back(mode);
        }
      }
    }
    if (doc.contains("forest")) cfg.forest = parse_forest(doc.at("forest"));
    if (doc.contains("master_seed")) cfg.master_seed = doc.at("master_seed").get<std::uint64_t>();
    if (doc.contains("output_dir")) cfg.output_dir = resolve(doc.at("output_dir").get<std::string>());
    if (doc.contains("workers")) cfg.workers = doc.at("workers").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("invalid config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open config '" + path.string() + "'");
  const std::string text(std::istreambuf_iterator<char>(in), {});
  return parse_config(text, path.parent_path());
}

std::string ParamPoint::label() const {
  std::string out;
  for (const auto& [name, value] : values) {
    if (!out.empty()) out += ';';
    out += name + "=" + format_real(value);
  }
  if (!column.empty()) {
    if (!out.empty()) out += ';';
    out += "column=" + column;
  }
  return out;
}

std::optional<double> ParamPoint::get(std::string_view name) const {
  for (const auto& [n, v] : values) {
    if (n == name) return v;
  }
  return std::nullopt;
}

std::vector<ParamPoint> parameter_points(const ExperimentConfig& cfg) {
  std::vector<ParamPoint> points;
  switch (cfg.regime) {
    case Regime::kQuantity:
      for (double b : cfg.betas) points.push_back({{{"beta", b}}, ""});
      break;
    case Regime::kLabel:
      for (double a : cfg.alphas) points.push_back({{{"alpha", a}}, ""});
      break;
    case Regime::kVertical:
      for (double p : cfg.ps) {
        for (double e : cfg.epsilons) points.push_back({{{"p", p}, {"epsilon", e}}, ""});
      }
      break;
    case Regime::kNatural:
      points.push_back({{}, cfg.column});
      break;
  }
  return points;
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STACKFED_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Dataset load_experiment_data(const ExperimentConfig& cfg) {
  if (cfg.synthetic) {
    return preprocess_binary(synthetic_dataset(cfg.synthetic->rows, cfg.synthetic->seed));
  }
  return preprocess_binary(load_csv(cfg.dataset_path, cfg.target_name));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, load_experiment_data(cfg));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  const auto points = parameter_points(cfg);
  // The natural regime is deterministic; one partition seed suffices.
  const std::size_t seeds = cfg.regime == Regime::kNatural ? 1 : cfg.partition_seeds;
  struct Task {
    std::size_t point;
    std::size_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t s = 0; s < seeds; ++s) tasks.push_back({p, s});
  }
  std::vector<CellOutput> outputs(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        outputs[i] = run_cell(cfg, data, points[tasks[i].point], tasks[i].seed);
      } catch (const std::exception& e) {
        outputs[i] = CellOutput{};
        outputs[i].skipped = true;
        outputs[i].log.push_back("failed cell " + points[tasks[i].point].label() + " seed " +
                                 std::to_string(tasks[i].seed) + ": " + e.what());
      }
    }
  };
  const std::size_t n_workers = std::min(resolve_workers(cfg.workers), std::max<std::size_t>(tasks.size(), 1));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  ExperimentResult result;
  result.total_cells = tasks.size();
  for (auto& o : outputs) {
    result.skipped_cells += o.skipped ? 1 : 0;
    std::move(o.rows.begin(), o.rows.end(), std::back_inserter(result.rows));
    std::move(o.contributions.begin(), o.contributions.end(),
              std::back_inserter(result.contributions));
    std::move(o.log.begin(), o.log.end(), std::back_inserter(result.log));
  }
  if (result.skipped_cells == result.total_cells) {
    std::string message = "every experiment cell failed";
    if (!result.log.empty()) message += "; first: " + result.log.front();
    throw Error(ErrorCode::kDegeneratePartition, message);
  }
  sort_rows(result.rows);
  return result;
}

}  // namespace stackfed

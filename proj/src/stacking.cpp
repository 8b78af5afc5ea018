#include "stackfed/stacking.hpp"

#include <algorithm>
#include <variant>

#include "stackfed/error.hpp"
#include "stackfed/metrics.hpp"
#include "stackfed/rng.hpp"

namespace stackfed {
namespace {

std::vector<int> labels_at(const Dataset& d, std::span<const std::size_t> rows) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (std::size_t r : rows) y.push_back(d.labels()[r]);
  return y;
}

const DefaultValue& default_for(const PublishedModel& pm, const std::string& feature) {
  const auto it = pm.defaults.values.find(feature);
  if (it == pm.defaults.values.end()) {
    throw Error(ErrorCode::kInvalidArgument, "client " + std::to_string(pm.owner) +
                                                 " published no default for '" + feature + "'");
  }
  return it->second;
}

}  // namespace

std::string_view to_string(StackingMode mode) {
  return mode == StackingMode::kHeldOut ? "held_out" : "pooled";
}

StackingMode parse_mode(std::string_view name) {
  if (name == "held_out") return StackingMode::kHeldOut;
  if (name == "pooled") return StackingMode::kPooled;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown stacking mode '" + std::string(name) + "' (expected held_out or pooled)");
}

EncodedMatrix align_features(const PublishedModel& pm, const Dataset& local,
                             AlignmentStats* stats) {
  AlignmentStats local_stats;
  const Schema& schema = pm.schema;
  std::vector<std::string> raw_of;
  for (const auto& f : schema.features()) {
    const std::size_t width = f.is_categorical() ? f.vocabulary.size() : 1;
    for (std::size_t k = 0; k < width; ++k) raw_of.push_back(f.name);
  }
  const std::size_t n = local.num_rows();
  EncodedMatrix m = EncodedMatrix::zeros(encoded_columns(schema), std::move(raw_of), n);
  std::size_t out_col = 0;
  for (const auto& f : schema.features()) {
    auto local_idx = local.schema().index_of(f.name);
    if (local_idx && local.schema().feature(*local_idx).kind != f.kind) local_idx.reset();
    if (f.is_categorical()) {
      std::uint32_t fallback = 0;
      bool have_fallback = false;
      const auto fallback_code = [&]() {
        if (!have_fallback) {
          const auto* label = std::get_if<std::string>(&default_for(pm, f.name));
          const auto idx = label ? f.category_index(*label) : std::nullopt;
          if (!idx) {
            throw Error(ErrorCode::kInvalidArgument,
                        "default for '" + f.name + "' is not a category of its vocabulary");
          }
          fallback = *idx;
          have_fallback = true;
        }
        return fallback;
      };
      if (local_idx) {
        const FeatureSpec& local_spec = local.schema().feature(*local_idx);
        std::vector<std::optional<std::uint32_t>> remap(local_spec.vocabulary.size());
        for (std::size_t k = 0; k < remap.size(); ++k) {
          remap[k] = f.category_index(local_spec.vocabulary[k]);
        }
        for (std::size_t r = 0; r < n; ++r) {
          std::uint32_t code;
          if (local.is_missing(r, *local_idx)) {
            code = fallback_code();
          } else if (const auto mapped = remap[local.code(r, *local_idx)]) {
            code = *mapped;
          } else {
            code = fallback_code();
            ++local_stats.out_of_vocabulary;
          }
          m.column(out_col + code)[r] = 1.0;
        }
      } else {
        ++local_stats.imputed_features;
        const std::uint32_t code = fallback_code();
        auto col = m.column(out_col + code);
        std::fill(col.begin(), col.end(), 1.0);
      }
      out_col += f.vocabulary.size();
    } else {
      auto dst = m.column(out_col);
      std::optional<double> fill;
      const auto fill_value = [&]() {
        if (!fill) {
          const auto* v = std::get_if<double>(&default_for(pm, f.name));
          if (!v) {
            throw Error(ErrorCode::kInvalidArgument,
                        "default for numeric '" + f.name + "' is not a number");
          }
          fill = *v;
        }
        return *fill;
      };
      if (local_idx) {
        for (std::size_t r = 0; r < n; ++r) {
          dst[r] = local.is_missing(r, *local_idx) ? fill_value() : local.numeric(r, *local_idx);
        }
      } else {
        ++local_stats.imputed_features;
        std::fill(dst.begin(), dst.end(), fill_value());
      }
      ++out_col;
    }
  }
  if (stats) *stats = local_stats;
  return m;
}

std::string meta_column_name(int owner) { return "client_" + std::to_string(owner); }

EncodedMatrix build_meta_matrix(std::span<const PublishedModel> bases, const Dataset& local_rows) {
  if (bases.empty()) throw Error(ErrorCode::kInvalidArgument, "meta-matrix needs a base model");
  std::vector<std::string> names;
  for (const auto& b : bases) names.push_back(meta_column_name(b.owner));
  EncodedMatrix m = EncodedMatrix::zeros(names, names, local_rows.num_rows());
  for (std::size_t j = 0; j < bases.size(); ++j) {
    const auto p = predict_positive(*bases[j].model, align_features(bases[j], local_rows));
    std::copy(p.begin(), p.end(), m.column(j).begin());
  }
  return m;
}

FetchedPredictions predict_fetched(std::span<const PublishedModel> fetched, const Dataset& local,
                                   int requester) {
  FetchedPredictions out;
  for (const auto& pm : fetched) {
    if (pm.owner == requester) continue;
    try {
      out.positive[pm.owner] = predict_positive(*pm.model, align_features(pm, local));
    } catch (const Error& e) {
      out.warnings.push_back("client " + std::to_string(requester) + " dropped model of client " +
                             std::to_string(pm.owner) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::size_t> ClientState::private_rows() const {
  return mode == StackingMode::kHeldOut ? split.train : split.pooled();
}

std::vector<std::size_t> ClientState::meta_rows() const {
  return mode == StackingMode::kHeldOut ? split.meta_train : split.pooled();
}

ClientState run_client(ClientState c, std::span<const PublishedModel> fetched,
                       const ForestParams& params, std::uint64_t seed,
                       const FetchedPredictions* cache) {
  const Schema& schema = c.data.schema();
  const auto train_rows = c.private_rows();
  const Dataset train = c.data.subset(train_rows);
  c.private_model = std::make_shared<const ForestModel>(
      fit_forest(encode(train, schema), train.labels(), params, derive_seed(seed, "private")));

  FetchedPredictions computed;
  if (!cache) {
    computed = predict_fetched(fetched, c.data, c.client_id);
    cache = &computed;
  }
  c.fetched_positive.clear();
  c.base_order = {c.client_id};
  for (const auto& pm : fetched) {
    if (pm.owner == c.client_id) continue;
    const auto it = cache->positive.find(pm.owner);
    if (it == cache->positive.end()) continue;
    if (it->second.size() != c.data.num_rows()) {
      throw Error(ErrorCode::kInvalidArgument, "cached predictions do not cover the client's rows");
    }
    c.fetched_positive.emplace(pm.owner, it->second);
  }
  for (const auto& [owner, _] : c.fetched_positive) c.base_order.push_back(owner);
  c.warnings.insert(c.warnings.end(), cache->warnings.begin(), cache->warnings.end());

  const auto rows = c.meta_rows();
  const EncodedMatrix meta_x = client_meta_matrix(c, rows);
  const auto meta_y = labels_at(c.data, rows);
  c.meta_model = std::make_shared<const ForestModel>(
      fit_forest(meta_x, meta_y, params, derive_seed(seed, "meta")));
  return c;
}

EncodedMatrix client_meta_matrix(const ClientState& c, std::span<const std::size_t> rows) {
  if (!c.private_model) throw Error(ErrorCode::kInvalidArgument, "private model not trained");
  std::vector<std::string> names;
  for (int owner : c.base_order) names.push_back(meta_column_name(owner));
  EncodedMatrix m = EncodedMatrix::zeros(names, names, rows.size());
  const Dataset subset = c.data.subset(rows);
  const auto own = predict_positive(*c.private_model, encode(subset, c.data.schema()));
  std::copy(own.begin(), own.end(), m.column(0).begin());
  for (std::size_t j = 1; j < c.base_order.size(); ++j) {
    const auto& all = c.fetched_positive.at(c.base_order[j]);
    auto col = m.column(j);
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = all[rows[i]];
  }
  return m;
}

ClientReport evaluate_client(const ClientState& c) {
  if (!c.private_model || !c.meta_model) {
    throw Error(ErrorCode::kInvalidArgument, "client models not trained");
  }
  const auto& test = c.split.test;
  const Dataset test_data = c.data.subset(test);
  const auto y = labels_at(c.data, test);
  const auto private_pred = predict(*c.private_model, encode(test_data, c.data.schema()));
  const auto meta_pred = predict(*c.meta_model, client_meta_matrix(c, test));

  ClientReport report;
  report.client_id = c.client_id;
  report.private_ba = balanced_accuracy(y, private_pred);
  report.meta_ba = balanced_accuracy(y, meta_pred);
  report.gain = report.meta_ba - report.private_ba;
  const auto scores = mdi_importance(*c.meta_model);
  report.self_importance = scores[0];
  for (std::size_t j = 1; j < c.base_order.size(); ++j) {
    report.contributions[c.base_order[j]] = scores[j];
  }
  report.degenerate = std::all_of(scores.begin(), scores.end(), [](double s) { return s == 0.0; });
  return report;
}

}  // namespace stackfed

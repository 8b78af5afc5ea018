#include "stackfed/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stackfed/error.hpp"

namespace stackfed {
namespace {

Federation horizontal(const Dataset& d, std::vector<std::vector<std::size_t>> groups,
                      PartitionDescriptor descriptor) {
  Federation fed;
  fed.descriptor = std::move(descriptor);
  const auto names = d.schema().feature_names();
  const std::set<std::string> all(names.begin(), names.end());
  int id = 0;
  for (auto& rows : groups) {
    std::sort(rows.begin(), rows.end());
    fed.clients.push_back(Client{id++, d.subset(rows), all});
  }
  return fed;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::kQuantity: return "quantity";
    case Regime::kLabel: return "label";
    case Regime::kVertical: return "vertical";
    case Regime::kNatural: return "natural";
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  for (Regime r : {Regime::kQuantity, Regime::kLabel, Regime::kVertical, Regime::kNatural}) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown regime '" + std::string(name) +
                  "' (expected quantity, label, vertical or natural)");
}

bool is_viable_client(const Dataset& d) {
  if (d.num_rows() < kMinClientRows) return false;
  const auto counts = d.class_counts();
  return counts.size() == 2 && counts[0] >= kMinClassRows && counts[1] >= kMinClassRows;
}

std::vector<double> power_shares(std::size_t n_clients, double beta, Rng& rng) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "beta must lie in (0, 1]");
  }
  std::vector<double> s(n_clients);
  for (double& v : s) v = std::pow(rng.uniform_open(), 1.0 / beta);
  double total = std::accumulate(s.begin(), s.end(), 0.0);
  if (!(total > 0.0)) {
    // Every draw underflowed; the largest uniform still wins the data.
    std::fill(s.begin(), s.end(), 0.0);
    s[0] = 1.0;
    total = 1.0;
  }
  for (double& v : s) v /= total;
  return s;
}

std::vector<double> sample_dirichlet(std::span<const double> concentration, Rng& rng) {
  std::vector<double> logs(concentration.size());
  for (std::size_t k = 0; k < concentration.size(); ++k) {
    logs[k] = rng.log_gamma_variate(concentration[k]);
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  std::vector<double> q(logs.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    q[k] = std::exp(logs[k] - top);
    total += q[k];
  }
  for (double& v : q) v /= total;
  return q;
}

Federation quantity_skew(const Dataset& d, std::size_t n_clients, double beta,
                         std::uint64_t seed) {
  if (n_clients < 1) throw Error(ErrorCode::kInvalidArgument, "n_clients must be at least 1");
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "beta must lie in (0, 1], got " + std::to_string(beta));
  }
  const std::size_t n = d.num_rows();
  if (n < kMinClientRows * n_clients) {
    throw Error(ErrorCode::kDegeneratePartition,
                "degenerate partition: " + std::to_string(n) + " rows cannot give " +
                    std::to_string(n_clients) + " clients " + std::to_string(kMinClientRows) +
                    " rows each");
  }
  Rng rng(seed);
  const auto shares = power_shares(n_clients, beta, rng);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  rng.shuffle(rows.begin(), rows.end());

  // Every client gets the minimum first; the rest is dealt by share.
  const std::size_t rest = n - kMinClientRows * n_clients;
  std::vector<std::vector<std::size_t>> groups(n_clients);
  double cumulative = 0.0;
  std::size_t prev_bound = 0;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < n_clients; ++i) {
    cumulative += shares[i];
    const std::size_t bound =
        i + 1 == n_clients
            ? rest
            : std::min(rest, static_cast<std::size_t>(std::llround(cumulative * static_cast<double>(rest))));
    const std::size_t count = kMinClientRows + (bound - std::min(bound, prev_bound));
    prev_bound = std::max(prev_bound, bound);
    groups[i].assign(rows.begin() + static_cast<std::ptrdiff_t>(cursor),
                     rows.begin() + static_cast<std::ptrdiff_t>(cursor + count));
    cursor += count;
  }
  PartitionDescriptor desc{Regime::kQuantity, {{"beta", beta}}, "", seed, {}, {}};
  return horizontal(d, std::move(groups), std::move(desc));
}

Federation label_skew(const Dataset& d, std::size_t n_clients, double alpha,
                      std::size_t rows_per_client, std::uint64_t seed) {
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be positive, got " + std::to_string(alpha));
  }
  if (n_clients < 1 || rows_per_client < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_clients and rows_per_client must be positive");
  }
  if (n_clients * rows_per_client > d.num_rows()) {
    throw Error(ErrorCode::kDegeneratePartition,
                "label skew demands " + std::to_string(n_clients * rows_per_client) +
                    " rows but the dataset has " + std::to_string(d.num_rows()));
  }
  const auto counts = d.class_counts();
  if (counts.size() < 2 ||
      std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; })) {
    throw Error(ErrorCode::kTooFewClasses, "label skew needs every class present in the prior");
  }
  const std::size_t k = counts.size();
  std::vector<double> concentration(k);
  for (std::size_t c = 0; c < k; ++c) {
    concentration[c] = alpha * static_cast<double>(counts[c]) / static_cast<double>(d.num_rows());
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> pools(k);
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    pools[static_cast<std::size_t>(d.labels()[r])].push_back(r);
  }
  for (auto& pool : pools) rng.shuffle(pool.begin(), pool.end());
  std::vector<std::size_t> next(k, 0);

  std::vector<std::vector<std::size_t>> groups(n_clients);
  std::vector<double> weights(k);
  for (std::size_t i = 0; i < n_clients; ++i) {
    const auto q = sample_dirichlet(concentration, rng);
    for (std::size_t j = 0; j < rows_per_client; ++j) {
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        weights[c] = next[c] < pools[c].size() ? q[c] : 0.0;
        total += weights[c];
      }
      if (!(total > 0.0)) {
        // q has no mass left on classes with rows; fall back to what remains.
        for (std::size_t c = 0; c < k; ++c) {
          weights[c] = static_cast<double>(pools[c].size() - next[c]);
          total += weights[c];
        }
      }
      double u = rng.uniform() * total;
      std::size_t chosen = k;
      for (std::size_t c = 0; c < k; ++c) {
        if (weights[c] <= 0.0) continue;
        chosen = c;
        if (u < weights[c]) break;
        u -= weights[c];
      }
      groups[i].push_back(pools[chosen][next[chosen]++]);
    }
  }
  PartitionDescriptor desc{Regime::kLabel,
                           {{"alpha", alpha}, {"rows_per_client", static_cast<double>(rows_per_client)}},
                           "",
                           seed,
                           {},
                           {}};
  return horizontal(d, std::move(groups), std::move(desc));
}

Federation vertical_split(const Dataset& d, std::size_t n_clients, double p,
                          std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "p must lie in (0, 1], got " + std::to_string(p));
  }
  const std::size_t n_features = d.num_features();
  const auto draws = static_cast<std::size_t>(std::llround(p * static_cast<double>(n_features)));
  if (n_features == 0 || draws < 1) {
    throw Error(ErrorCode::kInvalidArgument, "p selects no features");
  }
  Rng rng(seed);
  Federation fed;
  fed.descriptor = PartitionDescriptor{Regime::kVertical, {{"p", p}}, "", seed, {}, {}};
  for (std::size_t i = 0; i < n_clients; ++i) {
    std::set<std::string> chosen;
    for (std::size_t j = 0; j < draws; ++j) {
      chosen.insert(d.schema().feature(rng.below(n_features)).name);
    }
    const std::vector<std::string> names(chosen.begin(), chosen.end());
    fed.clients.push_back(Client{static_cast<int>(i), d.select_features(names), chosen});
  }
  return fed;
}

Federation natural_split(const Dataset& d, std::string_view column) {
  const auto idx = d.schema().index_of(column);
  if (!idx) {
    throw Error(ErrorCode::kInvalidArgument,
                "partition column '" + std::string(column) + "' not found");
  }
  const FeatureSpec& spec = d.schema().feature(*idx);
  if (!spec.is_categorical()) {
    throw Error(ErrorCode::kInvalidArgument,
                "partition column '" + std::string(column) + "' is numeric");
  }
  std::vector<std::vector<std::size_t>> by_category(spec.vocabulary.size());
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    if (!d.is_missing(r, *idx)) by_category[d.code(r, *idx)].push_back(r);
  }
  Federation fed;
  fed.descriptor.regime = Regime::kNatural;
  fed.descriptor.column = std::string(column);
  int id = 0;
  for (std::size_t c = 0; c < by_category.size(); ++c) {
    Dataset group = d.subset(by_category[c]).drop_feature(column);
    if (!is_viable_client(group)) {
      fed.descriptor.dropped_groups.push_back(spec.vocabulary[c]);
      fed.descriptor.warnings.push_back(
          "dropped group '" + spec.vocabulary[c] + "' (" + std::to_string(group.num_rows()) +
          " rows): needs " + std::to_string(kMinClientRows) + " rows and " +
          std::to_string(kMinClassRows) + " of each class");
      continue;
    }
    const auto names = group.schema().feature_names();
    fed.clients.push_back(
        Client{id++, std::move(group), std::set<std::string>(names.begin(), names.end())});
  }
  return fed;
}

DefaultValues make_defaults(const Dataset& client_data, double epsilon, std::uint64_t seed) {
  if (client_data.num_rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot derive defaults from an empty dataset");
  }
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  Rng rng(seed);
  DefaultValues out;
  const Schema& schema = client_data.schema();
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const FeatureSpec& spec = schema.feature(f);
    if (spec.is_categorical()) {
      std::vector<std::size_t> counts(spec.vocabulary.size(), 0);
      for (std::size_t r = 0; r < client_data.num_rows(); ++r) {
        if (!client_data.is_missing(r, f)) ++counts[client_data.code(r, f)];
      }
      std::size_t best = 0;
      for (std::size_t k = 1; k < counts.size(); ++k) {
        if (counts[k] > counts[best] ||
            (counts[k] == counts[best] && spec.vocabulary[k] < spec.vocabulary[best])) {
          best = k;
        }
      }
      out.values.emplace(spec.name, spec.vocabulary[best]);
    } else {
      std::vector<double> values;
      values.reserve(client_data.num_rows());
      for (std::size_t r = 0; r < client_data.num_rows(); ++r) {
        if (!client_data.is_missing(r, f)) values.push_back(client_data.numeric(r, f));
      }
      const double noise = rng.normal();
      if (values.empty()) {
        out.values.emplace(spec.name, 0.0);
        continue;
      }
      const double sd = sample_sd(values);
      out.values.emplace(spec.name, median_of(std::move(values)) + noise * sd * epsilon);
    }
  }
  return out;
}

}  // namespace stackfed

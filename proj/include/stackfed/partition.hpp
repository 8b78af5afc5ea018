#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "stackfed/rng.hpp"
#include "stackfed/tabular.hpp"

namespace stackfed {

enum class Regime { kQuantity, kLabel, kVertical, kNatural };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view name);

// Smallest client a 0.6/0.2/0.2 stratified split can serve with both classes.
inline constexpr std::size_t kMinClientRows = 15;
// Rows each class needs so every split part holds at least one of it.
inline constexpr std::size_t kMinClassRows = 3;

struct PartitionDescriptor {
  Regime regime = Regime::kQuantity;
  std::vector<std::pair<std::string, double>> parameters;
  std::string column;  // natural regime only
  std::uint64_t seed = 0;
  std::vector<std::string> dropped_groups;
  std::vector<std::string> warnings;
};

struct Client {
  int id = 0;
  Dataset data;
  std::set<std::string> raw_feature_set;
};

struct Federation {
  std::vector<Client> clients;
  PartitionDescriptor descriptor;
};

// True when a client's data supports a stratified split with both classes in
// every part.
bool is_viable_client(const Dataset& d);

// Normalized power-distribution shares u_i^(1/beta) / sum.
std::vector<double> power_shares(std::size_t n_clients, double beta, Rng& rng);

// Dirichlet draw via log-space Gamma variates.
std::vector<double> sample_dirichlet(std::span<const double> concentration, Rng& rng);

Federation quantity_skew(const Dataset& d, std::size_t n_clients, double beta,
                         std::uint64_t seed);
Federation label_skew(const Dataset& d, std::size_t n_clients, double alpha,
                      std::size_t rows_per_client, std::uint64_t seed);
Federation vertical_split(const Dataset& d, std::size_t n_clients, double p,
                          std::uint64_t seed);
Federation natural_split(const Dataset& d, std::string_view column);

using DefaultValue = std::variant<double, std::string>;

// Constant fill values a client publishes for every raw feature it holds.
struct DefaultValues {
  std::map<std::string, DefaultValue> values;

  bool contains(const std::string& feature) const { return values.count(feature) != 0; }
};

// Categorical: modal label (ties to the lexicographically first). Numeric:
// median plus one N(0, (sd * epsilon)^2) draw, sd with the n-1 denominator.
DefaultValues make_defaults(const Dataset& client_data, double epsilon, std::uint64_t seed);

}  // namespace stackfed

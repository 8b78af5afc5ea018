#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stackfed/forest.hpp"
#include "stackfed/partition.hpp"
#include "stackfed/tabular.hpp"

namespace stackfed {

// A fitted forest plus the metadata other clients need to query it.
struct PublishedModel {
  int owner = 0;
  std::shared_ptr<const ForestModel> model;
  Schema schema;  // raw features the model was trained on
  DefaultValues defaults;
};

enum class StackingMode { kHeldOut, kPooled };

std::string_view to_string(StackingMode mode);
StackingMode parse_mode(std::string_view name);

struct AlignmentStats {
  std::size_t imputed_features = 0;
  std::size_t out_of_vocabulary = 0;
};

// Builds the matrix `pm.model` expects from a local dataset: shared raw
// features come from local values, features the local side lacks are filled
// with the publisher's defaults, extra local features are ignored. Local
// categories outside the publisher's vocabulary map to its default category.
EncodedMatrix align_features(const PublishedModel& pm, const Dataset& local,
                             AlignmentStats* stats = nullptr);

std::string meta_column_name(int owner);

// One positive-class probability column per base, in order.
EncodedMatrix build_meta_matrix(std::span<const PublishedModel> bases, const Dataset& local_rows);

// Positive-class predictions of fetched models over all rows of a client's
// data. Models are fixed for a round, so callers may compute this once and
// reuse it across split repeats and stacking modes.
struct FetchedPredictions {
  std::map<int, std::vector<double>> positive;
  std::vector<std::string> warnings;
};

FetchedPredictions predict_fetched(std::span<const PublishedModel> fetched, const Dataset& local,
                                   int requester);

struct ClientState {
  int client_id = 0;
  Dataset data;
  SplitTriple split;
  StackingMode mode = StackingMode::kHeldOut;
  DefaultValues defaults;
  std::shared_ptr<const ForestModel> public_model;
  std::shared_ptr<const ForestModel> private_model;
  std::shared_ptr<const ForestModel> meta_model;
  // Own private model first, then fetched owners in ascending id.
  std::vector<int> base_order;
  // Cached fetched-model predictions over all client rows, keyed by owner.
  std::map<int, std::vector<double>> fetched_positive;
  std::vector<std::string> warnings;

  // Training row sets implied by the mode.
  std::vector<std::size_t> private_rows() const;
  std::vector<std::size_t> meta_rows() const;
};

struct ClientReport {
  int client_id = 0;
  double private_ba = 0.0;
  double meta_ba = 0.0;
  double gain = 0.0;
  double self_importance = 0.0;
  std::map<int, double> contributions;
  // The meta-forest never split, so every score is zero.
  bool degenerate = false;
};

// Trains the private and meta models for `c.mode`. When `cache` is given it
// must hold predictions over all rows of `c.data`.
ClientState run_client(ClientState c, std::span<const PublishedModel> fetched,
                       const ForestParams& params, std::uint64_t seed,
                       const FetchedPredictions* cache = nullptr);

// Meta-feature matrix of `rows` for a trained client.
EncodedMatrix client_meta_matrix(const ClientState& c, std::span<const std::size_t> rows);

ClientReport evaluate_client(const ClientState& c);

}  // namespace stackfed

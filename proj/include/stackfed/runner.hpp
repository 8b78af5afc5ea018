#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stackfed/forest.hpp"
#include "stackfed/partition.hpp"
#include "stackfed/stacking.hpp"
#include "stackfed/tabular.hpp"

namespace stackfed {

struct SyntheticSource {
  std::size_t rows = 20000;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  std::filesystem::path dataset_path;
  std::string target_name = "y";
  // Used instead of dataset_path when set.
  std::optional<SyntheticSource> synthetic;

  Regime regime = Regime::kQuantity;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::size_t rows_per_client = 0;
  std::vector<double> ps;
  std::vector<double> epsilons{0.0};
  std::string column;

  std::size_t n_clients = 10;
  std::size_t partition_seeds = 10;
  std::size_t split_repeats = 5;
  std::vector<StackingMode> modes{StackingMode::kHeldOut, StackingMode::kPooled};
  ForestParams forest;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "results";
  // 0 = STACKFED_WORKERS or hardware concurrency.
  std::size_t workers = 0;

  void validate() const;
};

// JSON config document. Relative dataset/output paths resolve against
// `base_dir`.
ExperimentConfig parse_config(std::string_view json_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// One point of the parameter grid, e.g. {beta=0.5} or {p=0.3, epsilon=1}.
struct ParamPoint {
  std::vector<std::pair<std::string, double>> values;
  std::string column;  // natural regime

  std::string label() const;
  std::optional<double> get(std::string_view name) const;
};

std::vector<ParamPoint> parameter_points(const ExperimentConfig& cfg);

struct ResultRow {
  std::string regime;
  ParamPoint parameters;
  std::size_t partition_seed = 0;
  std::size_t repeat = 0;
  int client_id = 0;
  std::string mode;
  std::size_t n_private_rows = 0;
  double private_ba = 0.0;
  double meta_ba = 0.0;
  double gain = 0.0;
  double self_importance = 0.0;
  double importance = 0.0;
  double label_balance = 0.0;
  std::optional<double> jaccard_mean;
};

// One edge of a per-(point, seed, repeat, mode) contribution graph.
struct ContributionRecord {
  std::string regime;
  ParamPoint parameters;
  std::size_t partition_seed = 0;
  std::size_t repeat = 0;
  std::string mode;
  int from = 0;
  int to = 0;
  double weight = 0.0;
  std::optional<double> jaccard;  // vertical regime
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<ContributionRecord> contributions;
  std::vector<std::string> log;
  std::size_t skipped_cells = 0;
  std::size_t total_cells = 0;
};

std::size_t resolve_workers(std::size_t requested);

// Runs every (grid point, partition seed) cell. Degenerate cells are logged
// and skipped; throws only when every cell fails.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data);

// Loads (or synthesizes) and preprocesses the configured dataset.
Dataset load_experiment_data(const ExperimentConfig& cfg);

void sort_rows(std::vector<ResultRow>& rows);
void write_results(std::vector<ResultRow> rows, std::ostream& out);
void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> read_results(std::istream& in);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

void write_contributions(std::vector<ContributionRecord> records, std::ostream& out);
std::vector<ContributionRecord> read_contributions(std::istream& in);

// Writes one `from,to,weight` file per contribution graph into `dir`;
// returns the files written.
std::vector<std::filesystem::path> export_graphs(const std::vector<ContributionRecord>& records,
                                                 const std::filesystem::path& dir);

std::string format_real(double v);

struct PlotLine {
  std::vector<std::string> keys;
  std::size_t n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct PlotTable {
  std::string panel;
  std::vector<std::string> key_names;
  std::vector<PlotLine> lines;
  std::vector<std::string> warnings;
};

const std::vector<std::string>& plot_panels();

// Group-by aggregation for one figure panel. Panels keyed on pairwise
// similarity read `contributions`.
PlotTable plot_data(const std::vector<ResultRow>& rows,
                    const std::vector<ContributionRecord>& contributions,
                    std::string_view panel);
void write_plot_table(const PlotTable& table, std::ostream& out);
std::filesystem::path emit_plot_data(const std::vector<ResultRow>& rows,
                                     const std::vector<ContributionRecord>& contributions,
                                     std::string_view panel, const std::filesystem::path& out_dir);

}  // namespace stackfed
